import { fetchIngredients, requestRecommendations } from "./api";
import { RecipeBuilderStore } from "./store";
import { renderPantry, renderRecipe, renderSuggestions } from "./view";
import "./style.css";

const store = new RecipeBuilderStore(requestRecommendations, 10);

const search = document.querySelector<HTMLInputElement>("#search")!;
const pantryList = document.querySelector<HTMLUListElement>("#pantry")!;
const recipeList = document.querySelector<HTMLUListElement>("#recipe")!;
const suggestionList = document.querySelector<HTMLUListElement>("#suggestions")!;
const banner = document.querySelector<HTMLDivElement>("#banner")!;

// Keyboard selection index within the current pantry filter.
let activeIndex = 0;

function filtered() {
  return store.searchPantry(search.value);
}

function render() {
  const state = store.getState();
  const matches = filtered();
  if (activeIndex >= matches.length) {
    activeIndex = Math.max(0, matches.length - 1);
  }
  pantryList.innerHTML = renderPantry(matches, state.recipe, activeIndex);
  recipeList.innerHTML = renderRecipe(state.recipe);
  suggestionList.innerHTML = renderSuggestions(state.suggestions, state.pending);
  banner.textContent = state.error ?? "";
  banner.hidden = state.error === null;
}

store.subscribe(render);

search.addEventListener("input", () => {
  activeIndex = 0;
  render();
});

search.addEventListener("keydown", (event) => {
  const matches = filtered();
  if (event.key === "ArrowDown") {
    event.preventDefault();
    activeIndex = Math.min(activeIndex + 1, matches.length - 1);
    render();
  } else if (event.key === "ArrowUp") {
    event.preventDefault();
    activeIndex = Math.max(activeIndex - 1, 0);
    render();
  } else if (event.key === "Enter") {
    event.preventDefault();
    const chosen = matches[activeIndex];
    if (chosen) {
      void store.addIngredient(chosen.name);
    }
  }
});

pantryList.addEventListener("click", (event) => {
  const item = (event.target as HTMLElement).closest<HTMLElement>(".pantry-item");
  if (item?.dataset.name) {
    void store.addIngredient(item.dataset.name);
  }
});

suggestionList.addEventListener("click", (event) => {
  const item = (event.target as HTMLElement).closest<HTMLElement>(".suggestion");
  if (item?.dataset.name) {
    void store.addIngredient(item.dataset.name);
  }
});

suggestionList.addEventListener("keydown", (event) => {
  if (event.key !== "Enter") return;
  const item = (event.target as HTMLElement).closest<HTMLElement>(".suggestion");
  if (item?.dataset.name) {
    void store.addIngredient(item.dataset.name);
  }
});

recipeList.addEventListener("click", (event) => {
  const button = (event.target as HTMLElement).closest<HTMLElement>(".remove");
  if (button?.dataset.name) {
    void store.removeIngredient(button.dataset.name);
  }
});

async function boot() {
  render();
  try {
    store.setPantry(await fetchIngredients());
  } catch (err) {
    banner.textContent = err instanceof Error ? err.message : String(err);
    banner.hidden = false;
  }
}

void boot();
