// Pure render helpers: state in, HTML strings out. Keeping these free of
// DOM access lets the ordering/formatting contract run headless.

import type { IngredientEntry, Suggestion } from "./store";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

// Suggestions render in server order with the server's ranks; fits are
// shown to 3 decimals. Nothing is re-sorted or renumbered client-side.
export function renderSuggestions(suggestions: Suggestion[], pending: boolean): string {
  if (suggestions.length === 0) {
    return `<li class="hint">${pending ? "thinking…" : "add an ingredient to get suggestions"}</li>`;
  }
  return suggestions
    .map(
      (s) =>
        `<li class="suggestion" data-name="${escapeHtml(s.name)}" tabindex="0">` +
        `<span class="rank">${s.rank}</span>` +
        `<span class="name">${escapeHtml(s.name)}</span>` +
        `<span class="fit">${s.fit.toFixed(3)}</span></li>`,
    )
    .join("");
}

export function renderRecipe(recipe: string[]): string {
  if (recipe.length === 0) {
    return `<li class="hint">your recipe is empty</li>`;
  }
  return recipe
    .map(
      (name) =>
        `<li class="chip" data-name="${escapeHtml(name)}">` +
        `<span class="name">${escapeHtml(name)}</span>` +
        `<button class="remove" data-name="${escapeHtml(name)}" ` +
        `aria-label="remove ${escapeHtml(name)}">×</button></li>`,
    )
    .join("");
}

export function renderPantry(
  entries: IngredientEntry[],
  recipe: string[],
  activeIndex: number,
): string {
  if (entries.length === 0) {
    return `<li class="hint">no matches</li>`;
  }
  const inRecipe = new Set(recipe);
  return entries
    .map((e, index) => {
      const classes = ["pantry-item"];
      if (index === activeIndex) classes.push("active");
      if (inRecipe.has(e.name)) classes.push("taken");
      return (
        `<li class="${classes.join(" ")}" data-name="${escapeHtml(e.name)}">` +
        `<span class="name">${escapeHtml(e.name)}</span>` +
        `<span class="count">${e.count}</span></li>`
      );
    })
    .join("");
}
