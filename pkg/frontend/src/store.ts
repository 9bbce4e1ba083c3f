// Recipe-builder state: a partial recipe, the pantry, and the live
// suggestion list. All server interaction goes through an injected
// recommend function so the store is testable without a network.

export interface IngredientEntry {
  name: string;
  count: number;
}

export interface Suggestion {
  name: string;
  fit: number;
  rank: number;
}

export interface RecommendResult {
  recommendations: Suggestion[];
  resolved: string[];
  unknown: string[];
}

export type RecommendFn = (
  ingredients: string[],
  n: number,
  signal?: AbortSignal,
) => Promise<RecommendResult>;

export interface UiState {
  pantry: IngredientEntry[];
  recipe: string[];
  suggestions: Suggestion[];
  pending: boolean;
  error: string | null;
}

type Listener = (state: UiState) => void;

export class RecipeBuilderStore {
  private state: UiState = {
    pantry: [],
    recipe: [],
    suggestions: [],
    pending: false,
    error: null,
  };

  // Monotone ticket: only the newest request may land. Bumped by every
  // state change that supersedes in-flight work, so stale responses are
  // discarded no matter how the network reorders them.
  private seq = 0;
  private controller: AbortController | null = null;
  private listeners = new Set<Listener>();

  constructor(
    private readonly recommendFn: RecommendFn,
    private readonly n: number = 10,
  ) {}

  getState(): UiState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  setPantry(entries: IngredientEntry[]): void {
    const pantry = [...entries].sort(
      (a, b) => b.count - a.count || a.name.localeCompare(b.name),
    );
    this.setState({ pantry });
  }

  inRecipe(name: string): boolean {
    return this.state.recipe.includes(name);
  }

  inPantry(name: string): boolean {
    return this.state.pantry.some((e) => e.name === name);
  }

  async addIngredient(name: string): Promise<void> {
    if (!this.inPantry(name) || this.inRecipe(name)) {
      return;
    }
    this.setState({
      recipe: [...this.state.recipe, name],
      // the chosen suggestion disappears immediately; the rest re-rank
      // when the response for the new state lands
      suggestions: this.state.suggestions.filter((s) => s.name !== name),
    });
    await this.refresh();
  }

  async removeIngredient(name: string): Promise<void> {
    if (!this.inRecipe(name)) {
      return;
    }
    const recipe = this.state.recipe.filter((r) => r !== name);
    if (recipe.length === 0) {
      // the server rejects empty recipes; just clear locally
      this.invalidateInFlight();
      this.setState({ recipe, suggestions: [], pending: false, error: null });
      return;
    }
    this.setState({ recipe });
    await this.refresh();
  }

  searchPantry(prefix: string): IngredientEntry[] {
    const needle = prefix.trim().toLowerCase();
    if (!needle) {
      return this.state.pantry;
    }
    return this.state.pantry.filter((e) => e.name.toLowerCase().includes(needle));
  }

  private invalidateInFlight(): void {
    this.seq += 1;
    this.controller?.abort();
    this.controller = null;
  }

  private async refresh(): Promise<void> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    const ticket = ++this.seq;
    const recipe = [...this.state.recipe];
    this.setState({ pending: true });
    try {
      const result = await this.recommendFn(recipe, this.n, controller.signal);
      if (ticket !== this.seq) {
        return; // stale: a newer state settled meanwhile
      }
      this.setState({
        suggestions: result.recommendations,
        pending: false,
        error: null,
      });
    } catch (err) {
      if (ticket !== this.seq) {
        return;
      }
      // keep the previous suggestions; surface a non-blocking banner
      this.setState({
        pending: false,
        error: err instanceof Error ? err.message : String(err),
      });
    }
  }

  private setState(patch: Partial<UiState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }
}
