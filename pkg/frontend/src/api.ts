import type { IngredientEntry, RecommendResult } from "./store";

export async function fetchIngredients(): Promise<IngredientEntry[]> {
  const response = await fetch("/api/ingredients");
  if (!response.ok) {
    throw new Error(`ingredient list failed: HTTP ${response.status}`);
  }
  return response.json();
}

export async function requestRecommendations(
  ingredients: string[],
  n: number,
  signal?: AbortSignal,
): Promise<RecommendResult> {
  const response = await fetch("/api/recommend", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ ingredients, n }),
    signal,
  });
  if (!response.ok) {
    throw new Error(`recommend failed: HTTP ${response.status}`);
  }
  return response.json();
}
