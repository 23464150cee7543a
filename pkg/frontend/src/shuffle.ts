/**
 * Seeded display-order shuffling.
 *
 * Facet order inside each panel is randomized once per render from the
 * task's display seed, so a task always looks the same to every annotator
 * while revealing nothing about its construction order.
 */

/** mulberry32: tiny deterministic PRNG over a 32-bit seed. */
export function seededRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function shuffled<T>(items: readonly T[], rng: () => number): T[] {
  const result = [...items];
  for (let i = result.length - 1; i > 0; i--) {
    const j = Math.floor(rng() * (i + 1));
    [result[i], result[j]] = [result[j]!, result[i]!];
  }
  return result;
}

/** Both panels' display orders for a task, derived from one seed. */
export function displayOrders(
  left: readonly string[],
  right: readonly string[],
  seed: number,
): { left: string[]; right: string[] } {
  const rng = seededRng(seed);
  return { left: shuffled(left, rng), right: shuffled(right, rng) };
}
