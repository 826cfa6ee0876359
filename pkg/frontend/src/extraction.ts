import type { Edge } from './types.js';

/**
 * Client-side mirror of the server's edge creation rule: an edge (i, k)
 * exists when w[i][k] strictly beats both the reverse entry and the
 * threshold. Ties produce no edge. Must stay in lockstep with the server so
 * the slider preview and the authoritative extraction agree.
 */
export function extractEdges(adjacency: number[][], tau: number): Edge[] {
  const n = adjacency.length;
  const edges: Edge[] = [];
  for (let i = 0; i < n; i++) {
    for (let k = 0; k < n; k++) {
      if (i !== k && adjacency[i][k] > adjacency[k][i] && adjacency[i][k] > tau) {
        edges.push([i, k]);
      }
    }
  }
  return edges.sort((a, b) => a[0] - b[0] || a[1] - b[1]);
}

export function edgeKey(edge: Edge): string {
  return `${edge[0]}->${edge[1]}`;
}

export function sameEdgeSets(a: Edge[], b: Edge[]): boolean {
  if (a.length !== b.length) return false;
  const keys = new Set(a.map(edgeKey));
  return b.every((e) => keys.has(edgeKey(e)));
}

/** Largest adjacency entry, used to scale the tau slider. */
export function maxWeight(adjacency: number[][]): number {
  let max = 0;
  for (const row of adjacency) {
    for (const v of row) {
      if (v > max) max = v;
    }
  }
  return max;
}
