import type { Edge } from './types.js';

export interface NodePosition {
  x: number;
  y: number;
  layer: number;
}

export interface LayoutOptions {
  layerSpacing?: number;
  nodeSpacing?: number;
  marginX?: number;
  marginY?: number;
}

/**
 * Deterministic layered layout: each node sits at its longest-path depth,
 * ordered within a layer by node index. No randomness, so two renders of
 * the same graph are pixel-identical and screenshots stay comparable
 * across revisions.
 */
export function layeredLayout(
  nodeCount: number,
  edges: Edge[],
  options: LayoutOptions = {},
): NodePosition[] {
  const { layerSpacing = 160, nodeSpacing = 70, marginX = 60, marginY = 40 } = options;
  const layer = longestPathLayers(nodeCount, edges);
  const byLayer = new Map<number, number[]>();
  for (let node = 0; node < nodeCount; node++) {
    const l = layer[node];
    if (!byLayer.has(l)) byLayer.set(l, []);
    byLayer.get(l)!.push(node);
  }
  const positions: NodePosition[] = new Array(nodeCount);
  for (const [l, nodes] of byLayer) {
    nodes.sort((a, b) => a - b);
    nodes.forEach((node, index) => {
      positions[node] = {
        x: marginX + l * layerSpacing,
        y: marginY + index * nodeSpacing,
        layer: l,
      };
    });
  }
  return positions;
}

/** Longest-path-from-source depth per node; cycles would never arrive here
 * (the server extracts DAGs), but a defensive cap stops infinite loops. */
export function longestPathLayers(nodeCount: number, edges: Edge[]): number[] {
  const layer = new Array<number>(nodeCount).fill(0);
  for (let pass = 0; pass < nodeCount; pass++) {
    let changed = false;
    for (const [i, k] of edges) {
      if (layer[k] < layer[i] + 1) {
        layer[k] = layer[i] + 1;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return layer;
}
