import { edgeKey, extractEdges } from './extraction.js';
import { layeredLayout } from './layout.js';
import type { Edge, SessionState } from './types.js';

const SVG_NS = 'http://www.w3.org/2000/svg';

export interface GraphViewOptions {
  onPendingChange?: (pending: Edge[]) => void;
}

/**
 * SVG rendering of the extracted graph. The tau slider filters edges
 * locally with the same rule the server applies, so exploration costs no
 * round trips; clicking an edge toggles it as pending-cut. The target node
 * and the edges leaving it get distinct styling.
 */
export class GraphView {
  private pending = new Set<string>();
  private state: SessionState | null = null;
  private tau = 0;

  constructor(
    private readonly container: HTMLElement,
    private readonly options: GraphViewOptions = {},
  ) {}

  update(state: SessionState): void {
    this.state = state;
    this.tau = state.tau;
    this.pending.clear();
    this.render();
  }

  setTau(tau: number): void {
    this.tau = tau;
    this.render();
  }

  getTau(): number {
    return this.tau;
  }

  pendingCuts(): Edge[] {
    if (!this.state) return [];
    return this.state.graph.edges.filter((e) => this.pending.has(edgeKey(e)));
  }

  /** Edges shown at the current slider position. */
  visibleEdges(): Edge[] {
    if (!this.state) return [];
    const visible = extractEdges(this.state.adjacency, this.tau);
    const shown = new Set(this.state.graph.edges.map(edgeKey));
    // Never show more than the server's current graph (cycle repair and
    // cumulative bans live server-side); the slider can only narrow it.
    return visible.filter((e) => shown.has(edgeKey(e)));
  }

  private toggle(edge: Edge): void {
    const key = edgeKey(edge);
    if (this.pending.has(key)) {
      this.pending.delete(key);
    } else {
      this.pending.add(key);
    }
    this.render();
    this.options.onPendingChange?.(this.pendingCuts());
  }

  render(): void {
    if (!this.state) return;
    const state = this.state;
    const n = state.node_names.length;
    const edges = this.visibleEdges();
    const positions = layeredLayout(n, state.graph.edges);
    const weights = new Map(state.candidate_edges.map((e) => [edgeKey(e.edge), e.w]));

    const width = Math.max(...positions.map((p) => p.x)) + 140;
    const height = Math.max(...positions.map((p) => p.y)) + 80;
    const svg = document.createElementNS(SVG_NS, 'svg');
    svg.setAttribute('viewBox', `0 0 ${width} ${height}`);
    svg.setAttribute('class', 'graph-view');

    const defs = document.createElementNS(SVG_NS, 'defs');
    defs.innerHTML =
      '<marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="7" markerHeight="7" orient="auto-start-reverse">' +
      '<path d="M 0 0 L 10 5 L 0 10 z"/></marker>';
    svg.appendChild(defs);

    for (const edge of edges) {
      const [i, k] = edge;
      const from = positions[i];
      const to = positions[k];
      const group = document.createElementNS(SVG_NS, 'g');
      const classes = ['edge'];
      if (i === 0) classes.push('target-outgoing');
      if (this.pending.has(edgeKey(edge))) classes.push('pending-cut');
      group.setAttribute('class', classes.join(' '));
      group.setAttribute('data-edge', edgeKey(edge));

      const line = document.createElementNS(SVG_NS, 'line');
      line.setAttribute('x1', String(from.x + 18));
      line.setAttribute('y1', String(from.y));
      line.setAttribute('x2', String(to.x - 18));
      line.setAttribute('y2', String(to.y));
      line.setAttribute('marker-end', 'url(#arrow)');
      group.appendChild(line);

      const label = document.createElementNS(SVG_NS, 'text');
      label.setAttribute('x', String((from.x + to.x) / 2));
      label.setAttribute('y', String((from.y + to.y) / 2 - 6));
      label.setAttribute('class', 'edge-weight');
      const w = weights.get(edgeKey(edge));
      label.textContent = w === undefined ? '' : w.toFixed(3);
      group.appendChild(label);

      group.addEventListener('click', () => this.toggle(edge));
      svg.appendChild(group);
    }

    for (let node = 0; node < n; node++) {
      const pos = positions[node];
      const group = document.createElementNS(SVG_NS, 'g');
      group.setAttribute('class', node === 0 ? 'node target' : 'node');
      group.setAttribute('data-node', String(node));
      const circle = document.createElementNS(SVG_NS, 'circle');
      circle.setAttribute('cx', String(pos.x));
      circle.setAttribute('cy', String(pos.y));
      circle.setAttribute('r', '16');
      group.appendChild(circle);
      const text = document.createElementNS(SVG_NS, 'text');
      text.setAttribute('x', String(pos.x));
      text.setAttribute('y', String(pos.y + 30));
      text.setAttribute('class', 'node-label');
      text.textContent = state.node_names[node];
      group.appendChild(text);
      svg.appendChild(group);
    }

    this.container.replaceChildren(svg);
  }
}
