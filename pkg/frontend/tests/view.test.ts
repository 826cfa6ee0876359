// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from 'vitest';

import { GraphView } from '../src/graphView.js';
import { SessionPanel } from '../src/sessionPanel.js';
import type { SessionState } from '../src/types.js';

function makeState(): SessionState {
  // Target 0 causes 1; 2 causes 1 weakly; 2 causes 3.
  const adjacency = [
    [0, 0.5, 0, 0],
    [0.1, 0, 0, 0],
    [0, 0.05, 0, 0.3],
    [0, 0, 0.1, 0],
  ];
  return {
    session_id: 'abc',
    status: 'ready',
    error: null,
    task: 'regression',
    tau: 0,
    contested: true,
    node_names: ['Y', 'X1', 'X2', 'X3'],
    graph: {
      nodes: ['Y', 'X1', 'X2', 'X3'],
      edges: [
        [0, 1],
        [2, 1],
        [2, 3],
      ],
      kind: 'full',
    },
    edge_weights: [
      { edge: [0, 1], w: 0.5 },
      { edge: [2, 1], w: 0.05 },
      { edge: [2, 3], w: 0.3 },
    ],
    candidate_edges: [
      { edge: [0, 1], w: 0.5 },
      { edge: [2, 1], w: 0.05 },
      { edge: [2, 3], w: 0.3 },
    ],
    adjacency,
    banned_edges: [],
    metrics: { mse: 0.42, edges: 3 },
    history: [
      { revision: null, injected_graph: null, extracted_graph: { nodes: [], edges: [], kind: 'full' }, metrics: { mse: 0.42, edges: 3 } },
      { revision: { kind: 'set-tau', tau: 0.1, edges: [] }, injected_graph: null, extracted_graph: { nodes: [], edges: [], kind: 'full' }, metrics: { mse: 0.40, edges: 2 } },
    ],
  };
}

describe('GraphView', () => {
  let container: HTMLElement;
  let view: GraphView;

  beforeEach(() => {
    document.body.innerHTML = '<div id="g"></div>';
    container = document.getElementById('g')!;
    view = new GraphView(container);
    view.update(makeState());
  });

  it('renders every edge and node', () => {
    expect(container.querySelectorAll('g.edge').length).toBe(3);
    expect(container.querySelectorAll('g.node').length).toBe(4);
  });

  it('marks the target node and its outgoing edges distinctly', () => {
    expect(container.querySelector('g.node.target [data-node]')).toBeNull();
    const target = container.querySelector('g.node.target');
    expect(target?.getAttribute('data-node')).toBe('0');
    const outgoing = container.querySelectorAll('g.edge.target-outgoing');
    expect(outgoing.length).toBe(1);
    expect(outgoing[0].getAttribute('data-edge')).toBe('0->1');
  });

  it('slider above the max weight hides every edge', () => {
    view.setTau(10);
    expect(container.querySelectorAll('g.edge').length).toBe(0);
  });

  it('slider filters with the extraction rule', () => {
    view.setTau(0.1);
    const shown = [...container.querySelectorAll('g.edge')].map((e) => e.getAttribute('data-edge'));
    expect(shown.sort()).toEqual(['0->1', '2->3']);
  });

  it('clicking an edge toggles pending-cut state', () => {
    const edge = container.querySelector('g.edge[data-edge="0->1"]')!;
    edge.dispatchEvent(new window.Event('click'));
    expect(view.pendingCuts()).toEqual([[0, 1]]);
    const again = container.querySelector('g.edge[data-edge="0->1"]')!;
    expect(again.classList.contains('pending-cut')).toBe(true);
    again.dispatchEvent(new window.Event('click'));
    expect(view.pendingCuts()).toEqual([]);
  });
});

describe('SessionPanel', () => {
  it('shows status and metric deltas across revisions', () => {
    document.body.innerHTML = '<div id="p"></div>';
    const panel = new SessionPanel(document.getElementById('p')!);
    panel.update(makeState());
    const html = document.getElementById('p')!.innerHTML;
    expect(html).toContain('status: ready');
    expect(html).toContain('set-tau');
    expect(html).toContain('improved');
  });
});
