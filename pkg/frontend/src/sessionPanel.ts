import type { SessionState } from './types.js';

function metricName(state: SessionState): string {
  return state.task === 'classification' ? 'auc' : 'mse';
}

function formatDelta(current: number, previous: number, lowerIsBetter: boolean): string {
  const delta = current - previous;
  if (delta === 0) return '=';
  const improved = lowerIsBetter ? delta < 0 : delta > 0;
  return `${improved ? 'improved' : 'worsened'} ${delta > 0 ? '+' : ''}${delta.toFixed(4)}`;
}

/**
 * Side panel: session status, current threshold, and the revision timeline
 * with a per-revision metric and its delta against the previous entry.
 */
export class SessionPanel {
  constructor(private readonly container: HTMLElement) {}

  update(state: SessionState): void {
    const metric = metricName(state);
    const lowerIsBetter = metric === 'mse';
    const rows = state.history.map((entry, index) => {
      const kind = entry.revision ? entry.revision.kind : 'initial';
      const value = entry.metrics[metric];
      let delta = '';
      if (index > 0) {
        const previous = state.history[index - 1].metrics[metric];
        if (typeof previous === 'number' && typeof value === 'number') {
          delta = ` <span class="delta">(${formatDelta(value, previous, lowerIsBetter)})</span>`;
        }
      }
      const edges = entry.metrics['edges'];
      const shownValue = typeof value === 'number' ? value.toFixed(4) : 'n/a';
      return `<li class="revision ${kind}"><strong>${kind}</strong> ${metric}=${shownValue}${delta}, edges=${edges ?? '?'}</li>`;
    });
    this.container.innerHTML = `
      <div class="status status-${state.status}">status: ${state.status}${state.error ? ` (${state.error})` : ''}</div>
      <div class="tau">server tau: ${state.tau}</div>
      <div class="banned">banned edges: ${state.banned_edges.length}</div>
      <ol class="history">${rows.join('')}</ol>
    `;
  }
}
