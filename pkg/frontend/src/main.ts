import { ApiError, ContestClient } from './api.js';
import { maxWeight } from './extraction.js';
import { GraphView } from './graphView.js';
import { SessionPanel } from './sessionPanel.js';
import type { SessionState } from './types.js';

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing #${id}`);
  return found as T;
}

function toast(message: string): void {
  const box = el<HTMLDivElement>('toast');
  box.textContent = message;
  box.classList.add('visible');
  setTimeout(() => box.classList.remove('visible'), 4000);
}

export function bootstrap(): void {
  const client = new ContestClient('');
  const view = new GraphView(el('graph'), {
    onPendingChange: (pending) => {
      el<HTMLButtonElement>('submit').textContent = pending.length
        ? `Cut ${pending.length} edge(s) and retrain`
        : 'Submit';
    },
  });
  const panel = new SessionPanel(el('panel'));
  const slider = el<HTMLInputElement>('tau');
  const sliderValue = el<HTMLSpanElement>('tau-value');
  let current: SessionState | null = null;

  function show(state: SessionState): void {
    current = state;
    view.update(state);
    panel.update(state);
    const top = Math.max(maxWeight(state.adjacency), 1e-6);
    slider.max = String(top * 1.05);
    slider.step = String(top / 200);
    slider.value = String(state.tau);
    sliderValue.textContent = state.tau.toFixed(4);
    el<HTMLDivElement>('session-banner').textContent =
      `session ${state.session_id} (${state.task}), ${state.graph.edges.length} edges shown`;
  }

  slider.addEventListener('input', () => {
    const tau = Number(slider.value);
    sliderValue.textContent = tau.toFixed(4);
    view.setTau(tau);
  });

  el<HTMLButtonElement>('create').addEventListener('click', async () => {
    const dataset = el<HTMLInputElement>('dataset').value.trim();
    if (!dataset) {
      toast('enter a dataset path (CSV or bundle directory on the server)');
      return;
    }
    try {
      const state = await client.createSession({
        dataset,
        task: el<HTMLSelectElement>('task').value,
        config: { seed: Number(el<HTMLInputElement>('seed').value || '0') },
      });
      show(state);
    } catch (error) {
      toast(error instanceof ApiError ? error.message : String(error));
    }
  });

  el<HTMLButtonElement>('attach').addEventListener('click', async () => {
    const id = el<HTMLInputElement>('session-id').value.trim();
    try {
      show(await client.getSession(id));
    } catch (error) {
      toast(error instanceof ApiError && error.status === 404 ? 'session expired or unknown' : String(error));
    }
  });

  el<HTMLButtonElement>('submit').addEventListener('click', async () => {
    if (!current) return;
    const id = current.session_id;
    const pending = view.pendingCuts();
    const tau = view.getTau();
    try {
      if (pending.length > 0) {
        let state = await client.revise(id, { kind: 'cut-edges', edges: pending });
        show(state);
        if (state.status === 'training') {
          state = await client.pollUntilReady(id);
          show(state);
          toast('retraining finished');
        }
      } else if (Math.abs(tau - current.tau) > 1e-12) {
        show(await client.revise(id, { kind: 'set-tau', tau }));
      } else if (window.confirm('No pending changes: accept the current graph and close the session?')) {
        const accepted = await client.accept(id);
        toast(`accepted; checkpoint at ${accepted.checkpoint}`);
        show(await client.getSession(id));
      }
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        toast('training in progress; wait for it to finish');
      } else if (error instanceof ApiError && error.status === 404) {
        toast('session expired');
      } else {
        toast(String(error));
      }
    }
  });
}

if (typeof document !== 'undefined' && document.getElementById('graph')) {
  bootstrap();
}
