/**
 * DOM layer: renders session state into a root element and funnels user
 * input (clicks and arrow/enter keys, which produce identical payloads)
 * into the session state machine. One submission is in flight at a time;
 * the submit control is disabled until a side is selected and while a
 * request is pending.
 *
 * Qualification tasks render through the same panels as real tasks; the
 * DOM only ever sees the served payload fields, so it cannot leak which
 * side is the reference.
 */

import { Choice, Criterion } from './api.js';
import { AnnotationSession, SessionState } from './session.js';
import { displayOrders } from './shuffle.js';

/** Worker-facing prompt wording is configurable content, not behavior. */
export const CRITERION_PROMPTS: Record<Criterion, string> = {
  coherency:
    'Which option is the more coherent set of facets for this query? ' +
    'Coherent facets share one level of abstraction and one topical axis.',
  quality:
    'Which option is the higher-quality set of facets for this query, ' +
    'i.e. more likely to resolve what the searcher meant?',
};

interface PanelData {
  query: string;
  prompt: string;
  left: string[];
  right: string[];
  progressLabel: string;
}

export class AnnotationApp {
  private selected: Choice | null = null;
  private operation: Promise<unknown> = Promise.resolve();
  private pendingSubmit = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly session: AnnotationSession,
    private readonly prompts: Record<Criterion, string> = CRITERION_PROMPTS,
  ) {
    root.addEventListener('keydown', (event) => this.onKeydown(event as KeyboardEvent));
  }

  async start(): Promise<void> {
    await this.run(() => this.session.start());
  }

  /** Resolves when no transition is pending (for tests and scripting). */
  whenIdle(): Promise<unknown> {
    return this.operation;
  }

  private run(action: () => Promise<SessionState>): Promise<void> {
    const next = this.operation.then(async () => {
      const state = await action();
      this.selected = null;
      this.render(state);
    });
    this.operation = next;
    return next;
  }

  private onKeydown(event: KeyboardEvent): void {
    if (event.key === 'ArrowLeft') this.select('left');
    else if (event.key === 'ArrowRight') this.select('right');
    else if (event.key === 'Enter') this.submit();
  }

  private select(choice: Choice): void {
    if (this.session.busy) return;
    this.selected = choice;
    for (const panel of this.root.querySelectorAll<HTMLElement>('.option-panel')) {
      panel.classList.toggle('selected', panel.dataset.side === choice);
    }
    const submit = this.root.querySelector<HTMLButtonElement>('#submit');
    if (submit) submit.disabled = false;
  }

  private submit(): void {
    const choice = this.selected;
    const state = this.session.current;
    if (choice === null || this.pendingSubmit) return;
    const submit = this.root.querySelector<HTMLButtonElement>('#submit');
    if (submit) submit.disabled = true;

    let action: (() => Promise<SessionState>) | null = null;
    if (state.kind === 'qualification') {
      action = () => this.session.answerQualification(choice);
    } else if (state.kind === 'task') {
      const taskId = state.task.task_id;
      action = () => this.session.submitChoice(choice, taskId);
    }
    if (action === null) return;
    this.pendingSubmit = true;
    void this.run(action).finally(() => {
      this.pendingSubmit = false;
    });
  }

  // -- rendering -----------------------------------------------------------

  private render(state: SessionState): void {
    switch (state.kind) {
      case 'loading':
        this.root.innerHTML = '<p class="status">Loading…</p>';
        return;
      case 'qualification': {
        const gold = state.tasks[state.index];
        if (gold === undefined) return;
        this.renderTask({
          query: gold.query,
          prompt: this.prompts[this.session.criterion],
          left: gold.left,
          right: gold.right,
          progressLabel: `Qualification ${state.index + 1} of ${state.tasks.length}`,
        });
        return;
      }
      case 'task':
        this.renderTask({
          query: state.task.query,
          prompt: this.prompts[state.task.criterion],
          ...displayOrders(state.task.left, state.task.right, state.task.display_seed),
          progressLabel: `Judged so far: ${state.judged}`,
        });
        return;
      case 'rejected':
        this.root.innerHTML = `
          <div class="screen">
            <h2>Qualification not passed</h2>
            <p class="status">Score: ${(state.result.score * 100).toFixed(0)}%.
            Thank you for your interest.</p>
          </div>`;
        return;
      case 'done':
        this.root.innerHTML = `
          <div class="screen">
            <h2>All done</h2>
            <p class="status">You completed <span id="judged-count">${state.judged}</span>
            comparisons. Thank you!</p>
          </div>`;
        return;
      case 'error':
        this.root.innerHTML = `
          <div class="screen">
            <p class="banner" role="alert">Service unreachable or request failed:
            ${escapeHtml(state.message)}</p>
            <button id="retry">Retry</button>
          </div>`;
        this.root.querySelector('#retry')?.addEventListener('click', () => {
          void this.run(() => this.session.retry());
        });
        return;
    }
  }

  private renderTask(data: PanelData): void {
    this.root.innerHTML = `
      <div class="task">
        <p class="progress">${escapeHtml(data.progressLabel)}</p>
        <h2 class="query">${escapeHtml(data.query)}</h2>
        <p class="prompt">${escapeHtml(data.prompt)}</p>
        <div class="options">
          ${panelHtml('left', 'Option A (left)', data.left)}
          ${panelHtml('right', 'Option B (right)', data.right)}
        </div>
        <button id="submit" disabled>Submit choice</button>
        <p class="hint">Use ← / → to choose, Enter to submit.</p>
      </div>`;
    for (const panel of this.root.querySelectorAll<HTMLElement>('.option-panel')) {
      panel.addEventListener('click', () => this.select(panel.dataset.side as Choice));
    }
    this.root.querySelector('#submit')?.addEventListener('click', () => this.submit());
  }
}

function panelHtml(side: Choice, label: string, facets: readonly string[]): string {
  const items = facets.map((f) => `<li>${escapeHtml(f)}</li>`).join('');
  return `
    <section class="option-panel" data-side="${side}" tabindex="0">
      <h3>${label}</h3>
      <ul>${items}</ul>
    </section>`;
}

function escapeHtml(text: string): string {
  return text
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
    .replaceAll('"', '&quot;');
}
