/**
 * Annotator session state machine, independent of any DOM.
 *
 * Flow: probe the task queue; a 403 routes into the qualification
 * sequence (gold tasks presented exactly like normal tasks, scored on
 * submit), anything else straight into annotation. Every transition
 * returns the new state; network failures become a retryable error state
 * and never lose a pending choice.
 */

import {
  AnnotationClient,
  ApiError,
  Choice,
  Criterion,
  GoldTaskPayload,
  QualificationResult,
  TaskPayload,
} from './api.js';

export type SessionState =
  | { kind: 'loading' }
  | {
      kind: 'qualification';
      tasks: GoldTaskPayload[];
      index: number;
      answers: Record<string, Choice>;
    }
  | { kind: 'rejected'; result: QualificationResult }
  | { kind: 'task'; task: TaskPayload; judged: number }
  | { kind: 'done'; judged: number }
  | { kind: 'error'; message: string };

export class AnnotationSession {
  private state: SessionState = { kind: 'loading' };
  private judged = 0;
  private inFlight = false;
  private retryAction: (() => Promise<SessionState>) | null = null;

  constructor(
    private readonly api: AnnotationClient,
    readonly annotatorId: string,
    readonly criterion: Criterion,
  ) {}

  get current(): SessionState {
    return this.state;
  }

  get judgedCount(): number {
    return this.judged;
  }

  /** True while a submission is on the wire; the UI disables submit then. */
  get busy(): boolean {
    return this.inFlight;
  }

  async start(): Promise<SessionState> {
    return this.guarded(async () => {
      try {
        return await this.fetchNext();
      } catch (error) {
        if (error instanceof ApiError && error.status === 403) {
          return this.beginQualification();
        }
        throw error;
      }
    });
  }

  /** Record the answer for the current gold task; submit after the last one. */
  async answerQualification(choice: Choice): Promise<SessionState> {
    const state = this.state;
    if (state.kind !== 'qualification') return this.state;
    return this.guarded(async () => {
      const gold = state.tasks[state.index];
      if (gold === undefined) throw new Error('qualification index out of range');
      const answers = { ...state.answers, [gold.gold_id]: choice };
      if (state.index + 1 < state.tasks.length) {
        return this.transition({
          kind: 'qualification',
          tasks: state.tasks,
          index: state.index + 1,
          answers,
        });
      }
      return this.submitQualification(answers);
    });
  }

  /** Submit the selected side for the current task and advance.

  When ``forTaskId`` is given, the submission is dropped unless it still
  addresses the task on screen — a stale double-submit can never judge a
  later task. */
  async submitChoice(choice: Choice, forTaskId?: string): Promise<SessionState> {
    const state = this.state;
    if (state.kind !== 'task') return this.state;
    if (forTaskId !== undefined && state.task.task_id !== forTaskId) return this.state;
    return this.guarded(async () => {
      try {
        await this.api.submitJudgment({
          task_id: state.task.task_id,
          annotator_id: this.annotatorId,
          criterion: this.criterion,
          choice,
        });
        this.judged += 1;
      } catch (error) {
        // duplicate judgment: already recorded server-side, skip forward
        if (!(error instanceof ApiError && error.status === 409)) throw error;
      }
      return this.fetchNext();
    });
  }

  /** Re-run the step that failed; no-op outside the error state. */
  async retry(): Promise<SessionState> {
    const action = this.retryAction;
    if (this.state.kind !== 'error' || action === null) return this.state;
    return this.guarded(action);
  }

  private async guarded(action: () => Promise<SessionState>): Promise<SessionState> {
    if (this.inFlight) return this.state;
    this.inFlight = true;
    try {
      return await action();
    } catch (error) {
      this.retryAction = action;
      return this.transition({
        kind: 'error',
        message: error instanceof Error ? error.message : String(error),
      });
    } finally {
      this.inFlight = false;
    }
  }

  private async beginQualification(): Promise<SessionState> {
    const tasks = await this.api.qualificationTasks();
    if (tasks.length === 0) {
      return this.transition({ kind: 'error', message: 'no qualification tasks configured' });
    }
    return this.transition({ kind: 'qualification', tasks, index: 0, answers: {} });
  }

  private async submitQualification(answers: Record<string, Choice>): Promise<SessionState> {
    let result: QualificationResult;
    try {
      result = await this.api.submitQualification(this.annotatorId, answers);
    } catch (error) {
      // already qualified (e.g. a re-submitted reload): proceed to tasks
      if (error instanceof ApiError && error.status === 409) return this.fetchNext();
      throw error;
    }
    if (result.status !== 'qualified') {
      return this.transition({ kind: 'rejected', result });
    }
    return this.fetchNext();
  }

  private async fetchNext(): Promise<SessionState> {
    const task = await this.api.nextTask(this.annotatorId, this.criterion);
    if (task === null) {
      return this.transition({ kind: 'done', judged: this.judged });
    }
    return this.transition({ kind: 'task', task, judged: this.judged });
  }

  private transition(state: SessionState): SessionState {
    this.state = state;
    if (state.kind !== 'error') this.retryAction = null;
    return state;
  }
}
