/**
 * Typed client for the annotation service HTTP API.
 *
 * Consumes the API verbatim; the only configuration is the service base
 * URL. All methods throw ApiError with the HTTP status on non-2xx
 * responses so callers can branch on protocol conditions (403 not
 * qualified, 409 duplicate/already qualified).
 */

export type Criterion = 'coherency' | 'quality';
export type Choice = 'left' | 'right';

export interface TaskPayload {
  task_id: string;
  query: string;
  criterion: Criterion;
  left: string[];
  right: string[];
  display_seed: number;
}

export interface GoldTaskPayload {
  gold_id: string;
  query: string;
  left: string[];
  right: string[];
}

export interface QualificationResult {
  annotator_id: string;
  status: 'qualified' | 'rejected';
  score: number;
}

export interface ChoicePayload {
  task_id: string;
  annotator_id: string;
  criterion: Criterion;
  choice: Choice;
}

export interface Progress {
  tasks: number;
  complete: number;
  incomplete: number;
  judgments: number;
  per_annotator: Record<string, number>;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = 'ApiError';
  }
}

/** The slice of the service API the session consumes. */
export interface AnnotationClient {
  qualificationTasks(): Promise<GoldTaskPayload[]>;
  submitQualification(
    annotatorId: string,
    answers: Record<string, Choice>,
  ): Promise<QualificationResult>;
  nextTask(annotatorId: string, criterion: Criterion): Promise<TaskPayload | null>;
  submitJudgment(payload: ChoicePayload): Promise<void>;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function ensureOk(response: Response): Promise<Response> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: unknown };
      if (typeof body.detail === 'string') detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return response;
}

export class AnnotationApi implements AnnotationClient {
  private readonly fetchFn: FetchLike;

  constructor(private readonly baseUrl: string, fetchFn?: FetchLike) {
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, '') + path;
  }

  async qualificationTasks(): Promise<GoldTaskPayload[]> {
    const response = await ensureOk(await this.fetchFn(this.url('/qualification/tasks')));
    const body = (await response.json()) as { tasks: GoldTaskPayload[] };
    return body.tasks;
  }

  async submitQualification(
    annotatorId: string,
    answers: Record<string, Choice>,
  ): Promise<QualificationResult> {
    const response = await ensureOk(
      await this.fetchFn(this.url(`/annotators/${encodeURIComponent(annotatorId)}/qualification`), {
        method: 'POST',
        headers: { 'content-type': 'application/json' },
        body: JSON.stringify({ answers }),
      }),
    );
    return (await response.json()) as QualificationResult;
  }

  /** Next open task for this annotator, or null when the queue is exhausted. */
  async nextTask(annotatorId: string, criterion: Criterion): Promise<TaskPayload | null> {
    const response = await ensureOk(
      await this.fetchFn(
        this.url(
          `/tasks/next?annotator=${encodeURIComponent(annotatorId)}&criterion=${criterion}`,
        ),
      ),
    );
    if (response.status === 204) return null;
    return (await response.json()) as TaskPayload;
  }

  async submitJudgment(payload: ChoicePayload): Promise<void> {
    await ensureOk(
      await this.fetchFn(this.url('/judgments'), {
        method: 'POST',
        headers: { 'content-type': 'application/json' },
        body: JSON.stringify(payload),
      }),
    );
  }

  async progress(): Promise<Progress> {
    const response = await ensureOk(await this.fetchFn(this.url('/progress')));
    return (await response.json()) as Progress;
  }
}
