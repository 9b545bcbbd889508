/**
 * Session orchestration: one active item at a time, the server cursor as the
 * single source of truth.  Reloading mid-session just re-runs start(): the
 * server returns the same pending item, so the client resumes in place.
 */
import { AnnotationApi } from "./api.js";
import {
  type FormEvent,
  type FormState,
  buildPayload,
  canSubmit,
  initialForm,
  reduce,
} from "./reducer.js";
import type { SessionResponse } from "./schema.js";

export type FlowPhase =
  | "idle"
  | "loading_item"
  | "audio_error"
  | "rating"
  | "submitting"
  | "done";

export interface FlowState {
  phase: FlowPhase;
  session: SessionResponse | null;
  segmentId: string | null;
  audioUrl: string | null;
  audio: Blob | null;
  progress: { position: number; total: number };
  form: FormState;
  message: string | null;
}

const initialFlow: FlowState = {
  phase: "idle",
  session: null,
  segmentId: null,
  audioUrl: null,
  audio: null,
  progress: { position: 0, total: 0 },
  form: initialForm,
  message: null,
};

export class AnnotationController {
  state: FlowState = initialFlow;

  constructor(
    private readonly api: AnnotationApi,
    private readonly onChange: (state: FlowState) => void = () => {},
  ) {}

  private set(patch: Partial<FlowState>): void {
    this.state = { ...this.state, ...patch };
    this.onChange(this.state);
  }

  async start(annotatorId: string, seed = 0): Promise<void> {
    const session = await this.api.createSession(annotatorId, seed);
    this.set({ ...initialFlow, session });
    await this.loadNext();
  }

  /** Pull the server cursor's current item and its audio. */
  async loadNext(): Promise<void> {
    const session = this.state.session;
    if (!session) {
      throw new Error("no active session");
    }
    this.set({ phase: "loading_item", message: null });
    const item = await this.api.nextItem(session.session_id);
    if (item.done) {
      this.set({ phase: "done", segmentId: null, audioUrl: null, audio: null,
                 progress: item.progress });
      return;
    }
    this.set({
      segmentId: item.segment_id,
      audioUrl: item.audio_url,
      progress: item.progress,
      form: reduce(initialForm, { type: "segment_loaded", segmentId: item.segment_id }),
    });
    await this.fetchAudio();
  }

  /** Audio failures park the flow on a retry affordance; never skip ahead. */
  async fetchAudio(): Promise<void> {
    if (!this.state.audioUrl) {
      return;
    }
    try {
      const audio = await this.api.fetchAudio(this.state.audioUrl);
      this.set({ phase: "rating", audio, message: null });
    } catch (err) {
      this.set({ phase: "audio_error", audio: null,
                 message: err instanceof Error ? err.message : String(err) });
    }
  }

  dispatch(event: FormEvent): void {
    this.set({ form: reduce(this.state.form, event) });
  }

  get submitEnabled(): boolean {
    return this.state.phase === "rating" && canSubmit(this.state.form);
  }

  /**
   * Idempotent submit: the reducer's in-flight latch means a double click
   * produces exactly one request and one advance.
   */
  async submit(): Promise<void> {
    const { session } = this.state;
    if (!session || !this.submitEnabled) {
      return;
    }
    const payload = buildPayload(this.state.form, session.session_id, session.annotator_id);
    if (payload === null) {
      return;
    }
    this.dispatch({ type: "submit_requested" });
    this.set({ phase: "submitting" });
    try {
      await this.api.submitRating(payload);
      this.dispatch({ type: "submit_acked" });
      await this.loadNext();
    } catch (err) {
      this.dispatch({
        type: "submit_failed",
        message: err instanceof Error ? err.message : String(err),
      });
      this.set({ phase: "rating" });
    }
  }
}
