/**
 * Pure state machine for the rating form.
 *
 * Invariant enforced here (and property-tested): submit is possible only
 * when both manikin scales are set XOR at least one inspection flag is set,
 * and buildPayload never yields an out-of-range or mixed payload.
 */
import {
  INSPECTION_FLAGS,
  type InspectionFlag,
  type RatingRequest,
  ratingRequestSchema,
} from "./schema.js";

export type Dimension = "activation" | "valence";

export interface FormState {
  segmentId: string | null;
  activation: number | null;
  valence: number | null;
  flags: readonly InspectionFlag[];
  /** guards against double-click double submission */
  submitInFlight: boolean;
  error: string | null;
}

export const initialForm: FormState = {
  segmentId: null,
  activation: null,
  valence: null,
  flags: [],
  submitInFlight: false,
  error: null,
};

export type FormEvent =
  | { type: "segment_loaded"; segmentId: string }
  | { type: "set_scale"; dimension: Dimension; value: number }
  | { type: "toggle_flag"; flag: InspectionFlag }
  | { type: "submit_requested" }
  | { type: "submit_acked" }
  | { type: "submit_failed"; message: string };

function isValidScaleValue(value: number): boolean {
  return Number.isInteger(value) && value >= 1 && value <= 9;
}

export function reduce(state: FormState, event: FormEvent): FormState {
  switch (event.type) {
    case "segment_loaded":
      return { ...initialForm, segmentId: event.segmentId };
    case "set_scale": {
      if (!isValidScaleValue(event.value) || state.submitInFlight) {
        return state;
      }
      // picking a rating leaves flag-only mode; the two are exclusive
      return { ...state, [event.dimension]: event.value, flags: [], error: null };
    }
    case "toggle_flag": {
      if (state.submitInFlight || !INSPECTION_FLAGS.includes(event.flag)) {
        return state;
      }
      const has = state.flags.includes(event.flag);
      const flags = has
        ? state.flags.filter((f) => f !== event.flag)
        : [...state.flags, event.flag];
      // any flag clears the manikin ratings (flag-only records omit them)
      return {
        ...state,
        flags,
        activation: flags.length ? null : state.activation,
        valence: flags.length ? null : state.valence,
        error: null,
      };
    }
    case "submit_requested":
      if (!canSubmit(state)) {
        return state;
      }
      return { ...state, submitInFlight: true, error: null };
    case "submit_acked":
      // the app follows with segment_loaded for the next item
      return { ...state, submitInFlight: false };
    case "submit_failed":
      // inline message, form contents preserved for correction/retry
      return { ...state, submitInFlight: false, error: event.message };
  }
}

/** Both scales set XOR >= 1 flag, nothing in flight, a segment on screen. */
export function canSubmit(state: FormState): boolean {
  if (state.segmentId === null || state.submitInFlight) {
    return false;
  }
  const rated = state.activation !== null && state.valence !== null;
  const flagged = state.flags.length > 0;
  return rated !== flagged && (rated || flagged);
}

/**
 * Build the POST /ratings body, or null when the form invariant is not
 * satisfied.  The result is schema-validated, so a bug upstream fails loudly
 * here rather than emitting a bad request.
 */
export function buildPayload(
  state: FormState,
  sessionId: string,
  annotatorId: string,
): RatingRequest | null {
  if (!canSubmit(state) || state.segmentId === null) {
    return null;
  }
  const payload = {
    session_id: sessionId,
    annotator_id: annotatorId,
    segment_id: state.segmentId,
    activation: state.activation,
    valence: state.valence,
    flags: [...state.flags],
  };
  return ratingRequestSchema.parse(payload);
}
