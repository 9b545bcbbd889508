/**
 * Thin typed client for the annotation service.  `fetch` is injectable so
 * the session flow is testable without a browser or a live server.
 */
import {
  type NextItem,
  type RatingRequest,
  type SessionResponse,
  nextItemSchema,
  sessionResponseSchema,
} from "./schema.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function detailOf(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { detail?: unknown };
    return typeof body.detail === "string" ? body.detail : resp.statusText;
  } catch {
    return resp.statusText;
  }
}

export class AnnotationApi {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async createSession(annotatorId: string, seed = 0): Promise<SessionResponse> {
    const resp = await this.fetchImpl(`${this.base}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ annotator_id: annotatorId, seed }),
    });
    if (!resp.ok) {
      throw new ApiError(resp.status, await detailOf(resp));
    }
    return sessionResponseSchema.parse(await resp.json());
  }

  /** The server cursor is authoritative: this never advances anything. */
  async nextItem(sessionId: string): Promise<NextItem> {
    const resp = await this.fetchImpl(`${this.base}/sessions/${sessionId}/next`);
    if (!resp.ok) {
      throw new ApiError(resp.status, await detailOf(resp));
    }
    return nextItemSchema.parse(await resp.json());
  }

  async submitRating(payload: RatingRequest): Promise<void> {
    const resp = await this.fetchImpl(`${this.base}/ratings`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!resp.ok) {
      throw new ApiError(resp.status, await detailOf(resp));
    }
  }

  async fetchAudio(audioUrl: string): Promise<Blob> {
    const resp = await this.fetchImpl(`${this.base}${audioUrl}`);
    if (!resp.ok) {
      throw new ApiError(resp.status, await detailOf(resp));
    }
    return resp.blob();
  }
}
