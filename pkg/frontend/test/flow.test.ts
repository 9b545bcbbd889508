import { describe, expect, it } from "vitest";

import { AnnotationApi } from "../src/api.js";
import { AnnotationController } from "../src/flow.js";

/** Scripted stand-in for the annotation service, mimicking its cursor. */
class FakeServer {
  queue: string[];
  cursor = 0;
  posts: unknown[] = [];
  failAudioOnce = false;
  rejectNextRating = false;

  constructor(queue: string[]) {
    this.queue = queue;
  }

  fetch = async (url: string, init?: RequestInit): Promise<Response> => {
    const body = init?.body ? JSON.parse(init.body as string) : null;
    if (url.endsWith("/sessions") && init?.method === "POST") {
      return json({
        session_id: "sess-1",
        annotator_id: body.annotator_id,
        progress: { position: 0, total: this.queue.length },
      });
    }
    if (url.includes("/next")) {
      if (this.cursor >= this.queue.length) {
        return json({ done: true, progress: { position: this.cursor, total: this.queue.length } });
      }
      return json({
        done: false,
        segment_id: this.queue[this.cursor],
        audio_url: `/segments/${this.queue[this.cursor]}/audio`,
        progress: { position: this.cursor, total: this.queue.length },
      });
    }
    if (url.endsWith("/ratings") && init?.method === "POST") {
      if (this.rejectNextRating) {
        this.rejectNextRating = false;
        return new Response(JSON.stringify({ detail: "validation error" }), { status: 400 });
      }
      this.posts.push(body);
      if (body.segment_id === this.queue[this.cursor]) {
        this.cursor += 1;
      }
      return json({ status: "ok" });
    }
    if (url.includes("/audio")) {
      if (this.failAudioOnce) {
        this.failAudioOnce = false;
        return new Response("gone", { status: 503 });
      }
      return new Response(new Blob([new Uint8Array([82, 73, 70, 70])]), { status: 200 });
    }
    return new Response("not found", { status: 404 });
  };
}

function json(payload: unknown): Response {
  return new Response(JSON.stringify(payload), {
    status: 200,
    headers: { "content-type": "application/json" },
  });
}

function controllerFor(server: FakeServer): AnnotationController {
  return new AnnotationController(new AnnotationApi("", server.fetch));
}

async function rateCurrent(c: AnnotationController, activation: number, valence: number) {
  c.dispatch({ type: "set_scale", dimension: "activation", value: activation });
  c.dispatch({ type: "set_scale", dimension: "valence", value: valence });
  await c.submit();
}

describe("session flow", () => {
  it("walks the whole queue and reaches the completion state", async () => {
    const server = new FakeServer(["g1", "g2", "g3"]);
    const c = controllerFor(server);
    await c.start("ann1");
    expect(c.state.phase).toBe("rating");
    expect(c.state.segmentId).toBe("g1");
    await rateCurrent(c, 5, 6);
    await rateCurrent(c, 2, 8);
    c.dispatch({ type: "toggle_flag", flag: "noise_dominant" });
    await c.submit();
    expect(c.state.phase).toBe("done");
    expect(server.posts).toHaveLength(3);
    expect((server.posts[2] as { flags: string[] }).flags).toEqual(["noise_dominant"]);
  });

  it("resumes at the server cursor after a reload", async () => {
    const server = new FakeServer(["g1", "g2"]);
    const first = controllerFor(server);
    await first.start("ann1");
    await rateCurrent(first, 4, 4);
    // simulate a reload: a brand-new controller against the same server
    const second = controllerFor(server);
    await second.start("ann1");
    expect(second.state.segmentId).toBe("g2");
    expect(second.state.progress.position).toBe(1);
  });

  it("audio failure shows a retry path and never skips", async () => {
    const server = new FakeServer(["g1"]);
    server.failAudioOnce = true;
    const c = controllerFor(server);
    await c.start("ann1");
    expect(c.state.phase).toBe("audio_error");
    expect(c.state.segmentId).toBe("g1");
    await c.fetchAudio(); // retry affordance
    expect(c.state.phase).toBe("rating");
    expect(c.state.segmentId).toBe("g1");
  });

  it("double-click submit posts exactly once and advances once", async () => {
    const server = new FakeServer(["g1", "g2"]);
    const c = controllerFor(server);
    await c.start("ann1");
    c.dispatch({ type: "set_scale", dimension: "activation", value: 7 });
    c.dispatch({ type: "set_scale", dimension: "valence", value: 3 });
    await Promise.all([c.submit(), c.submit()]);
    expect(server.posts).toHaveLength(1);
    expect(c.state.segmentId).toBe("g2");
  });

  it("a 400 keeps the form and surfaces the message inline", async () => {
    const server = new FakeServer(["g1"]);
    server.rejectNextRating = true;
    const c = controllerFor(server);
    await c.start("ann1");
    await rateCurrent(c, 9, 1);
    expect(c.state.phase).toBe("rating");
    expect(c.state.form.error).toContain("validation error");
    expect(c.state.form.activation).toBe(9);
    // retry succeeds
    await c.submit();
    expect(c.state.phase).toBe("done");
  });

  it("payloads match the rating record schema", async () => {
    const server = new FakeServer(["g1"]);
    const c = controllerFor(server);
    await c.start("ann1");
    await rateCurrent(c, 7, 3);
    const sent = server.posts[0] as Record<string, unknown>;
    expect(sent).toEqual({
      session_id: "sess-1",
      annotator_id: "ann1",
      segment_id: "g1",
      activation: 7,
      valence: 3,
      flags: [],
    });
  });
});
