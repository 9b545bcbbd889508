/**
 * DOM layer: renders the controller state and forwards user interaction.
 * All decision logic lives in reducer.ts / flow.ts; this file only draws.
 */
import { AnnotationApi } from "./api.js";
import { AnnotationController, type FlowState } from "./flow.js";
import { activationManikin, valenceManikin } from "./manikins.js";
import type { Dimension } from "./reducer.js";
import { INSPECTION_FLAGS, type InspectionFlag } from "./schema.js";

const FLAG_LABELS: Record<InspectionFlag, string> = {
  noise_dominant: "Background noise dominates the speech",
  under_two_seconds_speech: "Less than two seconds of speech",
  not_talking_to_phone: "Subject is not talking to the phone",
  emotion_varies: "Emotion clearly varies over the segment",
  identifiable_info: "Contains identifiable information",
};

const ONBOARDING_KEY = "speechmood-onboarding-dismissed";

export function mountApp(root: HTMLElement): AnnotationController {
  const api = new AnnotationApi("");
  const controller = new AnnotationController(api, (state) => render(root, controller, state));
  render(root, controller, controller.state);

  document.addEventListener("keydown", (ev) => {
    if (controller.state.phase !== "rating") {
      return;
    }
    const target = ev.target as HTMLElement | null;
    if (target && (target.tagName === "INPUT" || target.tagName === "TEXTAREA")) {
      return;
    }
    // 1-9 sets activation; Shift+1-9 sets valence; Enter submits
    if (ev.key >= "1" && ev.key <= "9") {
      controller.dispatch({ type: "set_scale", dimension: "activation", value: Number(ev.key) });
    } else if (ev.shiftKey && /^Digit[1-9]$/.test(ev.code)) {
      controller.dispatch({
        type: "set_scale", dimension: "valence", value: Number(ev.code.slice(5)),
      });
    } else if (ev.key === "Enter") {
      void controller.submit();
    }
  });
  return controller;
}

function el(tag: string, attrs: Record<string, string> = {}, html = ""): HTMLElement {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, v);
  }
  if (html) {
    node.innerHTML = html;
  }
  return node;
}

function render(root: HTMLElement, controller: AnnotationController, state: FlowState): void {
  root.textContent = "";
  root.appendChild(el("h1", {}, "Listening session"));

  if (state.phase === "idle") {
    renderStart(root, controller);
    return;
  }
  if (state.phase === "done") {
    renderCompletion(root, state);
    return;
  }
  renderProgress(root, state);
  renderOnboarding(root);
  if (state.phase === "loading_item") {
    root.appendChild(el("p", { class: "status" }, "Loading next segment…"));
    return;
  }
  if (state.phase === "audio_error") {
    renderAudioError(root, controller, state);
    return;
  }
  renderRatingForm(root, controller, state);
}

function renderStart(root: HTMLElement, controller: AnnotationController): void {
  const form = el("form", { class: "start" });
  const input = el("input", {
    placeholder: "annotator id", required: "required", autofocus: "autofocus",
  }) as HTMLInputElement;
  const button = el("button", { type: "submit" }, "Start session");
  form.append(input, button);
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    if (input.value.trim()) {
      void controller.start(input.value.trim()).catch((err) => {
        root.appendChild(el("p", { class: "error" }, String(err)));
      });
    }
  });
  root.appendChild(form);
}

function renderProgress(root: HTMLElement, state: FlowState): void {
  const { position, total } = state.progress;
  root.appendChild(el("p", { class: "progress" }, `Segment ${position + 1} of ${total}`));
}

function renderOnboarding(root: HTMLElement): void {
  if (localStorage.getItem(ONBOARDING_KEY)) {
    return;
  }
  const panel = el("aside", { class: "onboarding" }, `
    <strong>Before you rate:</strong>
    <ul>
      <li>Judge only how the speech <em>sounds</em>; do not let what is said color your ratings.</li>
      <li>Speakers differ. When a new participant starts, listen to a few segments before rating to get a feel for their baseline.</li>
    </ul>`);
  const dismiss = el("button", { type: "button" }, "Got it");
  dismiss.addEventListener("click", () => {
    localStorage.setItem(ONBOARDING_KEY, "1");
    panel.remove();
  });
  panel.appendChild(dismiss);
  root.appendChild(panel);
}

function renderAudioError(root: HTMLElement, controller: AnnotationController,
                          state: FlowState): void {
  root.appendChild(el("p", { class: "error" },
    `Could not load the audio (${state.message ?? "unknown error"}).`));
  const retry = el("button", { type: "button" }, "Retry");
  retry.addEventListener("click", () => void controller.fetchAudio());
  root.appendChild(retry);
}

function renderScaleRow(controller: AnnotationController, dimension: Dimension,
                        selected: number | null): HTMLElement {
  const row = el("div", { class: "scale", "data-dimension": dimension });
  row.appendChild(el("span", { class: "scale-label" },
    dimension === "activation" ? "Activation (calm → excited)" : "Valence (negative → positive)"));
  for (let v = 1; v <= 9; v++) {
    const icon = dimension === "activation" ? activationManikin(v) : valenceManikin(v);
    const btn = el("button", {
      type: "button",
      class: "manikin" + (selected === v ? " selected" : ""),
      "aria-label": `${dimension} ${v}`,
    }, `${icon}<span class="value">${v}</span>`);
    btn.addEventListener("click", () =>
      controller.dispatch({ type: "set_scale", dimension, value: v }));
    row.appendChild(btn);
  }
  return row;
}

// The player outlives re-renders so rating clicks do not reset playback.
let playerSegment: string | null = null;
let playerEl: HTMLAudioElement | null = null;

function attachPlayer(root: HTMLElement, state: FlowState): void {
  if (!state.audio || state.segmentId === null) {
    return;
  }
  if (playerSegment !== state.segmentId || playerEl === null) {
    if (playerEl?.src) {
      URL.revokeObjectURL(playerEl.src);
    }
    playerEl = el("audio", { controls: "controls" }) as HTMLAudioElement;
    playerEl.src = URL.createObjectURL(state.audio);
    playerSegment = state.segmentId;
  }
  root.appendChild(playerEl);
}

function renderRatingForm(root: HTMLElement, controller: AnnotationController,
                          state: FlowState): void {
  attachPlayer(root, state);

  root.appendChild(renderScaleRow(controller, "activation", state.form.activation));
  root.appendChild(renderScaleRow(controller, "valence", state.form.valence));

  const flagBox = el("fieldset", { class: "flags" }, "<legend>Exclude this segment</legend>");
  for (const flag of INSPECTION_FLAGS) {
    const label = el("label");
    const box = el("input", { type: "checkbox" }) as HTMLInputElement;
    box.checked = state.form.flags.includes(flag);
    box.addEventListener("change", () => controller.dispatch({ type: "toggle_flag", flag }));
    label.append(box, document.createTextNode(" " + FLAG_LABELS[flag]));
    flagBox.appendChild(label);
  }
  root.appendChild(flagBox);

  if (state.form.error) {
    root.appendChild(el("p", { class: "error" }, state.form.error));
  }

  const submit = el("button", { type: "button", class: "submit" }, "Submit") as HTMLButtonElement;
  submit.disabled = !controller.submitEnabled;
  submit.addEventListener("click", () => void controller.submit());
  root.appendChild(submit);
}

function renderCompletion(root: HTMLElement, state: FlowState): void {
  root.appendChild(el("p", { class: "done" }, "Session complete. Thank you!"));
  root.appendChild(el("p", {},
    `You worked through ${state.progress.total} segments in this queue.`));
}
