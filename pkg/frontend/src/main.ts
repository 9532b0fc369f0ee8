import { ApiError, ReviewApi } from "./api.js";
import { ScreeningController } from "./controller.js";
import { bindKeys } from "./keyboard.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

let controller: ScreeningController | null = null;
let api: ReviewApi | null = null;

function setBanner(text: string, kind: "info" | "error" = "info"): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = text;
  banner.className = text ? `banner ${kind}` : "banner hidden";
}

async function render(): Promise<void> {
  if (controller === null || api === null) return;
  const card = el<HTMLDivElement>("card");
  const done = el<HTMLDivElement>("done");
  el<HTMLSpanElement>("progress-text").textContent = `${controller.decided} / ${controller.total}`;
  el<HTMLProgressElement>("progress-bar").max = controller.total;
  el<HTMLProgressElement>("progress-bar").value = controller.decided;
  el<HTMLSpanElement>("pending").textContent =
    controller.pendingCount() > 0 ? `${controller.pendingCount()} submission(s) queued for retry` : "";

  const pair = controller.current();
  if (pair === null) {
    card.classList.add("hidden");
    done.classList.remove("hidden");
    try {
      const progress = await api.progress();
      const everyoneDone = Object.values(progress.annotators).every((p) => p.decided >= p.total);
      el<HTMLParagraphElement>("done-detail").textContent = everyoneDone
        ? "Both annotators have finished. Export the strict subset from /export or `verify finalize`."
        : "You are done. The strict subset can be exported once the other annotator finishes.";
    } catch {
      el<HTMLParagraphElement>("done-detail").textContent = "You are done.";
    }
    return;
  }
  card.classList.remove("hidden");
  done.classList.add("hidden");
  el<HTMLDivElement>("pair-id").textContent = pair.pair_id;
  el<HTMLDivElement>("src-lang").textContent = pair.src_text.lang;
  el<HTMLDivElement>("tgt-lang").textContent = pair.tgt_text.lang;
  el<HTMLDivElement>("src-text").textContent = pair.src_text.text;
  el<HTMLDivElement>("tgt-text").textContent = pair.tgt_text.text;
  el<HTMLSpanElement>("rating").textContent = pair.llm_rating === null ? "-" : String(pair.llm_rating);
  el<HTMLSpanElement>("cosine").textContent = pair.cosine === null ? "-" : pair.cosine.toFixed(2);
}

async function act(action: () => Promise<void>): Promise<void> {
  try {
    await action();
    setBanner("");
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      setBanner("unregistered annotator", "error");
    } else {
      setBanner(`network failure, decision kept locally and will be retried: ${err}`, "error");
    }
  }
  await render();
}

async function connect(): Promise<void> {
  const base = el<HTMLInputElement>("server").value.trim();
  const annotator = el<HTMLInputElement>("annotator").value.trim();
  if (!base || !annotator) {
    setBanner("server URL and annotator id are required", "error");
    return;
  }
  api = new ReviewApi(base);
  try {
    const session = await api.session();
    if (!session.annotators.includes(annotator)) {
      setBanner("unregistered annotator", "error");
      return;
    }
    controller = new ScreeningController(api, session.session_id, annotator);
    await controller.refresh();
    el<HTMLDivElement>("connect-panel").classList.add("hidden");
    el<HTMLDivElement>("screen-panel").classList.remove("hidden");
    setBanner("");
    await render();
  } catch (err) {
    setBanner(`cannot reach server: ${err}`, "error");
  }
}

function wire(): void {
  el<HTMLButtonElement>("connect").addEventListener("click", () => void connect());
  el<HTMLButtonElement>("keep").addEventListener("click", () => void act(() => controller!.decide("keep")));
  el<HTMLButtonElement>("discard").addEventListener("click", () => void act(() => controller!.decide("discard")));
  el<HTMLButtonElement>("undo").addEventListener("click", () => void act(() => controller!.undoLast()));
  el<HTMLButtonElement>("refresh").addEventListener("click", () => void act(() => controller!.refresh()));
  bindKeys({
    k: () => void act(() => controller!.decide("keep")),
    d: () => void act(() => controller!.decide("discard")),
    u: () => void act(() => controller!.undoLast()),
  });
}

wire();
