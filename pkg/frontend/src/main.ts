// DOM wiring: start/resume a session, render pairs on two canvases with a
// shared scale, capture choices, and show the final report. The server is
// the source of truth; reloading resumes from its state.

import { BlindTestApi, HttpTransport, PairPayload } from "./api.js";
import { drawSpectrogram, drawWaveform, sharedRange } from "./render.js";
import { SessionFlow, accuracyFromReport } from "./session.js";

const STORAGE_KEY = "blindtest_session_id";

const api = new BlindTestApi(new HttpTransport(""));

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const startView = el<HTMLDivElement>("start-view");
const pairView = el<HTMLDivElement>("pair-view");
const resultsView = el<HTMLDivElement>("results-view");
const errorBar = el<HTMLDivElement>("error-bar");
const errorText = el<HTMLSpanElement>("error-text");
const retryButton = el<HTMLButtonElement>("retry");
const progress = el<HTMLSpanElement>("progress");
const canvas1 = el<HTMLCanvasElement>("canvas-1");
const canvas2 = el<HTMLCanvasElement>("canvas-2");
const choose1 = el<HTMLButtonElement>("choose-1");
const choose2 = el<HTMLButtonElement>("choose-2");
const nextButton = el<HTMLButtonElement>("next-pair");
const specToggle = el<HTMLInputElement>("spectrogram-toggle");
const summary = el<HTMLDivElement>("summary");
const pairsInput = el<HTMLInputElement>("n-pairs");

let flow: SessionFlow | null = null;
let currentPair: PairPayload | null = null;
let lastAction: (() => Promise<void>) | null = null;

function show(view: HTMLElement): void {
  for (const v of [startView, pairView, resultsView]) {
    v.hidden = v !== view;
  }
}

function reportError(err: unknown, action: () => Promise<void>): void {
  errorText.textContent = err instanceof Error ? err.message : String(err);
  errorBar.hidden = false;
  lastAction = action;
}

async function guarded(action: () => Promise<void>): Promise<void> {
  try {
    errorBar.hidden = true;
    await action();
  } catch (err) {
    reportError(err, action);
  }
}

retryButton.addEventListener("click", () => {
  if (lastAction) void guarded(lastAction);
});

async function renderCurrentPair(): Promise<void> {
  if (!flow) return;
  const pair = await flow.loadCurrentPair();
  currentPair = pair;
  progress.textContent =
    `Pair ${pair.pair_index + 1} of ${pair.n_pairs} - which sample is real?`;
  if (specToggle.checked) {
    const spec = await api.getSpectrogram(flow.sessionId, pair.pair_index);
    drawSpectrogram(ctx(canvas1), spec.sample1, canvas1.width, canvas1.height);
    drawSpectrogram(ctx(canvas2), spec.sample2, canvas2.width, canvas2.height);
  } else {
    const range = sharedRange(pair.sample1, pair.sample2);
    drawWaveform(ctx(canvas1), pair.sample1, range, canvas1.width, canvas1.height);
    drawWaveform(ctx(canvas2), pair.sample2, range, canvas2.width, canvas2.height);
  }
  const answered = pair.answered;
  choose1.disabled = answered;
  choose2.disabled = answered;
  nextButton.hidden = !answered;
  show(pairView);
}

function ctx(canvas: HTMLCanvasElement): CanvasRenderingContext2D {
  const context = canvas.getContext("2d");
  if (!context) throw new Error("canvas 2d context unavailable");
  return context;
}

async function showResults(): Promise<void> {
  if (!flow) return;
  const results = await flow.results();
  const recomputed = accuracyFromReport(results);
  const figure = results.accuracy === undefined ? "n/a"
    : `${(results.accuracy * 100).toFixed(1)}%`;
  const rows = (results.pairs ?? []).map((p) =>
    `<tr><td>${p.pair_index + 1}</td><td>Sample ${p.chosen_slot + 1}</td>` +
    `<td>Sample ${p.real_slot + 1}</td><td>${p.correct ? "yes" : "no"}</td></tr>`);
  summary.innerHTML =
    `<p>You identified the real sample in <strong>${figure}</strong> of pairs ` +
    `(${results.answered}/${results.n_pairs} answered; client recomputation ` +
    `${(recomputed * 100).toFixed(1)}%).</p>` +
    `<table><tr><th>Pair</th><th>Your pick</th><th>Real</th><th>Correct</th></tr>` +
    rows.join("") + `</table>`;
  sessionStorage.removeItem(STORAGE_KEY);
  show(resultsView);
}

async function handleChoice(slot: 0 | 1): Promise<void> {
  if (!flow || !currentPair || currentPair.answered) return;
  choose1.disabled = true;
  choose2.disabled = true;
  const state = await flow.choose(slot);
  if (state === "complete") {
    await showResults();
  } else {
    nextButton.hidden = false;
  }
}

choose1.addEventListener("click", () => void guarded(() => handleChoice(0)));
choose2.addEventListener("click", () => void guarded(() => handleChoice(1)));
specToggle.addEventListener("change", () => void guarded(renderCurrentPair));

nextButton.addEventListener("click", () => void guarded(async () => {
  if (!flow) return;
  flow.advance();
  nextButton.hidden = true;
  await renderCurrentPair();
}));

el<HTMLButtonElement>("start").addEventListener("click", () =>
  void guarded(async () => {
    const nPairs = Number(pairsInput.value);
    if (!Number.isInteger(nPairs) || nPairs < 1) {
      throw new Error("enter a whole number of pairs (at least 1)");
    }
    flow = await SessionFlow.create(api, nPairs);
    sessionStorage.setItem(STORAGE_KEY, flow.sessionId);
    await renderCurrentPair();
  }));

void guarded(async () => {
  const stored = sessionStorage.getItem(STORAGE_KEY);
  if (!stored) {
    show(startView);
    return;
  }
  try {
    flow = await SessionFlow.resume(api, stored);
  } catch {
    sessionStorage.removeItem(STORAGE_KEY);
    show(startView);
    return;
  }
  if (flow.complete) {
    await showResults();
  } else {
    await renderCurrentPair();
  }
});
