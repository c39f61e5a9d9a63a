/**
 * Browser entry point: wires the session store, pitch canvas, rotation dial,
 * sweep table, and model-comparison panel together.
 */

import { ApiClient, FramePayload, ModelInfo } from "./api.js";
import { buildScene, drawScene, PITCH_LENGTH, PITCH_WIDTH } from "./renderer.js";
import { SessionStore } from "./state.js";

const api = new ApiClient("");
const store = new SessionStore(api);

const canvas = document.getElementById("pitch") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const modelSelect = document.getElementById("model") as HTMLSelectElement;
const frameSelect = document.getElementById("frame") as HTMLSelectElement;
const probEl = document.getElementById("probability")!;
const deltaEl = document.getElementById("delta-badge")!;
const versionEl = document.getElementById("version")!;
const errorEl = document.getElementById("error")!;
const selectedEl = document.getElementById("selected-player")!;
const sweepTable = document.getElementById("sweep") as HTMLTableElement;
const compareEl = document.getElementById("compare")!;
const undoButton = document.getElementById("undo") as HTMLButtonElement;
const rotateLeft = document.getElementById("rotate-left") as HTMLButtonElement;
const rotateRight = document.getElementById("rotate-right") as HTMLButtonElement;

let frames: FramePayload[] = [];
let models: ModelInfo[] = [];
let selectedPlayer: string | null = null;

function formatProbability(p: number | null): string {
  return p === null ? "–" : `${(100 * p).toFixed(1)}%`;
}

function formatDelta(pp: number | null): string {
  if (pp === null) return "";
  const sign = pp >= 0 ? "+" : "";
  return `${sign}${pp.toFixed(1)} pp`;
}

function render(): void {
  const snap = store.snapshot;
  drawScene(ctx, buildScene(snap.frame, snap.rotations, selectedPlayer), canvas.width, canvas.height);
  probEl.textContent = formatProbability(snap.liveProbability);
  deltaEl.textContent = formatDelta(snap.deltaPercentagePoints);
  deltaEl.className =
    snap.deltaPercentagePoints !== null && snap.deltaPercentagePoints < 0 ? "badge down" : "badge up";
  versionEl.textContent = snap.modelVersion ? `model ${snap.model} @ ${snap.modelVersion}` : "";
  selectedEl.textContent = selectedPlayer ?? "none";
  errorEl.textContent = store.error ? `service error: ${store.error.detail.message}` : "";
}

store.subscribe(render);

function currentRotation(playerId: string): number {
  return store.snapshot.rotations[playerId] ?? 0;
}

async function rotateSelected(direction: 1 | -1): Promise<void> {
  if (!selectedPlayer) return;
  const next = currentRotation(selectedPlayer) + direction * store.stepDegrees;
  await store.applyRotation(selectedPlayer, next);
  await refreshSweep();
}

async function refreshSweep(): Promise<void> {
  sweepTable.innerHTML = "";
  if (!selectedPlayer) return;
  try {
    const sweep = await store.runSweep(selectedPlayer);
    const header = sweepTable.insertRow();
    header.innerHTML = "<th>degrees</th><th>probability</th>";
    for (const point of sweep.points) {
      const row = sweepTable.insertRow();
      const best = point.degrees === sweep.bestDegrees;
      row.className = best ? "best" : "";
      row.innerHTML = `<td>${point.degrees}</td><td>${formatProbability(point.probability)}</td>`;
    }
  } catch {
    // store.error already set; banner shows it
    render();
  }
}

async function refreshCompare(): Promise<void> {
  compareEl.innerHTML = "";
  if (models.length < 2) {
    compareEl.textContent = "register a second model to compare";
    return;
  }
  try {
    const predictions = await store.compareModels();
    for (const pred of predictions) {
      const div = document.createElement("div");
      div.className = "compare-row";
      div.textContent = `${pred.model}: ${formatProbability(pred.probability)}`;
      compareEl.appendChild(div);
    }
  } catch {
    render();
  }
}

canvas.addEventListener("click", (event) => {
  const snap = store.snapshot;
  if (!snap.frame) return;
  const rect = canvas.getBoundingClientRect();
  const px = ((event.clientX - rect.left) / rect.width) * PITCH_LENGTH;
  const py = ((event.clientY - rect.top) / rect.height) * PITCH_WIDTH;
  let best: string | null = null;
  let bestDist = 3.0; // meters of click tolerance
  for (const p of snap.frame.players) {
    const d = Math.hypot(p.x - px, p.y - py);
    if (d < bestDist) {
      best = p.id;
      bestDist = d;
    }
  }
  selectedPlayer = best;
  render();
  void refreshSweep();
});

rotateLeft.addEventListener("click", () => void rotateSelected(-1));
rotateRight.addEventListener("click", () => void rotateSelected(1));
undoButton.addEventListener("click", () => {
  store.undo();
  void refreshSweep();
});

modelSelect.addEventListener("change", () => void loadSelected());
frameSelect.addEventListener("change", () => void loadSelected());

async function loadSelected(): Promise<void> {
  const frame = frames[Number(frameSelect.value)];
  if (!frame || !modelSelect.value) return;
  await store.loadFrame(frame, modelSelect.value);
  selectedPlayer = null;
  render();
  await refreshCompare();
}

async function boot(): Promise<void> {
  try {
    const [health, page] = await Promise.all([api.health(), api.frames(0, 50)]);
    models = health.models;
    frames = page.frames;
    modelSelect.innerHTML = models
      .map((m) => `<option value="${m.name}">${m.name}</option>`)
      .join("");
    frameSelect.innerHTML = frames
      .map((f, i) => `<option value="${i}">frame ${f.frame_id} (${f.gender})</option>`)
      .join("");
    await loadSelected();
  } catch (err) {
    errorEl.textContent = `failed to reach service: ${err instanceof Error ? err.message : err}`;
  }
}

void boot();
