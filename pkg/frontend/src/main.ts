import { ApiClient, ApiError } from "./api.js";
import { composeStrip, type Rgba, type StripTiles } from "./montage.js";
import { questionOverlay } from "./overlay.js";
import {
  applyAnswer,
  beginAnswer,
  failAnswer,
  setOverlayOpacity,
  viewFromCreate,
  viewFromDetail,
  type SessionView,
} from "./state.js";

const api = new ApiClient("");
const MAX_UPLOAD_BYTES = 4 * 1024 * 1024;
const DISPLAY_SCALE = 8;

let view: SessionView | null = null;

const el = <T extends HTMLElement>(id: string): T => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
};

function banner(message: string, retryable = false) {
  const box = el<HTMLDivElement>("banner");
  box.textContent = retryable ? `${message} — retry when the server is back` : message;
  box.classList.toggle("hidden", message === "");
}

async function fileToBase64(file: File): Promise<string> {
  const buf = await file.arrayBuffer();
  let binary = "";
  const bytes = new Uint8Array(buf);
  for (let i = 0; i < bytes.length; i++) binary += String.fromCharCode(bytes[i]);
  return btoa(binary);
}

function decodePng(base64: string): Promise<Rgba> {
  return new Promise((resolve, reject) => {
    const img = new Image();
    img.onload = () => {
      const canvas = document.createElement("canvas");
      canvas.width = img.naturalWidth;
      canvas.height = img.naturalHeight;
      const ctx = canvas.getContext("2d")!;
      ctx.drawImage(img, 0, 0);
      const data = ctx.getImageData(0, 0, canvas.width, canvas.height);
      resolve({ width: canvas.width, height: canvas.height, data: data.data });
    };
    img.onerror = () => reject(new Error("could not decode image"));
    img.src = `data:image/png;base64,${base64}`;
  });
}

function toImageData(image: Rgba): ImageData {
  return new ImageData(new Uint8ClampedArray(image.data), image.width, image.height);
}

function drawRgba(canvas: HTMLCanvasElement, image: Rgba, scale = 1) {
  canvas.width = image.width * scale;
  canvas.height = image.height * scale;
  const ctx = canvas.getContext("2d")!;
  const tmp = document.createElement("canvas");
  tmp.width = image.width;
  tmp.height = image.height;
  tmp.getContext("2d")!.putImageData(toImageData(image), 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
}

async function render() {
  const controls = el<HTMLFieldSetElement>("answer-controls");
  const exhaustedNote = el<HTMLParagraphElement>("exhausted-note");
  if (!view) {
    controls.disabled = true;
    return;
  }
  el<HTMLSpanElement>("step-label").textContent =
    `step ${view.step} / ${view.maxAnswers + 1} passes`;
  location.hash = view.sessionId;

  const prediction = await decodePng(view.currentPredictionPng);
  const canvas = el<HTMLCanvasElement>("main-canvas");
  drawRgba(canvas, prediction, DISPLAY_SCALE);
  if (view.currentQuestionValues && view.overlayOpacity > 0) {
    const overlay = questionOverlay(view.currentQuestionValues, view.overlayOpacity);
    const tmp = document.createElement("canvas");
    tmp.width = overlay.width;
    tmp.height = overlay.height;
    tmp.getContext("2d")!.putImageData(toImageData(overlay), 0, 0);
    const ctx = canvas.getContext("2d")!;
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
  }

  const strip = el<HTMLDivElement>("history-strip");
  strip.innerHTML = "";
  for (const entry of view.history) {
    const column = document.createElement("div");
    column.className = "history-column";
    const swatch = document.createElement("div");
    swatch.className = "swatch";
    if (entry.answerColor) {
      swatch.style.background = `rgb(${entry.answerColor.join(",")})`;
      swatch.title = `${entry.answerMode} answer`;
    } else {
      swatch.classList.add("blank");
      swatch.title = "no answer before the first pass";
    }
    column.appendChild(swatch);
    const pred = document.createElement("img");
    pred.src = `data:image/png;base64,${entry.predictionPng}`;
    column.appendChild(pred);
    if (entry.questionPng) {
      const q = document.createElement("img");
      q.src = `data:image/png;base64,${entry.questionPng}`;
      column.appendChild(q);
    }
    strip.appendChild(column);
  }

  const active = !view.exhausted && !view.pendingAnswer;
  controls.disabled = !active;
  exhaustedNote.classList.toggle("hidden", !view.exhausted);
}

async function onCreate() {
  banner("");
  const fileInput = el<HTMLInputElement>("image-file");
  const file = fileInput.files?.[0];
  if (!file) {
    banner("choose a PNG first");
    return;
  }
  if (file.size > MAX_UPLOAD_BYTES) {
    banner(`file is ${(file.size / 1e6).toFixed(1)} MB; the server expects small working-size PNGs`);
    return;
  }
  const gtFile = el<HTMLInputElement>("gt-file").files?.[0];
  try {
    const resp = await api.createSession({
      image_png_base64: await fileToBase64(file),
      checkpoint_id: el<HTMLSelectElement>("checkpoint-select").value || undefined,
      max_answers: parseInt(el<HTMLInputElement>("max-answers").value, 10),
      ground_truth_png_base64: gtFile ? await fileToBase64(gtFile) : undefined,
      allow_resize: el<HTMLInputElement>("allow-resize").checked,
    });
    view = viewFromCreate(resp);
    await render();
  } catch (err) {
    handleError(err);
  }
}

function handleError(err: unknown) {
  if (err instanceof ApiError) banner(`server rejected the request (${err.status}): ${err.message}`);
  else banner(`${err}`, true);
}

async function submit(kind: "color" | "oracle") {
  if (!view) return;
  try {
    view = beginAnswer(view);
    await render();
    const resp =
      kind === "color"
        ? await api.submitColorAnswer(view.sessionId, pickedColor())
        : await api.submitOracleAnswer(view.sessionId);
    view = applyAnswer(view, resp);
  } catch (err) {
    view = failAnswer(view);
    handleError(err);
  }
  await render();
}

function pickedColor(): [number, number, number] {
  const hex = el<HTMLInputElement>("color-picker").value;
  return [
    parseInt(hex.slice(1, 3), 16),
    parseInt(hex.slice(3, 5), 16),
    parseInt(hex.slice(5, 7), 16),
  ];
}

async function exportStrip() {
  if (!view) return;
  const tiles: StripTiles = {
    answers: view.history.map((h) => h.answerColor),
    predictions: await Promise.all(view.history.map((h) => decodePng(h.predictionPng))),
    questions: await Promise.all(
      view.history.map((h) => (h.questionPng ? decodePng(h.questionPng) : Promise.resolve(null))),
    ),
  };
  const { image } = composeStrip(tiles);
  const canvas = document.createElement("canvas");
  drawRgba(canvas, image);
  canvas.toBlob((blob) => {
    if (!blob) return;
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = `episode_${view!.sessionId.slice(0, 8)}.png`;
    a.click();
    URL.revokeObjectURL(a.href);
  }, "image/png");
}

async function restoreFromHash() {
  const sessionId = location.hash.slice(1);
  if (!sessionId) return;
  try {
    view = viewFromDetail(await api.getSession(sessionId));
    await render();
  } catch {
    location.hash = "";
  }
}

async function init() {
  try {
    const { checkpoints } = await api.listCheckpoints();
    const select = el<HTMLSelectElement>("checkpoint-select");
    for (const ckpt of checkpoints) {
      const option = document.createElement("option");
      option.value = ckpt.id;
      option.textContent = `${ckpt.id} (${ckpt.image_size.join("x")}, ${ckpt.color_space})`;
      select.appendChild(option);
    }
  } catch (err) {
    banner("steering server unreachable", true);
  }
  el<HTMLButtonElement>("create-btn").addEventListener("click", onCreate);
  el<HTMLButtonElement>("answer-color-btn").addEventListener("click", () => submit("color"));
  el<HTMLButtonElement>("answer-oracle-btn").addEventListener("click", () => submit("oracle"));
  el<HTMLButtonElement>("export-btn").addEventListener("click", exportStrip);
  el<HTMLInputElement>("opacity-slider").addEventListener("input", async (ev) => {
    if (!view) return;
    view = setOverlayOpacity(view, parseFloat((ev.target as HTMLInputElement).value));
    await render();
  });
  await restoreFromHash();
}

init();
