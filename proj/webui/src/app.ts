// DOM wiring for the studio page. All personalization comes from the service.

import { ApiError, ServiceClient, type Method } from "./api.js";
import { attentionBars, Gallery } from "./view.js";
import { applyRetouch, clampParams, IDENTITY, RANGES, type RetouchParams } from "./retouch.js";

const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

interface State {
  params: RetouchParams;
  seedIndex: number;
  sessionId: string | null;
}

const state: State = { params: { ...IDENTITY }, seedIndex: 0, sessionId: null };
const client = new ServiceClient($<HTMLInputElement>("service-url").value.replace(/\/$/, ""));
const gallery = new Gallery();
let seeds: ImageData[] = [];
let unseen: ImageData | null = null;

function toast(message: string) {
  const el = $("toast");
  el.textContent = message;
  el.classList.add("visible");
  window.setTimeout(() => el.classList.remove("visible"), 6000);
}

function report(e: unknown) {
  toast(e instanceof ApiError ? e.describe() : String(e));
}

function imageDataToPng(data: ImageData): string {
  const canvas = document.createElement("canvas");
  canvas.width = data.width;
  canvas.height = data.height;
  canvas.getContext("2d")!.putImageData(data, 0, 0);
  return canvas.toDataURL("image/png").split(",")[1];
}

async function fileToImageData(file: File): Promise<ImageData> {
  const bitmap = await createImageBitmap(file);
  const canvas = document.createElement("canvas");
  canvas.width = bitmap.width;
  canvas.height = bitmap.height;
  const ctx = canvas.getContext("2d")!;
  ctx.drawImage(bitmap, 0, 0);
  return ctx.getImageData(0, 0, bitmap.width, bitmap.height);
}

function draw(canvasId: string, data: ImageData) {
  const canvas = $<HTMLCanvasElement>(canvasId);
  canvas.width = data.width;
  canvas.height = data.height;
  canvas.getContext("2d")!.putImageData(data, 0, 0);
}

function retouched(): ImageData | null {
  const src = seeds[state.seedIndex];
  if (!src) return null;
  return new ImageData(applyRetouch(src.data, state.params), src.width, src.height);
}

function renderPreview() {
  const src = seeds[state.seedIndex];
  if (!src) return;
  draw("seed-original", src);
  draw("seed-retouched", retouched()!);
}

function buildSliders() {
  const host = $("sliders");
  for (const key of Object.keys(RANGES) as (keyof RetouchParams)[]) {
    const r = RANGES[key];
    const label = document.createElement("label");
    label.textContent = key;
    const input = document.createElement("input");
    Object.assign(input, { type: "range", min: r.min, max: r.max, step: r.step, value: IDENTITY[key] });
    const value = document.createElement("output");
    value.textContent = String(IDENTITY[key]);
    input.addEventListener("input", () => {
      state.params = clampParams({ ...state.params, [key]: Number(input.value) });
      value.textContent = String(state.params[key]);
      renderPreview();
    });
    label.append(input, value);
    host.append(label);
  }
}

function renderGallery() {
  const host = $("gallery");
  host.replaceChildren();
  gallery.items.forEach((item, index) => {
    const card = document.createElement("figure");
    for (const png of [item.original, item.retouched]) {
      const img = document.createElement("img");
      img.src = `data:image/png;base64,${png}`;
      card.append(img);
    }
    const del = document.createElement("button");
    del.textContent = "remove";
    del.addEventListener("click", () => void removePair(index));
    card.append(del);
    host.append(card);
  });
  $("pair-count").textContent = String(gallery.items.length);
}

async function ensureSession(): Promise<string> {
  if (!state.sessionId) state.sessionId = await client.createSession();
  return state.sessionId;
}

async function commitPair() {
  const src = seeds[state.seedIndex];
  if (!src) return toast("load seed images first");
  try {
    const id = await ensureSession();
    const item = { original: imageDataToPng(src), retouched: imageDataToPng(retouched()!) };
    gallery.commit(item, await client.addPair(id, item.original, item.retouched));
    renderGallery();
    state.seedIndex = (state.seedIndex + 1) % seeds.length;
    renderPreview();
    await personalize();
  } catch (e) {
    report(e);
  }
}

async function removePair(index: number) {
  try {
    gallery.remove(index, await client.deletePair(await ensureSession(), index));
    renderGallery();
    await personalize();
  } catch (e) {
    report(e);
  }
}

async function personalize() {
  if (!unseen || !state.sessionId || gallery.items.length === 0) return;
  const method = $<HTMLSelectElement>("method").value as Method;
  try {
    const r = await client.enhance(state.sessionId, imageDataToPng(unseen), method);
    if (!r) return; // superseded by a newer request
    $<HTMLImageElement>("after").src = `data:image/png;base64,${r.image}`;
    const host = $("attention");
    host.replaceChildren();
    for (const bar of attentionBars(r)) {
      const row = document.createElement("div");
      row.className = "bar";
      row.style.setProperty("--w", bar.percent);
      row.textContent = `pair ${bar.index + 1}: ${bar.percent}`;
      host.append(row);
    }
  } catch (e) {
    report(e);
  }
}

$<HTMLInputElement>("seed-files").addEventListener("change", async (ev) => {
  const files = Array.from((ev.target as HTMLInputElement).files ?? []);
  try {
    seeds = await Promise.all(files.map(fileToImageData));
    state.seedIndex = 0;
    renderPreview();
  } catch (e) {
    report(e);
  }
});

$<HTMLInputElement>("unseen-file").addEventListener("change", async (ev) => {
  const file = (ev.target as HTMLInputElement).files?.[0];
  if (!file) return;
  try {
    unseen = await fileToImageData(file);
    draw("before", unseen);
    await personalize();
  } catch (e) {
    report(e);
  }
});

$("commit").addEventListener("click", () => void commitPair());
$("reset").addEventListener("click", () => {
  state.params = { ...IDENTITY };
  $("sliders").replaceChildren();
  buildSliders();
  renderPreview();
});
$("method").addEventListener("change", () => void personalize());

buildSliders();
client.health().then(
  (h) => ($("model").textContent = h.model_id),
  (e) => report(e),
);
