// DOM wiring: file selection, upload queue, score badges, batch rank view.

import { submitScore } from "./api.js";
import { UploadQueue } from "./queue.js";
import { exportKept, formatScore, rankScored, scoreColor } from "./rank.js";
import { canvasRasterizer, prepareUpload } from "./resize.js";
import { toggleKeep, type UploadItem } from "./state.js";

const rasterize = canvasRasterizer();
const queue = new UploadQueue((item) => {
  if (item.payload === null) {
    return Promise.reject(new Error("no payload"));
  }
  return submitScore(item.payload);
});

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

async function onFilesSelected(files: FileList | null): Promise<void> {
  if (!files || files.length === 0) {
    return;
  }
  const prepared = await Promise.all(
    Array.from(files).map((file) =>
      prepareUpload(file, rasterize, undefined, URL.createObjectURL(file))),
  );
  queue.add(prepared);
}

function stateBadge(item: UploadItem): HTMLElement {
  const badge = document.createElement("span");
  badge.className = `badge badge-${item.state}`;
  if (item.state === "scored") {
    badge.textContent = formatScore(item.score!);
    badge.style.backgroundColor = scoreColor(item.score!);
  } else if (item.state === "failed") {
    badge.textContent = item.error ?? "failed";
  } else {
    badge.textContent = item.state;
  }
  return badge;
}

function renderUploads(items: UploadItem[]): void {
  const list = el<HTMLUListElement>("uploads");
  list.replaceChildren();
  for (const item of items) {
    const row = document.createElement("li");
    row.className = `upload upload-${item.state}`;
    if (item.thumbnailUrl) {
      const thumb = document.createElement("img");
      thumb.src = item.thumbnailUrl;
      thumb.alt = item.filename;
      row.append(thumb);
    }
    const name = document.createElement("span");
    name.className = "filename";
    name.textContent = item.filename;
    row.append(name, stateBadge(item));
    if (item.state === "failed" && item.payload !== null) {
      const retry = document.createElement("button");
      retry.textContent = "retry";
      retry.addEventListener("click", () => queue.retry(item.id));
      row.append(retry);
    }
    list.append(row);
  }
}

function renderGallery(items: UploadItem[]): void {
  const gallery = el<HTMLDivElement>("gallery");
  gallery.replaceChildren();
  for (const item of rankScored(items)) {
    const card = document.createElement("figure");
    card.className = item.kept ? "card kept" : "card";
    if (item.thumbnailUrl) {
      const img = document.createElement("img");
      img.src = item.thumbnailUrl;
      img.alt = item.filename;
      card.append(img);
    }
    const caption = document.createElement("figcaption");
    caption.textContent = `${item.filename} · ${formatScore(item.score!)}`;
    caption.style.color = scoreColor(item.score!);
    const keep = document.createElement("button");
    keep.textContent = item.kept ? "discard" : "keep";
    keep.addEventListener("click", () => queue.update(item.id, toggleKeep));
    card.append(caption, keep);
    gallery.append(card);
  }
}

function downloadKeptList(items: UploadItem[]): void {
  const text = exportKept(items);
  const blob = new Blob([text], { type: "text/plain" });
  const link = document.createElement("a");
  link.href = URL.createObjectURL(blob);
  link.download = "kept.txt";
  link.click();
  URL.revokeObjectURL(link.href);
}

function init(): void {
  const input = el<HTMLInputElement>("file-input");
  input.addEventListener("change", () => {
    void onFilesSelected(input.files);
    input.value = "";
  });
  el<HTMLButtonElement>("export-kept").addEventListener("click", () =>
    downloadKeptList(queue.snapshot()));
  queue.onChange((items) => {
    renderUploads(items);
    renderGallery(items);
  });
}

init();
