// Client-side downscaling: nothing larger than MAX_UPLOAD_SIDE on its longest
// side ever leaves the browser. Rasterization (file -> RGBA pixels) is
// injectable so the pipeline runs unchanged under tests without a canvas.

import { encodePpm, type Raster } from "./ppm.js";
import { makeFailedItem, makePendingItem, type UploadItem } from "./state.js";

export const MAX_UPLOAD_SIDE = 512;

export interface FileSource {
  name: string;
}

export type Rasterizer = (file: FileSource) => Promise<Raster>;

export function targetDimensions(
  width: number,
  height: number,
  cap: number = MAX_UPLOAD_SIDE,
): { width: number; height: number } {
  const longest = Math.max(width, height);
  if (longest <= cap) {
    return { width, height };
  }
  const scale = cap / longest;
  return {
    width: Math.max(1, Math.round(width * scale)),
    height: Math.max(1, Math.round(height * scale)),
  };
}

/** Nearest-neighbor resample; the non-canvas path used when a rasterizer
 *  hands back full-resolution pixels. */
export function scaleRaster(raster: Raster, width: number, height: number): Raster {
  if (raster.width === width && raster.height === height) {
    return raster;
  }
  const out = new Uint8ClampedArray(width * height * 4);
  for (let y = 0; y < height; y++) {
    const sy = Math.min(raster.height - 1, Math.floor(((y + 0.5) * raster.height) / height));
    for (let x = 0; x < width; x++) {
      const sx = Math.min(raster.width - 1, Math.floor(((x + 0.5) * raster.width) / width));
      const src = (sy * raster.width + sx) * 4;
      const dst = (y * width + x) * 4;
      out[dst] = raster.data[src];
      out[dst + 1] = raster.data[src + 1];
      out[dst + 2] = raster.data[src + 2];
      out[dst + 3] = raster.data[src + 3];
    }
  }
  return { data: out, width, height };
}

/** Prepare one file: rasterize, cap the dimensions, encode the PPM payload.
 *  Failures produce a failed item rather than throwing. */
export async function prepareUpload(
  file: FileSource,
  rasterize: Rasterizer,
  cap: number = MAX_UPLOAD_SIDE,
  thumbnailUrl?: string,
): Promise<UploadItem> {
  try {
    const raster = await rasterize(file);
    const { width, height } = targetDimensions(raster.width, raster.height, cap);
    const scaled = scaleRaster(raster, width, height);
    return makePendingItem(file.name, encodePpm(scaled), width, height, thumbnailUrl);
  } catch (err) {
    const message = err instanceof Error ? err.message : String(err);
    return makeFailedItem(file.name, `could not read image: ${message}`);
  }
}

/** Prepare a selection; a corrupt file fails its own item, the rest proceed. */
export async function prepareUploads(
  files: readonly FileSource[],
  rasterize: Rasterizer,
  cap: number = MAX_UPLOAD_SIDE,
): Promise<UploadItem[]> {
  return Promise.all(files.map((file) => prepareUpload(file, rasterize, cap)));
}

/** Browser rasterizer: decode via createImageBitmap and draw straight onto a
 *  canvas already capped to the target size (prepareUpload re-checks). */
export function canvasRasterizer(cap: number = MAX_UPLOAD_SIDE): Rasterizer {
  return async (file) => {
    const bitmap = await createImageBitmap(file as unknown as Blob);
    try {
      const { width, height } = targetDimensions(bitmap.width, bitmap.height, cap);
      const canvas = new OffscreenCanvas(width, height);
      const ctx = canvas.getContext("2d");
      if (!ctx) {
        throw new Error("no 2d canvas context");
      }
      ctx.drawImage(bitmap, 0, 0, width, height);
      const image = ctx.getImageData(0, 0, width, height);
      return { data: image.data, width: image.width, height: image.height };
    } finally {
      bitmap.close();
    }
  };
}
