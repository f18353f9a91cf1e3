import { describe, expect, test } from "vitest";

import { parsePpmHeader, encodePpm, type Raster } from "../src/ppm.js";
import {
  prepareUpload,
  prepareUploads,
  scaleRaster,
  targetDimensions,
} from "../src/resize.js";

export function solidRaster(width: number, height: number, rgb = [200, 100, 50]): Raster {
  const data = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < data.length; i += 4) {
    data[i] = rgb[0];
    data[i + 1] = rgb[1];
    data[i + 2] = rgb[2];
    data[i + 3] = 255;
  }
  return { data, width, height };
}

describe("targetDimensions", () => {
  test("4000x3000 downscales to 512x384", () => {
    expect(targetDimensions(4000, 3000)).toEqual({ width: 512, height: 384 });
  });

  test("portrait 3000x4000 downscales to 384x512", () => {
    expect(targetDimensions(3000, 4000)).toEqual({ width: 384, height: 512 });
  });

  test("small images are untouched", () => {
    expect(targetDimensions(100, 100)).toEqual({ width: 100, height: 100 });
    expect(targetDimensions(512, 200)).toEqual({ width: 512, height: 200 });
  });

  test("extreme aspect ratio still yields at least one pixel", () => {
    const dims = targetDimensions(10000, 2);
    expect(dims.width).toBe(512);
    expect(dims.height).toBeGreaterThanOrEqual(1);
  });
});

describe("scaleRaster", () => {
  test("identity when dimensions match", () => {
    const raster = solidRaster(8, 6);
    expect(scaleRaster(raster, 8, 6)).toBe(raster);
  });

  test("solid color survives resampling", () => {
    const out = scaleRaster(solidRaster(64, 48), 16, 12);
    expect(out.width).toBe(16);
    expect(out.data[0]).toBe(200);
    expect(out.data[out.data.length - 2]).toBe(50);
  });
});

describe("ppm encoding", () => {
  test("1x1 payload is header plus three samples", () => {
    const bytes = encodePpm(solidRaster(1, 1, [1, 2, 3]));
    expect(bytes.length).toBe("P6\n1 1\n255\n".length + 3);
    expect(Array.from(bytes.slice(-3))).toEqual([1, 2, 3]);
  });

  test("header parses back", () => {
    const bytes = encodePpm(solidRaster(17, 9));
    expect(parsePpmHeader(bytes)).toEqual({ width: 17, height: 9 });
  });

  test("junk is rejected", () => {
    expect(() => parsePpmHeader(new Uint8Array([1, 2, 3]))).toThrow();
  });
});

describe("prepareUpload", () => {
  const rasterSizes: Record<string, [number, number]> = {
    "big.jpg": [4000, 3000],
    "exact.png": [512, 512],
    "small.png": [100, 100],
  };

  const fakeRasterize = async (file: { name: string }) => {
    const size = rasterSizes[file.name];
    if (!size) {
      throw new Error("unsupported format");
    }
    return solidRaster(size[0], size[1]);
  };

  test("oversized file is capped, payload dims recorded", async () => {
    const item = await prepareUpload({ name: "big.jpg" }, fakeRasterize);
    expect(item.state).toBe("pending");
    expect([item.width, item.height]).toEqual([512, 384]);
    expect(parsePpmHeader(item.payload!)).toEqual({ width: 512, height: 384 });
  });

  test("small file is unchanged", async () => {
    const item = await prepareUpload({ name: "small.png" }, fakeRasterize);
    expect([item.width, item.height]).toEqual([100, 100]);
  });

  test("corrupt file fails its own item, others proceed", async () => {
    const items = await prepareUploads(
      [{ name: "big.jpg" }, { name: "corrupt.bin" }, { name: "small.png" }],
      fakeRasterize,
    );
    expect(items.map((i) => i.state)).toEqual(["pending", "failed", "pending"]);
    expect(items[1].error).toContain("unsupported format");
  });
});
