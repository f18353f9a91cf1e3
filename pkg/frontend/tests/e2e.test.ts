// End-to-end through the real pipeline (selection -> resize -> encode ->
// queue -> fetch), with the network boundary stubbed. The stub decodes every
// payload that would have gone out on the wire and asserts its dimensions.

import { describe, expect, test } from "vitest";

import { submitScore, type FetchLike } from "../src/api.js";
import { parsePpmHeader } from "../src/ppm.js";
import { UploadQueue } from "../src/queue.js";
import { rankScored } from "../src/rank.js";
import { prepareUploads, MAX_UPLOAD_SIDE } from "../src/resize.js";
import { solidRaster } from "./resize.test.js";

const SOURCE_SIZES: Record<string, [number, number]> = {
  "huge-landscape.jpg": [4000, 3000],
  "huge-portrait.jpg": [3000, 4000],
  "panorama.jpg": [8192, 1024],
  "exact.png": [512, 512],
  "tiny.png": [64, 48],
};

const rasterize = async (file: { name: string }) => {
  const size = SOURCE_SIZES[file.name];
  if (!size) {
    throw new Error("not an image");
  }
  return solidRaster(size[0], size[1]);
};

describe("end to end with stubbed network", () => {
  test("no payload on the wire ever exceeds 512 px on its longest side", async () => {
    const wireDimensions = new Map<string, { width: number; height: number }>();
    let counter = 0;
    const fetchFn: FetchLike = async (_url, init) => {
      const dims = parsePpmHeader(init.body as Uint8Array);
      wireDimensions.set(`req${counter}`, dims);
      counter += 1;
      return {
        ok: true,
        status: 200,
        json: async () => ({ score: 0.25 + 0.1 * counter, model_id: "e2e" }),
      };
    };

    const files = Object.keys(SOURCE_SIZES).map((name) => ({ name }));
    const items = await prepareUploads(files, rasterize);
    const queue = new UploadQueue((item) => submitScore(item.payload!, { fetchFn }));
    queue.add(items);
    await queue.idle();

    expect(wireDimensions.size).toBe(files.length);
    for (const dims of wireDimensions.values()) {
      expect(Math.max(dims.width, dims.height)).toBeLessThanOrEqual(MAX_UPLOAD_SIDE);
    }
    expect([...wireDimensions.values()]).toContainEqual({ width: 512, height: 384 });
    expect([...wireDimensions.values()]).toContainEqual({ width: 384, height: 512 });
    expect([...wireDimensions.values()]).toContainEqual({ width: 64, height: 48 });

    const done = queue.snapshot();
    expect(done.every((item) => item.state === "scored")).toBe(true);
    const ranked = rankScored(done);
    for (let i = 1; i < ranked.length; i++) {
      expect(ranked[i - 1].score!).toBeGreaterThanOrEqual(ranked[i].score!);
    }
  });

  test("server error bodies surface on the failed item", async () => {
    const fetchFn: FetchLike = async () => ({
      ok: false,
      status: 503,
      json: async () => ({ error: "backend at 127.0.0.1:9090: unreachable" }),
    });
    const items = await prepareUploads([{ name: "tiny.png" }], rasterize);
    const queue = new UploadQueue((item) => submitScore(item.payload!, { fetchFn }));
    queue.add(items);
    await queue.idle();
    const [item] = queue.snapshot();
    expect(item.state).toBe("failed");
    expect(item.error).toContain("unreachable");
  });
});
