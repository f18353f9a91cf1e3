// Binary PPM (P6) encoding: the single place where canvas pixels become the
// server's upload format. The server accepts nothing else from the browser.

export interface Raster {
  data: Uint8ClampedArray; // RGBA, row-major
  width: number;
  height: number;
}

export function encodePpm(raster: Raster): Uint8Array {
  const { data, width, height } = raster;
  if (data.length !== width * height * 4) {
    throw new Error(`raster has ${data.length} bytes, expected ${width * height * 4}`);
  }
  const header = new TextEncoder().encode(`P6\n${width} ${height}\n255\n`);
  const out = new Uint8Array(header.length + width * height * 3);
  out.set(header, 0);
  let o = header.length;
  for (let i = 0; i < data.length; i += 4) {
    out[o++] = data[i];
    out[o++] = data[i + 1];
    out[o++] = data[i + 2]; // alpha dropped
  }
  return out;
}

/** Read width/height back out of a P6 payload (used by tests to assert what
 *  actually crosses the network). */
export function parsePpmHeader(bytes: Uint8Array): { width: number; height: number } {
  const head = new TextDecoder().decode(bytes.slice(0, 32));
  const match = /^P6\s+(\d+)\s+(\d+)\s+255\s/.exec(head);
  if (!match) {
    throw new Error("not a P6 payload");
  }
  return { width: Number(match[1]), height: Number(match[2]) };
}
