// Batch culling view: scored items ranked best-first for keep/discard triage.

import type { UploadItem } from "./state.js";

/** Scored items sorted by score descending; ties fall back to filename. */
export function rankScored(items: readonly UploadItem[]): UploadItem[] {
  return items
    .filter((item) => item.state === "scored")
    .sort((a, b) => {
      if (b.score! !== a.score!) {
        return b.score! - a.score!;
      }
      return a.filename < b.filename ? -1 : a.filename > b.filename ? 1 : 0;
    });
}

/** Exactly the kept filenames, ranked order, one per line. */
export function exportKept(items: readonly UploadItem[]): string {
  const kept = rankScored(items).filter((item) => item.kept);
  return kept.map((item) => item.filename).join("\n") + (kept.length ? "\n" : "");
}

export function formatScore(score: number): string {
  return `${Math.round(score * 100)}%`;
}

/** Red (0) through green (120) hue scale for the score badge. */
export function scoreColor(score: number): string {
  const clamped = Math.min(1, Math.max(0, score));
  return `hsl(${Math.round(clamped * 120)}, 70%, 42%)`;
}
