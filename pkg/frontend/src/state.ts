// Upload item lifecycle. The only legal transitions are
// pending -> uploading -> scored | failed; a retry replaces a failed item
// with a fresh pending one instead of transitioning backwards.

export type UploadState = "pending" | "uploading" | "scored" | "failed";

export interface UploadItem {
  readonly id: number;
  readonly filename: string;
  /** PPM payload ready for upload; null when preparation failed. */
  readonly payload: Uint8Array | null;
  readonly width: number;
  readonly height: number;
  readonly state: UploadState;
  readonly score?: number;
  readonly error?: string;
  readonly kept: boolean;
  readonly thumbnailUrl?: string;
}

const ALLOWED: Record<UploadState, readonly UploadState[]> = {
  pending: ["uploading"],
  uploading: ["scored", "failed"],
  scored: [],
  failed: [],
};

export class TransitionError extends Error {}

let nextId = 1;

export function newItemId(): number {
  return nextId++;
}

export function makePendingItem(
  filename: string,
  payload: Uint8Array,
  width: number,
  height: number,
  thumbnailUrl?: string,
): UploadItem {
  return {
    id: newItemId(),
    filename,
    payload,
    width,
    height,
    state: "pending",
    kept: false,
    thumbnailUrl,
  };
}

export function makeFailedItem(filename: string, error: string): UploadItem {
  return {
    id: newItemId(),
    filename,
    payload: null,
    width: 0,
    height: 0,
    state: "failed",
    error,
    kept: false,
  };
}

/** Move an item to `next`, enforcing the state machine and the
 *  "score present iff scored" invariant. */
export function transition(
  item: UploadItem,
  next: UploadState,
  patch: { score?: number; error?: string } = {},
): UploadItem {
  if (!ALLOWED[item.state].includes(next)) {
    throw new TransitionError(`illegal transition ${item.state} -> ${next}`);
  }
  if (next === "scored" && typeof patch.score !== "number") {
    throw new TransitionError("scored state requires a score");
  }
  return {
    ...item,
    state: next,
    score: next === "scored" ? patch.score : undefined,
    error: next === "failed" ? (patch.error ?? "upload failed") : undefined,
  };
}

/** Retry affordance: a failed item is replaced by a fresh pending one. */
export function retryItem(item: UploadItem): UploadItem {
  if (item.state !== "failed") {
    throw new TransitionError(`can only retry failed items, not ${item.state}`);
  }
  if (item.payload === null) {
    throw new TransitionError("item has no payload to retry");
  }
  return {
    ...item,
    id: newItemId(),
    state: "pending",
    score: undefined,
    error: undefined,
  };
}

export function toggleKeep(item: UploadItem): UploadItem {
  if (item.state !== "scored") {
    throw new TransitionError("only scored items can be kept or discarded");
  }
  return { ...item, kept: !item.kept };
}
