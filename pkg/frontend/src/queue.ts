// Upload scheduling: at most 3 uploads in flight, every state change applied
// through one serialized event queue so listeners always observe a
// consistent ordering.

import type { ScoreReply } from "./api.js";
import { retryItem, transition, type UploadItem } from "./state.js";

export type SubmitFn = (item: UploadItem) => Promise<ScoreReply>;

export const MAX_IN_FLIGHT = 3;

export class UploadQueue {
  private items = new Map<number, UploadItem>();
  private order: number[] = [];
  private waiting: number[] = [];
  private inFlight = 0;
  private listeners: Array<(items: UploadItem[]) => void> = [];
  private events: Array<() => void> = [];
  private draining = false;
  private idleWaiters: Array<() => void> = [];

  constructor(
    private readonly submit: SubmitFn,
    private readonly concurrency: number = MAX_IN_FLIGHT,
  ) {}

  /** Add prepared items. Items already tracked are ignored, which is what
   *  disables duplicate submission while an upload is running. */
  add(newItems: readonly UploadItem[]): void {
    this.dispatch(() => {
      for (const item of newItems) {
        if (this.items.has(item.id)) {
          continue;
        }
        this.items.set(item.id, item);
        this.order.push(item.id);
        if (item.state === "pending") {
          this.waiting.push(item.id);
        }
      }
      this.pump();
    });
  }

  retry(id: number): void {
    this.dispatch(() => {
      const item = this.items.get(id);
      if (!item || item.state !== "failed" || item.payload === null) {
        return;
      }
      const fresh = retryItem(item);
      this.items.delete(id);
      this.items.set(fresh.id, fresh);
      this.order[this.order.indexOf(id)] = fresh.id;
      this.waiting.push(fresh.id);
      this.pump();
    });
  }

  update(id: number, change: (item: UploadItem) => UploadItem): void {
    this.dispatch(() => {
      const item = this.items.get(id);
      if (item) {
        this.items.set(id, change(item));
      }
    });
  }

  snapshot(): UploadItem[] {
    return this.order.map((id) => this.items.get(id)!);
  }

  onChange(listener: (items: UploadItem[]) => void): void {
    this.listeners.push(listener);
  }

  /** Resolves once nothing is pending or uploading. */
  idle(): Promise<void> {
    if (this.inFlight === 0 && this.waiting.length === 0) {
      return Promise.resolve();
    }
    return new Promise((resolve) => this.idleWaiters.push(resolve));
  }

  private dispatch(event: () => void): void {
    this.events.push(event);
    if (this.draining) {
      return;
    }
    this.draining = true;
    try {
      let next;
      while ((next = this.events.shift())) {
        next();
        this.emit();
      }
    } finally {
      this.draining = false;
    }
    if (this.inFlight === 0 && this.waiting.length === 0) {
      const waiters = this.idleWaiters.splice(0);
      for (const resolve of waiters) {
        resolve();
      }
    }
  }

  private pump(): void {
    while (this.inFlight < this.concurrency && this.waiting.length > 0) {
      const id = this.waiting.shift()!;
      const item = this.items.get(id);
      if (!item || item.state !== "pending") {
        continue;
      }
      this.inFlight += 1;
      const uploading = transition(item, "uploading");
      this.items.set(id, uploading);
      this.submit(uploading)
        .then((reply) => this.settle(id, (it) => transition(it, "scored", { score: reply.score })))
        .catch((err) => this.settle(id, (it) =>
          transition(it, "failed", { error: err instanceof Error ? err.message : String(err) })));
    }
  }

  private settle(id: number, change: (item: UploadItem) => UploadItem): void {
    this.dispatch(() => {
      const item = this.items.get(id);
      this.inFlight -= 1;
      if (item && item.state === "uploading") {
        this.items.set(id, change(item));
      }
      this.pump();
    });
  }

  private emit(): void {
    const view = this.snapshot();
    for (const listener of this.listeners) {
      listener(view);
    }
  }
}
