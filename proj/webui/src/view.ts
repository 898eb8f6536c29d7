// Pure view-model helpers, kept free of the DOM so they can be tested.

import type { EnhanceResponse } from "./api.js";

export interface AttentionBar {
  index: number;
  weight: number;
  percent: string;
}

/** One bar per preferred pair; none for methods without attention. */
export function attentionBars(r: EnhanceResponse): AttentionBar[] {
  if (r.method !== "masked" || !r.attention) return [];
  return r.attention.map((w, index) => ({ index, weight: w, percent: `${(100 * w).toFixed(1)}%` }));
}

export interface GalleryItem {
  original: string;
  retouched: string;
}

/** Session state mirrored client side; the server count wins on disagreement. */
export class Gallery {
  items: GalleryItem[] = [];

  commit(item: GalleryItem, serverCount: number) {
    this.items.push(item);
    this.reconcile(serverCount);
  }

  remove(index: number, serverCount: number) {
    this.items.splice(index, 1);
    this.reconcile(serverCount);
  }

  private reconcile(serverCount: number) {
    if (this.items.length !== serverCount)
      throw new Error(`gallery holds ${this.items.length} pairs but the session has ${serverCount}`);
  }
}
