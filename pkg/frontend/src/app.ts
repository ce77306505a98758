/** Annotation view: a batch row with dashed group separators, the enlarged
 * current image with its metadata context, class buttons, and a progress
 * counter. Labels are posted strictly in plan order with client-measured
 * elapsed time; the next post starts only after the previous acknowledgment. */

import { ApiClient, BatchView, PlanItem } from "./api.js";

export interface AppOptions {
  /** Monotonic clock in milliseconds (injectable for tests). */
  now?: () => number;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function flattenPlan(batch: BatchView): PlanItem[] {
  return batch.groups.flat();
}

/** First unlabeled item in plan order; a refresh mid-batch resumes there. */
export function currentIndex(batch: BatchView): number {
  const labeled = new Set(batch.labeled);
  const items = flattenPlan(batch);
  const idx = items.findIndex((item) => !labeled.has(item.item_id));
  return idx === -1 ? items.length : idx;
}

export class AnnotationApp {
  private batch: BatchView | null = null;
  private items: PlanItem[] = [];
  private index = 0;
  private shownAt = 0;
  private posting = false;
  private readonly now: () => number;
  private keyHandler: ((ev: KeyboardEvent) => void) | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly sessionId: string,
    options: AppOptions = {},
  ) {
    this.now = options.now ?? (() => performance.now());
  }

  async start(): Promise<void> {
    this.attachKeyboard();
    await this.loadBatch();
  }

  stop(): void {
    if (this.keyHandler) {
      document.removeEventListener("keydown", this.keyHandler);
      this.keyHandler = null;
    }
  }

  get currentItem(): PlanItem | null {
    return this.items[this.index] ?? null;
  }

  private attachKeyboard(): void {
    this.keyHandler = (ev: KeyboardEvent) => {
      const classes = this.batch?.classes ?? [];
      const digit = parseInt(ev.key, 10);
      if (digit >= 1 && digit <= classes.length) {
        void this.choose(classes[digit - 1]);
      }
    };
    document.addEventListener("keydown", this.keyHandler);
  }

  async loadBatch(): Promise<void> {
    const batch = await this.api.currentBatch(this.sessionId);
    this.batch = batch;
    if (batch.session_complete) {
      await this.renderSummary();
      return;
    }
    this.items = flattenPlan(batch);
    this.index = currentIndex(batch);
    this.render();
    this.shownAt = this.now();
  }

  async choose(className: string): Promise<void> {
    const item = this.currentItem;
    if (!item || this.posting || !this.batch) return;
    const elapsed = this.now() - this.shownAt;
    this.posting = true;
    try {
      const status = await this.api.submitLabel(
        this.sessionId, item.item_id, className, elapsed,
      );
      if (status === "ok") {
        this.batch.labeled.push(item.item_id);
        this.index += 1;
        this.render();
        this.shownAt = this.now();
      } else {
        // batch_complete or session_complete: pull the next state
        await this.loadBatch();
      }
    } finally {
      this.posting = false;
    }
  }

  private render(): void {
    const batch = this.batch!;
    this.root.textContent = "";

    const header = el("div", "header");
    header.appendChild(el(
      "div", "progress",
      `batch ${batch.batch_index + 1} of ${batch.total_batches}`,
    ));
    header.appendChild(el("div", "mode-tag", batch.mode));
    this.root.appendChild(header);

    const item = this.currentItem;
    const main = el("div", "main");
    main.appendChild(this.renderContextPanel(item));
    main.appendChild(this.renderStage(item, batch.classes));
    this.root.appendChild(main);

    this.root.appendChild(this.renderBatchRow(batch));
  }

  private renderContextPanel(item: PlanItem | null): HTMLElement {
    const panel = el("div", "context-panel");
    panel.appendChild(el("h3", undefined, "context"));
    const ctx = item?.context;
    const rows: Array<[string, string | null]> = [
      ["time", ctx?.time_display ?? null],
      ["place", ctx?.place_display ?? null],
      ["description", ctx?.description_display ?? null],
    ];
    for (const [label, value] of rows) {
      if (value === null) continue;
      const row = el("div", "context-row");
      row.appendChild(el("span", "context-label", label));
      row.appendChild(el("span", "context-value", value));
      panel.appendChild(row);
    }
    return panel;
  }

  private renderStage(item: PlanItem | null, classes: string[]): HTMLElement {
    const stage = el("div", "stage");
    if (item) {
      const tags = el("div", "tags");
      for (const tag of item.context.tags_display) {
        tags.appendChild(el("span", "tag", tag));
      }
      stage.appendChild(tags);
      const img = el("img", "current-image");
      img.src = this.api.imageUrl(item.item_id);
      img.alt = item.item_id;
      stage.appendChild(img);
    }
    const buttons = el("div", "class-buttons");
    classes.forEach((name, i) => {
      const button = el("button", "class-button", `${i + 1}. ${name}`);
      button.dataset.className = name;
      button.addEventListener("click", () => void this.choose(name));
      buttons.appendChild(button);
    });
    stage.appendChild(buttons);
    return stage;
  }

  private renderBatchRow(batch: BatchView): HTMLElement {
    const row = el("div", "batch-row");
    const labeled = new Set(batch.labeled);
    const current = this.currentItem;
    batch.groups.forEach((group, g) => {
      if (g > 0 && batch.mode === "caiaf") {
        row.appendChild(el("div", "group-separator"));
      }
      for (const item of group) {
        const thumb = el("div", "thumb");
        if (labeled.has(item.item_id)) thumb.classList.add("done");
        if (current && item.item_id === current.item_id) {
          thumb.classList.add("current");
        }
        const img = el("img");
        img.src = this.api.imageUrl(item.item_id);
        img.alt = item.item_id;
        thumb.appendChild(img);
        row.appendChild(thumb);
      }
    });
    return row;
  }

  private async renderSummary(): Promise<void> {
    const metrics = await this.api.metrics(this.sessionId);
    this.root.textContent = "";
    const box = el("div", "summary");
    box.appendChild(el("h2", undefined, "session complete"));
    if (metrics.final_f1 !== null) {
      box.appendChild(el("div", "final-f1",
                         `final F1: ${metrics.final_f1.toFixed(4)}`));
    }
    const table = el("table", "metrics-table");
    const head = el("tr");
    for (const column of ["batch", "time (ms)", "cumulative (ms)", "holdout F1"]) {
      head.appendChild(el("th", undefined, column));
    }
    table.appendChild(head);
    for (const b of metrics.batches) {
      const tr = el("tr");
      tr.appendChild(el("td", undefined, String(b.batch_index + 1)));
      tr.appendChild(el("td", undefined, b.batch_ms.toFixed(0)));
      tr.appendChild(el("td", undefined, b.cumulative_ms.toFixed(0)));
      tr.appendChild(el("td", undefined, b.holdout_f1.toFixed(4)));
      table.appendChild(tr);
    }
    box.appendChild(table);
    this.root.appendChild(box);
  }
}
