// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient, BatchView, MetricsResponse } from "../src/api.js";
import { AnnotationApp, currentIndex, flattenPlan } from "../src/app.js";

function item(id: string, tags: string[] = []) {
  return {
    item_id: id,
    context: {
      time_display: "2021-01-01T00:00:00Z",
      place_display: "New York City",
      tags_display: tags,
      description_display: "a test image",
    },
  };
}

function batchView(overrides: Partial<BatchView> = {}): BatchView {
  return {
    session_complete: false,
    batch_index: 0,
    total_batches: 2,
    classes: ["cat", "dog"],
    mode: "caiaf",
    groups: [[item("a"), item("b"), item("c")], [item("d"), item("e")]],
    labeled: [],
    ...overrides,
  };
}

const EMPTY_METRICS: MetricsResponse = {
  batches: [],
  final_f1: null,
  session_complete: true,
};

interface FakeCall {
  itemId: string;
  className: string;
  elapsedMs: number;
}

/** Minimal scripted ApiClient double: serves a queue of batch views and
 * records submitted labels. */
function fakeApi(batches: BatchView[], perBatch = 5) {
  const calls: FakeCall[] = [];
  let served = 0;
  let labeledInBatch = 0;
  const api = {
    currentBatch: async () => {
      if (served >= batches.length) {
        return batchView({ session_complete: true, groups: [], labeled: [] });
      }
      const view = batches[served];
      labeledInBatch = view.labeled.length;
      return structuredClone(view);
    },
    submitLabel: async (_s: string, itemId: string, className: string,
                        elapsedMs: number) => {
      calls.push({ itemId, className, elapsedMs });
      labeledInBatch += 1;
      if (labeledInBatch < perBatch) return "ok";
      served += 1;
      return served >= batches.length ? "session_complete" : "batch_complete";
    },
    metrics: async () => EMPTY_METRICS,
    imageUrl: (id: string) => `/api/images/${id}`,
  };
  return { api: api as unknown as ApiClient, calls };
}

describe("plan helpers", () => {
  it("flattens groups in order", () => {
    const ids = flattenPlan(batchView()).map((i) => i.item_id);
    expect(ids).toEqual(["a", "b", "c", "d", "e"]);
  });

  it("current index skips the labeled prefix", () => {
    expect(currentIndex(batchView())).toBe(0);
    expect(currentIndex(batchView({ labeled: ["a", "b"] }))).toBe(2);
    expect(currentIndex(batchView({ labeled: ["a", "b", "c", "d", "e"] }))).toBe(5);
  });
});

describe("rendering", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app")!;
  });

  it("renders one dashed separator between two caiaf groups", async () => {
    const { api } = fakeApi([batchView()]);
    const app = new AnnotationApp(root, api, "s1");
    await app.start();
    expect(root.querySelectorAll(".group-separator")).toHaveLength(1);
    app.stop();
  });

  it("renders no separator in plain mode", async () => {
    const plain = batchView({ mode: "plain",
                              groups: [[item("a"), item("b"), item("c"),
                                        item("d"), item("e")]] });
    const { api } = fakeApi([plain]);
    const app = new AnnotationApp(root, api, "s1");
    await app.start();
    expect(root.querySelectorAll(".group-separator")).toHaveLength(0);
    app.stop();
  });

  it("shows progress and exactly one current item", async () => {
    const { api } = fakeApi([batchView({ batch_index: 1 })]);
    const app = new AnnotationApp(root, api, "s1");
    await app.start();
    expect(root.querySelector(".progress")!.textContent).toBe("batch 2 of 2");
    expect(root.querySelectorAll(".thumb.current")).toHaveLength(1);
    app.stop();
  });

  it("shows context from the payload only", async () => {
    const { api } = fakeApi([batchView({ groups: [[item("a", ["sunset"])]] })]);
    const app = new AnnotationApp(root, api, "s1");
    await app.start();
    const text = root.querySelector(".context-panel")!.textContent!;
    expect(text).toContain("2021-01-01T00:00:00Z");
    expect(text).toContain("New York City");
    expect(root.querySelector(".tag")!.textContent).toBe("sunset");
    app.stop();
  });

  it("resumes mid-batch at the first unlabeled item", async () => {
    const { api } = fakeApi([batchView({ labeled: ["a", "b"] })]);
    const app = new AnnotationApp(root, api, "s1");
    await app.start();
    expect(app.currentItem!.item_id).toBe("c");
    app.stop();
  });

  it("renders class buttons for every dataset class", async () => {
    const { api } = fakeApi([batchView()]);
    const app = new AnnotationApp(root, api, "s1");
    await app.start();
    const labels = [...root.querySelectorAll(".class-button")].map(
      (b) => b.textContent,
    );
    expect(labels).toEqual(["1. cat", "2. dog"]);
    app.stop();
  });
});

describe("labeling flow", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app")!;
  });

  it("posts labels in plan order and advances", async () => {
    const { api, calls } = fakeApi([batchView()]);
    const app = new AnnotationApp(root, api, "s1");
    await app.start();
    await app.choose("cat");
    await app.choose("dog");
    expect(calls.map((c) => c.itemId)).toEqual(["a", "b"]);
    expect(app.currentItem!.item_id).toBe("c");
    app.stop();
  });

  it("fetches the summary after the final label", async () => {
    const single = batchView({ groups: [[item("a")]], total_batches: 1 });
    const { api, calls } = fakeApi([single], 1);
    const app = new AnnotationApp(root, api, "s1");
    await app.start();
    await app.choose("dog");
    expect(calls).toHaveLength(1);
    expect(root.querySelector(".summary")).not.toBeNull();
    app.stop();
  });

  it("reports a measured elapsed time", async () => {
    let tick = 1000;
    const { api, calls } = fakeApi([batchView()]);
    const app = new AnnotationApp(root, api, "s1", { now: () => (tick += 250) });
    await app.start();
    await app.choose("cat");
    expect(calls[0].elapsedMs).toBeGreaterThan(0);
    app.stop();
  });

  it("keyboard digits mirror the class buttons", async () => {
    const { api, calls } = fakeApi([batchView()]);
    const app = new AnnotationApp(root, api, "s1");
    await app.start();
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "2" }));
    await new Promise((r) => setTimeout(r, 0));
    expect(calls[0].className).toBe("dog");
    app.stop();
  });
});
