import { describe, expect, it } from "vitest";

import {
  CLASS_COLORS,
  assignClass,
  classColor,
  clearSelection,
  cycleSelection,
  firstUnsubmittedPage,
  initialState,
  isComplete,
  markSubmitted,
  progress,
  submitPayload,
  withPage,
} from "../src/state.js";

const CLASSES = ["cat", "dog", "frog"];

function freshState() {
  const ids = Array.from({ length: 20 }, (_, i) =>
    `img${String(i).padStart(5, "0")}`,
  );
  return withPage(initialState("s1", CLASSES, 3, 20), 0, ids);
}

describe("selection cycling", () => {
  it("cycles none -> each class in order -> none", () => {
    let s = freshState();
    const seen: (string | null)[] = [s.selections["img00000"] ?? null];
    for (let i = 0; i < CLASSES.length + 1; i++) {
      s = cycleSelection(s, "img00000");
      seen.push(s.selections["img00000"] ?? null);
    }
    expect(seen).toEqual([null, "cat", "dog", "frog", null]);
  });

  it("only touches the clicked image", () => {
    const s = cycleSelection(freshState(), "img00003");
    expect(s.selections["img00003"]).toBe("cat");
    expect(Object.keys(s.selections)).toEqual(["img00003"]);
  });

  it("rejects images not on the current page", () => {
    expect(() => cycleSelection(freshState(), "img99999")).toThrow(
      /not on the current page/,
    );
  });
});

describe("hotkeys and clearing", () => {
  it("assigns the indexed class directly", () => {
    const s = assignClass(freshState(), "img00001", 2);
    expect(s.selections["img00001"]).toBe("frog");
  });

  it("rejects out-of-range class indices", () => {
    expect(() => assignClass(freshState(), "img00001", 3)).toThrow(
      /out of range/,
    );
    expect(() => assignClass(freshState(), "img00001", -1)).toThrow();
  });

  it("clear removes a selection", () => {
    let s = assignClass(freshState(), "img00001", 1);
    s = clearSelection(s, "img00001");
    expect(s.selections["img00001"]).toBeNull();
    expect(submitPayload(s)).toEqual({});
  });
});

describe("invariants", () => {
  it("every selection names a served class", () => {
    let s = freshState();
    s = cycleSelection(s, "img00000");
    s = assignClass(s, "img00005", 1);
    for (const sel of Object.values(s.selections)) {
      if (sel !== null) expect(CLASSES).toContain(sel);
    }
  });

  it("state carries no ground-truth fields", () => {
    const s = cycleSelection(freshState(), "img00000");
    const text = JSON.stringify(s);
    expect(text).not.toContain("true_class");
    expect(text).not.toContain("source");
  });

  it("class colors are distinct and stable", () => {
    expect(new Set(CLASS_COLORS).size).toBe(CLASS_COLORS.length);
    const s = freshState();
    expect(classColor(s, "cat")).toBe(CLASS_COLORS[0]);
    expect(classColor(s, "frog")).toBe(CLASS_COLORS[2]);
    expect(() => classColor(s, "zebra")).toThrow(/unknown class/);
  });

  it("caps the number of classes at the palette size", () => {
    const many = Array.from({ length: 11 }, (_, i) => `c${i}`);
    expect(() => initialState("s", many, 1, 20)).toThrow(/at most/);
  });
});

describe("submit payload and paging", () => {
  it("includes only selected images from the current page", () => {
    let s = freshState();
    s = assignClass(s, "img00000", 0);
    s = assignClass(s, "img00019", 2);
    s = clearSelection(s, "img00000");
    expect(submitPayload(s)).toEqual({ img00019: "frog" });
  });

  it("an empty page submits an empty object", () => {
    expect(submitPayload(freshState())).toEqual({});
  });

  it("tracks submitted pages and completion", () => {
    let s = freshState();
    s = markSubmitted(s); // page 0
    expect(isComplete(s)).toBe(false);
    expect(firstUnsubmittedPage(s)).toBe(1);
    s = markSubmitted(withPage(s, 2, []));
    expect(firstUnsubmittedPage(s)).toBe(1);
    s = markSubmitted(withPage(s, 1, []));
    expect(s.submittedPages).toEqual([0, 1, 2]);
    expect(isComplete(s)).toBe(true);
  });

  it("resubmitting a page does not double-count", () => {
    let s = markSubmitted(freshState());
    s = markSubmitted(s);
    expect(s.submittedPages).toEqual([0]);
  });

  it("rejects out-of-range pages", () => {
    expect(() => withPage(freshState(), 3, [])).toThrow(/out of range/);
  });

  it("progress counts selections on the current page", () => {
    let s = freshState();
    s = assignClass(s, "img00000", 0);
    s = assignClass(s, "img00001", 1);
    const p = progress(s);
    expect(p).toEqual({ page: 0, nPages: 3, selectedOnPage: 2, pagesDone: 0 });
  });
});
