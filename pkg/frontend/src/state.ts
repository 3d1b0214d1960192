/** Pure session state for the benchmark grid.
 *
 * All interaction logic lives here so it can be tested without a DOM:
 * click-to-cycle selection, class hotkeys, clearing, the submit payload,
 * and progress counters. The state never holds ground truth — only image
 * ids and the user's own selections.
 */

/** Frame colors assigned to in-distribution classes, in order. */
export const CLASS_COLORS = [
  "#e6194b",
  "#3cb44b",
  "#4363d8",
  "#f58231",
  "#911eb4",
  "#46f0f0",
  "#f032e6",
  "#bcf60c",
  "#008080",
  "#9a6324",
] as const;

export interface UiState {
  sessionId: string;
  classNames: string[];
  nPages: number;
  pageSize: number;
  pageIndex: number;
  /** image ids on the current page, in grid order */
  pageImages: string[];
  /** selected class by image id; absent/null means unselected */
  selections: Record<string, string | null>;
  submittedPages: number[];
}

export function initialState(
  sessionId: string,
  classNames: string[],
  nPages: number,
  pageSize: number,
): UiState {
  if (classNames.length === 0) {
    throw new Error("session has no in-distribution classes");
  }
  if (classNames.length > CLASS_COLORS.length) {
    throw new Error(
      `at most ${CLASS_COLORS.length} classes supported, got ${classNames.length}`,
    );
  }
  return {
    sessionId,
    classNames,
    nPages,
    pageSize,
    pageIndex: 0,
    pageImages: [],
    selections: {},
    submittedPages: [],
  };
}

export function classColor(state: UiState, className: string): string {
  const idx = state.classNames.indexOf(className);
  if (idx < 0) throw new Error(`unknown class ${className}`);
  const color = CLASS_COLORS[idx];
  if (color === undefined) throw new Error(`no color for class index ${idx}`);
  return color;
}

export function withPage(
  state: UiState,
  pageIndex: number,
  imageIds: string[],
): UiState {
  if (pageIndex < 0 || pageIndex >= state.nPages) {
    throw new Error(`page ${pageIndex} out of range [0, ${state.nPages})`);
  }
  return { ...state, pageIndex, pageImages: [...imageIds] };
}

function setSelection(
  state: UiState,
  imageId: string,
  value: string | null,
): UiState {
  if (!state.pageImages.includes(imageId)) {
    throw new Error(`image ${imageId} is not on the current page`);
  }
  return {
    ...state,
    selections: { ...state.selections, [imageId]: value },
  };
}

/** Click handler: none -> class 0 -> class 1 -> ... -> none. */
export function cycleSelection(state: UiState, imageId: string): UiState {
  const current = state.selections[imageId] ?? null;
  let next: string | null;
  if (current === null) {
    next = state.classNames[0] ?? null;
  } else {
    const idx = state.classNames.indexOf(current);
    next =
      idx + 1 < state.classNames.length ? state.classNames[idx + 1]! : null;
  }
  return setSelection(state, imageId, next);
}

/** Hotkey handler: assign the class at classIndex directly. */
export function assignClass(
  state: UiState,
  imageId: string,
  classIndex: number,
): UiState {
  const name = state.classNames[classIndex];
  if (name === undefined) {
    throw new Error(`class index ${classIndex} out of range`);
  }
  return setSelection(state, imageId, name);
}

export function clearSelection(state: UiState, imageId: string): UiState {
  return setSelection(state, imageId, null);
}

/** Request body for POST .../selections: only selected images appear. */
export function submitPayload(state: UiState): Record<string, string> {
  const payload: Record<string, string> = {};
  for (const id of state.pageImages) {
    const sel = state.selections[id];
    if (sel !== undefined && sel !== null) payload[id] = sel;
  }
  return payload;
}

export function markSubmitted(state: UiState): UiState {
  const pages = new Set(state.submittedPages);
  pages.add(state.pageIndex);
  return { ...state, submittedPages: [...pages].sort((a, b) => a - b) };
}

export function isComplete(state: UiState): boolean {
  return state.submittedPages.length === state.nPages;
}

/** First page the server has not acknowledged, for resuming a session. */
export function firstUnsubmittedPage(state: UiState): number {
  for (let k = 0; k < state.nPages; k++) {
    if (!state.submittedPages.includes(k)) return k;
  }
  return state.nPages - 1;
}

export interface Progress {
  page: number;
  nPages: number;
  selectedOnPage: number;
  pagesDone: number;
}

export function progress(state: UiState): Progress {
  let selected = 0;
  for (const id of state.pageImages) {
    if (state.selections[id] != null) selected++;
  }
  return {
    page: state.pageIndex,
    nPages: state.nPages,
    selectedOnPage: selected,
    pagesDone: state.submittedPages.length,
  };
}
