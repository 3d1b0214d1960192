/** DOM wiring for the benchmark UI.
 *
 * Served as static files by the benchmark service; the page talks to the
 * same origin. Flow: create (or resume) a session, page through grids of
 * images, tag in-distribution images by clicking (cycles classes) or with
 * number hotkeys on the hovered cell, submit each page, and show the
 * server's report at the end. The server is the source of truth: refresh
 * resumes at the first unsubmitted page, and selections stay client-side
 * until the submit is acknowledged.
 */

import { ApiError, BenchClient, Report } from "./api.js";
import {
  UiState,
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
} from "./state.js";

const client = new BenchClient("");
const root = document.getElementById("app")!;

let state: UiState | null = null;
let hoveredImage: string | null = null;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

function renderSetup(message = ""): void {
  root.replaceChildren();
  const form = el("form", { class: "setup" });
  form.append(el("h1", {}, "Human OOD benchmark"));
  if (message) form.append(el("p", { class: "error" }, message));
  const fields: [string, string, string][] = [
    ["in_pool", "In-distribution pool directory (on the server)", ""],
    ["out_pool", "Outlier pool directory (on the server)", ""],
    ["total_images", "Total images", "200"],
    ["seed", "Seed", "0"],
  ];
  for (const [name, label, value] of fields) {
    const row = el("label", {}, label);
    row.append(el("input", { name, value }));
    form.append(row);
  }
  const balance = el("label", {}, "Exact in/out balance");
  balance.append(el("input", { name: "exact_balance", type: "checkbox" }));
  form.append(balance);
  form.append(el("button", { type: "submit" }, "Start session"));
  form.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    const data = new FormData(form);
    try {
      const info = await client.createSession({
        in_pool: String(data.get("in_pool")),
        out_pool: String(data.get("out_pool")),
        total_images: Number(data.get("total_images")),
        seed: Number(data.get("seed")),
        exact_balance: data.get("exact_balance") === "on",
      });
      window.location.hash = info.session_id;
      state = initialState(
        info.session_id,
        info.in_class_names,
        info.n_pages,
        info.page_size,
      );
      await loadPage(0);
    } catch (e) {
      renderSetup(e instanceof Error ? e.message : String(e));
    }
  });
  root.append(form);
}

async function resumeSession(sessionId: string): Promise<void> {
  // Probe page 0 for shape, then find the first unsubmitted page.
  const first = await client.getPage(sessionId, 0);
  // in_class_names is only in the create response; resuming needs a probe
  // submit of {} to learn classes would be destructive, so we stash them.
  const stored = localStorage.getItem(`classes:${sessionId}`);
  if (!stored) throw new Error("session classes unknown; start a new session");
  state = initialState(
    sessionId,
    JSON.parse(stored) as string[],
    first.n_pages,
    first.images.length,
  );
  for (let k = 0; k < first.n_pages; k++) {
    const page = k === 0 ? first : await client.getPage(sessionId, k);
    if (page.submitted) state = markSubmitted(withPage(state, k, []));
  }
  if (isComplete(state)) {
    renderReport(await client.report(sessionId));
  } else {
    await loadPage(firstUnsubmittedPage(state));
  }
}

async function loadPage(pageIndex: number): Promise<void> {
  if (!state) return;
  const page = await client.getPage(state.sessionId, pageIndex);
  state = withPage(
    state,
    pageIndex,
    page.images.map((im) => im.image_id),
  );
  localStorage.setItem(
    `classes:${state.sessionId}`,
    JSON.stringify(state.classNames),
  );
  renderGrid();
}

function renderGrid(): void {
  if (!state) return;
  const s = state;
  root.replaceChildren();

  const bar = el("div", { class: "bar" });
  const p = progress(s);
  bar.append(
    el("span", {}, `Page ${p.page + 1} / ${p.nPages}`),
    el("span", { class: "hint" },
      "click: cycle class · number key: assign class to hovered image · 0/backspace: clear"),
  );
  root.append(bar);

  const palette = el("div", { class: "palette" });
  s.classNames.forEach((name, i) => {
    const chip = el("span", { class: "chip" }, `${i + 1} ${name}`);
    chip.style.borderColor = classColor(s, name);
    palette.append(chip);
  });
  root.append(palette);

  const grid = el("div", { class: "grid" });
  for (const imageId of s.pageImages) {
    grid.append(renderCell(imageId));
  }
  root.append(grid);

  const submit = el("button", { class: "submit" },
    s.pageIndex + 1 < s.nPages ? "Submit page & next" : "Submit page & score");
  submit.addEventListener("click", () => void submitCurrentPage());
  root.append(submit);
}

function renderCell(imageId: string): HTMLElement {
  const s = state!;
  const cell = el("div", { class: "cell", "data-image": imageId });
  const img = el("img", {
    src: client.imageUrl(s.sessionId, imageId),
    alt: imageId,
    draggable: "false",
  });
  img.addEventListener("error", () => {
    const retry = el("button", { class: "retry" }, "retry");
    retry.addEventListener("click", () => {
      retry.remove();
      img.src = `${client.imageUrl(s.sessionId, imageId)}?t=${Date.now()}`;
      cell.prepend(img);
    });
    img.remove();
    cell.append(retry);
  });
  cell.append(img);
  cell.addEventListener("click", (ev) => {
    state = ev.shiftKey
      ? clearSelection(state!, imageId)
      : cycleSelection(state!, imageId);
    refreshCell(cell, imageId);
  });
  cell.addEventListener("mouseenter", () => (hoveredImage = imageId));
  cell.addEventListener("mouseleave", () => {
    if (hoveredImage === imageId) hoveredImage = null;
  });
  refreshCell(cell, imageId);
  return cell;
}

function refreshCell(cell: HTMLElement, imageId: string): void {
  const sel = state!.selections[imageId] ?? null;
  cell.style.outline = sel
    ? `4px solid ${classColor(state!, sel)}`
    : "4px solid transparent";
  cell.title = sel ?? "unselected";
}

document.addEventListener("keydown", (ev) => {
  if (!state || !hoveredImage) return;
  if (ev.key === "0" || ev.key === "Backspace") {
    state = clearSelection(state, hoveredImage);
  } else {
    const idx = Number.parseInt(ev.key, 10) - 1;
    if (Number.isNaN(idx) || idx < 0 || idx >= state.classNames.length) return;
    state = assignClass(state, hoveredImage, idx);
  }
  const cell = root.querySelector<HTMLElement>(
    `[data-image="${hoveredImage}"]`,
  );
  if (cell) refreshCell(cell, hoveredImage);
});

async function submitCurrentPage(): Promise<void> {
  if (!state) return;
  const payload = submitPayload(state);
  const pageIndex = state.pageIndex;
  // selections stay in `state` until the server acks; retry on failure
  for (let attempt = 0; ; attempt++) {
    try {
      await client.submitSelections(state.sessionId, pageIndex, payload);
      break;
    } catch (e) {
      if (e instanceof ApiError && e.status < 500) {
        renderSetup(e.message);
        return;
      }
      if (attempt >= 4) {
        alert("submit failed repeatedly; selections kept — try again");
        return;
      }
      await new Promise((r) => setTimeout(r, 500 * 2 ** attempt));
    }
  }
  state = markSubmitted(state);
  if (isComplete(state)) {
    renderReport(await client.score(state.sessionId));
  } else {
    await loadPage(firstUnsubmittedPage(state));
  }
}

function renderReport(report: Report): void {
  root.replaceChildren();
  root.append(el("h1", {}, "Session report"));
  const stats = el("dl", { class: "report" });
  const rows: [string, string][] = [
    ["AUROC", report.auroc.toFixed(4)],
    ["TPR", report.tpr.toFixed(4)],
    ["FPR", report.fpr.toFixed(4)],
    ["In-distribution images", String(report.n_in)],
    ["Outlier images", String(report.n_out)],
  ];
  for (const [k, v] of rows) {
    stats.append(el("dt", {}, k), el("dd", {}, v));
  }
  root.append(stats);
  root.append(el("h2", {}, "Per-class confusions (selected | true)"));
  const table = el("table", { class: "confusions" });
  for (const [key, count] of Object.entries(report.per_class_confusions)) {
    const tr = el("tr");
    tr.append(el("td", {}, key), el("td", {}, String(count)));
    table.append(tr);
  }
  root.append(table);
}

async function init(): Promise<void> {
  const sessionId = window.location.hash.slice(1);
  if (sessionId) {
    try {
      await resumeSession(sessionId);
      return;
    } catch (e) {
      renderSetup(e instanceof Error ? e.message : String(e));
      return;
    }
  }
  renderSetup();
}

void init();
