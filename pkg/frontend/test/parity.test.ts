/** End-to-end parity against a live benchmark service.
 *
 * Spawns the Python service with generated fixture pools, drives the same
 * 90%-correct scripted session the backend acceptance test uses — but via
 * the UI's own client and state modules — and checks the report matches
 * the hand-countable value. Also asserts no pre-score response carries
 * ground-truth fields.
 */

import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { spawn, ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { BenchClient } from "../src/api.js";
import {
  assignClass,
  initialState,
  isComplete,
  markSubmitted,
  submitPayload,
  withPage,
} from "../src/state.js";

const PORT = 8791;
const BASE = `http://127.0.0.1:${PORT}`;

let workDir: string;
let server: ChildProcess | undefined;

const BOOTSTRAP = `
import sys
import numpy as np
import uvicorn
from PIL import Image
from pathlib import Path
from oodkit.bench import SessionStore, create_app

root = Path(sys.argv[1])
rng = np.random.default_rng(0)
for pool, classes, per in (("in_pool", ("cat", "dog"), 60), ("out_pool", ("noise",), 120)):
    for cls in classes:
        d = root / pool / cls
        d.mkdir(parents=True, exist_ok=True)
        for i in range(per):
            Image.fromarray(rng.integers(0, 256, size=(4, 4, 3), dtype=np.uint8)).save(d / f"{cls}_{i:03d}.png")
app = create_app(SessionStore(root / "sessions"))
uvicorn.run(app, host="127.0.0.1", port=int(sys.argv[2]), log_level="warning")
`;

async function waitForServer(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const resp = await fetch(`${BASE}/sessions/nope/pages/0`);
      if (resp.status === 404) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error("benchmark service did not start");
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "bench-parity-"));
  server = spawn("python3", ["-c", BOOTSTRAP, workDir, String(PORT)], {
    stdio: ["ignore", "inherit", "inherit"],
  });
  await waitForServer();
}, 30000);

afterAll(() => {
  server?.kill();
  rmSync(workDir, { recursive: true, force: true });
});

describe("UI-driven session parity", () => {
  it("scores the 90%-correct fixture at exactly 0.9", async () => {
    const client = new BenchClient(BASE);
    const info = await client.createSession({
      in_pool: join(workDir, "in_pool"),
      out_pool: join(workDir, "out_pool"),
      total_images: 200,
      seed: 3,
      exact_balance: true,
    });
    expect(info.n_pages).toBe(10);
    expect(info.in_class_names).toEqual(["cat", "dog"]);

    let state = initialState(
      info.session_id,
      info.in_class_names,
      info.n_pages,
      info.page_size,
    );

    // The client cannot see ground truth, so the scripted "90% correct"
    // selections come from the deterministic manifest the server builds for
    // seed 3: re-derive it by running the same seeded construction backend-
    // side would be cheating, so instead select a fixed per-page pattern
    // and verify the reported AUROC against the server's own TPR/FPR via
    // the midrank identity auroc = (1 + tpr - fpr) / 2, which holds for any
    // binary selection pattern.
    for (let k = 0; k < info.n_pages; k++) {
      const page = await client.getPage(info.session_id, k);
      const text = JSON.stringify(page);
      expect(text).not.toContain("true_class");
      expect(text).not.toContain('"source"');
      expect(text).not.toContain('"path"');
      expect(page.images).toHaveLength(20);

      state = withPage(
        state,
        k,
        page.images.map((im) => im.image_id),
      );
      // tag the first 9 images on each page as class 0
      for (let j = 0; j < 9; j++) {
        state = assignClass(state, state.pageImages[j]!, 0);
      }
      const payload = submitPayload(state);
      expect(Object.keys(payload)).toHaveLength(9);
      await client.submitSelections(info.session_id, k, payload);
      state = markSubmitted(state);
    }
    expect(isComplete(state)).toBe(true);

    const report = await client.score(info.session_id);
    expect(report.n_in).toBe(100);
    expect(report.n_out).toBe(100);
    // midrank identity for binary confidences
    expect(report.auroc).toBeCloseTo((1 + report.tpr - report.fpr) / 2, 12);

    // GET /report returns the identical report after scoring
    const again = await client.report(info.session_id);
    expect(again).toEqual(report);

    // ground truth appears only now, and covers every image
    expect(again.ground_truth).toHaveLength(200);
  }, 30000);

  it("reproduces the hand-countable 0.9 with ground truth revealed", async () => {
    // Second session: first run an all-empty pass to finish it, read the
    // report's ground truth, then replay the canonical 90%-correct pattern
    // in a third session over the same manifest (same seed => same order).
    const client = new BenchClient(BASE);
    const probe = await client.createSession({
      in_pool: join(workDir, "in_pool"),
      out_pool: join(workDir, "out_pool"),
      total_images: 200,
      seed: 17,
      exact_balance: true,
    });
    for (let k = 0; k < probe.n_pages; k++) {
      await client.submitSelections(probe.session_id, k, {});
    }
    const truth = (await client.score(probe.session_id)).ground_truth;

    const run = await client.createSession({
      in_pool: join(workDir, "in_pool"),
      out_pool: join(workDir, "out_pool"),
      total_images: 200,
      seed: 17,
      exact_balance: true,
    });
    const inIds = truth.filter((t) => t.source === "in").map((t) => t.image_id);
    const outIds = truth
      .filter((t) => t.source === "out")
      .map((t) => t.image_id);
    const byId = new Map(truth.map((t) => [t.image_id, t.true_class]));
    const picked = new Map<string, string>();
    for (const id of inIds.slice(0, 90)) picked.set(id, byId.get(id)!);
    for (const id of outIds.slice(0, 10)) picked.set(id, "cat");

    let state = initialState(
      run.session_id,
      run.in_class_names,
      run.n_pages,
      run.page_size,
    );
    for (let k = 0; k < run.n_pages; k++) {
      const page = await client.getPage(run.session_id, k);
      state = withPage(
        state,
        k,
        page.images.map((im) => im.image_id),
      );
      for (const id of state.pageImages) {
        const cls = picked.get(id);
        if (cls !== undefined) {
          state = assignClass(state, id, run.in_class_names.indexOf(cls));
        }
      }
      await client.submitSelections(run.session_id, k, submitPayload(state));
      state = markSubmitted(state);
    }
    const report = await client.score(run.session_id);
    expect(report.tpr).toBe(0.9);
    expect(report.fpr).toBe(0.1);
    expect(report.auroc).toBe(0.9);
  }, 30000);
});
