"""HTTP service for the human OOD benchmark.

A session mixes images from an in-distribution pool and an outlier pool
(each a directory of class subdirectories), serves them in fixed-size
pages with no ground-truth fields, records which images the user tagged
with an in-distribution class, and scores the session with the shared
AUROC implementation over the induced binary confidences.

Sessions are persisted as append-only JSON-lines event logs and rebuilt
by replay, so they survive restarts.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from .metrics import ScoreSet, auroc

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
MEDIA_TYPES = {".png": "image/png", ".jpg": "image/jpeg", ".jpeg": "image/jpeg"}


class BenchError(ValueError):
    pass


@dataclass
class BenchSession:
    session_id: str
    manifest: list[dict]  # {image_id, path, source: in|out, true_class}
    page_size: int
    in_class_names: list[str]
    seed: int
    selections: dict[str, str | None] = field(default_factory=dict)
    submitted_pages: set[int] = field(default_factory=set)
    scored: bool = False

    @property
    def total_images(self) -> int:
        return len(self.manifest)

    @property
    def n_pages(self) -> int:
        return -(-self.total_images // self.page_size)

    def page_entries(self, page_index: int) -> list[dict]:
        if not 0 <= page_index < self.n_pages:
            raise BenchError(
                f"page {page_index} out of range [0, {self.n_pages})"
            )
        start = page_index * self.page_size
        return self.manifest[start : start + self.page_size]


def _scan_pool(pool_dir) -> list[tuple[str, str]]:
    """(class_name, path) pairs from class subdirectories, sorted for determinism."""
    root = Path(pool_dir)
    if not root.is_dir():
        raise BenchError(f"pool directory not found: {root}")
    entries = []
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for img in sorted(class_dir.iterdir()):
            if img.suffix.lower() in IMAGE_SUFFIXES:
                entries.append((class_dir.name, str(img)))
    if not entries:
        raise BenchError(f"pool {root} contains no images")
    return entries


def build_manifest(
    in_pool,
    out_pool,
    total_images: int,
    seed: int,
    exact_balance: bool = False,
) -> list[dict]:
    """Seeded manifest: each slot's pool chosen by fair coin (or exactly split),
    images drawn without replacement within each pool."""
    if total_images < 1:
        raise BenchError(f"total_images must be >= 1, got {total_images}")
    pools = {"in": _scan_pool(in_pool), "out": _scan_pool(out_pool)}
    combined = len(pools["in"]) + len(pools["out"])
    if total_images > combined:
        raise BenchError(
            f"total_images {total_images} exceeds combined pool size {combined}"
        )
    rng = np.random.default_rng(seed)
    order = {
        src: list(rng.permutation(len(items))) for src, items in pools.items()
    }
    if exact_balance:
        half = total_images // 2
        sources = ["in"] * (total_images - half) + ["out"] * half
        rng.shuffle(sources)
    else:
        sources = ["in" if rng.random() < 0.5 else "out" for _ in range(total_images)]
    manifest = []
    for i, src in enumerate(sources):
        if not order[src]:
            src = "out" if src == "in" else "in"  # chosen pool exhausted
        cls, path = pools[src][order[src].pop()]
        manifest.append(
            {"image_id": f"img{i:05d}", "path": path, "source": src, "true_class": cls}
        )
    return manifest


def score_session(session: BenchSession) -> dict:
    """Binary confidences (selected any in-class => 1) scored with metrics.auroc."""
    if len(session.submitted_pages) < session.n_pages:
        missing = sorted(set(range(session.n_pages)) - session.submitted_pages)
        raise BenchError(f"session incomplete, unsubmitted pages: {missing}")
    in_conf, out_conf = [], []
    n_sel_in = n_sel_out = 0
    confusions: dict[str, int] = {}
    truths = []
    for entry in session.manifest:
        sel = session.selections.get(entry["image_id"])
        conf = 1.0 if sel is not None else 0.0
        if entry["source"] == "in":
            in_conf.append(conf)
            n_sel_in += sel is not None
        else:
            out_conf.append(conf)
            n_sel_out += sel is not None
        if sel is not None:
            key = f"{sel}|{entry['true_class']}"
            confusions[key] = confusions.get(key, 0) + 1
        truths.append(
            {
                "image_id": entry["image_id"],
                "source": entry["source"],
                "true_class": entry["true_class"],
                "selected_class": sel,
            }
        )
    n_in, n_out = len(in_conf), len(out_conf)
    if n_in == 0 or n_out == 0:
        raise BenchError("session has no images on one side; cannot score")
    value = auroc(ScoreSet(in_scores=np.array(in_conf), out_scores=np.array(out_conf)))
    return {
        "auroc": value,
        "tpr": n_sel_in / n_in,
        "fpr": n_sel_out / n_out,
        "per_class_confusions": dict(sorted(confusions.items())),
        "n_in": n_in,
        "n_out": n_out,
        "ground_truth": truths,
    }


class SessionStore:
    """Sessions persisted as one JSONL event log each under a root directory."""

    def __init__(self, root_dir):
        self.root = Path(root_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._sessions: dict[str, BenchSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        for log in sorted(self.root.glob("*.jsonl")):
            session = self._replay(log)
            self._sessions[session.session_id] = session
            self._locks[session.session_id] = threading.Lock()

    def _log_path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.jsonl"

    def _append(self, session_id: str, event: dict) -> None:
        with open(self._log_path(session_id), "a") as f:
            f.write(json.dumps(event, sort_keys=True) + "\n")

    def _replay(self, log: Path) -> BenchSession:
        session = None
        with open(log) as f:
            for line in f:
                event = json.loads(line)
                if event["type"] == "created":
                    session = BenchSession(
                        session_id=event["session_id"],
                        manifest=event["manifest"],
                        page_size=event["page_size"],
                        in_class_names=event["in_class_names"],
                        seed=event["seed"],
                    )
                elif event["type"] == "selections":
                    _apply_selections(session, event["page_index"], event["selections"])
                elif event["type"] == "scored":
                    session.scored = True
        if session is None:
            raise BenchError(f"log {log} has no created event")
        return session

    def create(
        self,
        in_pool,
        out_pool,
        total_images: int,
        page_size: int = 20,
        seed: int = 0,
        in_class_names: list[str] | None = None,
        session_id: str | None = None,
        exact_balance: bool = False,
    ) -> BenchSession:
        if page_size < 1:
            raise BenchError(f"page_size must be >= 1, got {page_size}")
        with self._lock:
            sid = session_id or uuid.uuid4().hex
            if sid in self._sessions:
                raise BenchError(f"duplicate session id {sid!r}")
            manifest = build_manifest(
                in_pool, out_pool, total_images, seed, exact_balance
            )
            if in_class_names is None:
                in_class_names = sorted(
                    {e["true_class"] for e in manifest if e["source"] == "in"}
                ) or sorted({c for c, _ in _scan_pool(in_pool)})
            session = BenchSession(
                session_id=sid,
                manifest=manifest,
                page_size=page_size,
                in_class_names=in_class_names,
                seed=seed,
            )
            self._append(
                sid,
                {
                    "type": "created",
                    "session_id": sid,
                    "manifest": manifest,
                    "page_size": page_size,
                    "in_class_names": in_class_names,
                    "seed": seed,
                },
            )
            self._sessions[sid] = session
            self._locks[sid] = threading.Lock()
            return session

    def get(self, session_id: str) -> BenchSession:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise BenchError(f"unknown session {session_id!r}") from None

    def submit(self, session_id: str, page_index: int, selections: dict) -> None:
        session = self.get(session_id)
        with self._locks[session_id]:
            _apply_selections(session, page_index, selections)
            self._append(
                session_id,
                {
                    "type": "selections",
                    "page_index": page_index,
                    "selections": selections,
                },
            )

    def score(self, session_id: str) -> dict:
        session = self.get(session_id)
        with self._locks[session_id]:
            report = score_session(session)
            if not session.scored:
                session.scored = True
                self._append(session_id, {"type": "scored"})
            return report


def _apply_selections(session: BenchSession, page_index: int, selections: dict) -> None:
    entries = session.page_entries(page_index)
    page_ids = {e["image_id"] for e in entries}
    for image_id, class_name in selections.items():
        if image_id not in page_ids:
            raise BenchError(f"image {image_id!r} is not on page {page_index}")
        if class_name not in session.in_class_names:
            raise BenchError(f"unknown in-distribution class {class_name!r}")
    # resubmission overwrites the whole page; unselected images become "out"
    for e in entries:
        session.selections[e["image_id"]] = selections.get(e["image_id"])
    session.submitted_pages.add(page_index)


class CreateRequest(BaseModel):
    in_pool: str
    out_pool: str
    total_images: int
    page_size: int = 20
    seed: int = 0
    in_class_names: list[str] | None = None
    session_id: str | None = None
    exact_balance: bool = False


class SelectionsRequest(BaseModel):
    selections: dict[str, str]


def create_app(store: SessionStore, static_dir=None):
    """FastAPI app exposing the session protocol; ground truth only after scoring."""
    from fastapi import FastAPI, HTTPException
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.responses import FileResponse

    app = FastAPI(title="oodkit human benchmark")
    app.add_middleware(
        CORSMiddleware,
        allow_origin_regex=r"https?://(localhost|127\.0\.0\.1)(:\d+)?",
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def _get(session_id: str) -> BenchSession:
        try:
            return store.get(session_id)
        except BenchError as e:
            raise HTTPException(status_code=404, detail=str(e)) from e

    @app.post("/sessions")
    def create_session(req: CreateRequest):
        try:
            session = store.create(
                in_pool=req.in_pool,
                out_pool=req.out_pool,
                total_images=req.total_images,
                page_size=req.page_size,
                seed=req.seed,
                in_class_names=req.in_class_names,
                session_id=req.session_id,
                exact_balance=req.exact_balance,
            )
        except BenchError as e:
            raise HTTPException(status_code=400, detail=str(e)) from e
        return {
            "session_id": session.session_id,
            "total_images": session.total_images,
            "page_size": session.page_size,
            "n_pages": session.n_pages,
            "in_class_names": session.in_class_names,
        }

    @app.get("/sessions/{session_id}/pages/{page_index}")
    def get_page(session_id: str, page_index: int):
        session = _get(session_id)
        try:
            entries = session.page_entries(page_index)
        except BenchError as e:
            raise HTTPException(status_code=404, detail=str(e)) from e
        return {
            "page_index": page_index,
            "n_pages": session.n_pages,
            "images": [{"image_id": e["image_id"]} for e in entries],
            "submitted": page_index in session.submitted_pages,
        }

    @app.post("/sessions/{session_id}/pages/{page_index}/selections")
    def submit_selections(session_id: str, page_index: int, req: SelectionsRequest):
        _get(session_id)
        try:
            store.submit(session_id, page_index, req.selections)
        except BenchError as e:
            raise HTTPException(status_code=400, detail=str(e)) from e
        return {"ok": True, "page_index": page_index}

    @app.post("/sessions/{session_id}/score")
    def score(session_id: str):
        _get(session_id)
        try:
            return store.score(session_id)
        except BenchError as e:
            raise HTTPException(status_code=409, detail=str(e)) from e

    @app.get("/sessions/{session_id}/report")
    def report(session_id: str):
        session = _get(session_id)
        if not session.scored:
            raise HTTPException(status_code=409, detail="session not scored yet")
        return store.score(session_id)

    @app.get("/sessions/{session_id}/images/{image_id}")
    def image(session_id: str, image_id: str):
        session = _get(session_id)
        for entry in session.manifest:
            if entry["image_id"] == image_id:
                suffix = Path(entry["path"]).suffix.lower()
                return FileResponse(
                    entry["path"],
                    media_type=MEDIA_TYPES.get(suffix, "application/octet-stream"),
                    filename=f"{image_id}{suffix}",
                )
        raise HTTPException(status_code=404, detail=f"unknown image {image_id!r}")

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app
