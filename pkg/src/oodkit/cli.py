"""Command-line surface: fit, score, eval, train-oe, zshot, pca, serve-bench.

Every run writes a manifest JSON echoing the resolved configuration into
the output directory. Exit codes: 0 success, 2 input error, 3 numerical
failure. OODKIT_THREADS caps BLAS worker threads when set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

EXIT_INPUT_ERROR = 2
EXIT_NUMERICAL_ERROR = 3


def _json_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(_json_dumps(obj))


def _write_manifest(out_dir, subcommand: str, config: dict) -> None:
    _write_json(
        Path(out_dir) / f"{subcommand}_manifest.json",
        {"subcommand": subcommand, "config": config},
    )


def _load(path, fmt: str, csv_labels: bool = False):
    from . import embed_store

    return embed_store.load_embeddings(path, format=fmt, csv_labels=csv_labels)


def _metrics_report(in_scores, out_scores, curves_prefix=None) -> dict:
    from . import metrics

    s = metrics.ScoreSet(in_scores=in_scores, out_scores=out_scores)
    report = {
        "auroc": metrics.auroc(s),
        "auprc": metrics.auprc(s),
        "fpr95": metrics.fpr_at_tpr(s, 95.0),
        "m": int(s.out_scores.size),
        "n": int(s.in_scores.size),
    }
    if curves_prefix:
        _write_curve(f"{curves_prefix}_roc.csv", metrics.roc_points(s), "fpr,tpr")
        _write_curve(f"{curves_prefix}_pr.csv", metrics.pr_points(s), "recall,precision")
    return report


def _write_curve(path, points, header) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(header + "\n")
        for x, y in points:
            f.write(f"{x!r},{y!r}\n")


def _write_scores(path, scores) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write("score\n")
        for v in scores:
            f.write(f"{float(v)!r}\n")


def cmd_fit(args) -> int:
    from . import maha

    train = _load(args.train, args.format, csv_labels=args.format == "csv")
    model = maha.fit_gaussian(train, epsilon=args.epsilon)
    model_path = args.model_out or str(Path(args.out_dir) / "gaussian.oodgau")
    Path(model_path).parent.mkdir(parents=True, exist_ok=True)
    maha.save_gaussian(model, model_path)
    _write_manifest(
        args.out_dir,
        "fit",
        {
            "train": args.train,
            "format": args.format,
            "epsilon_requested": args.epsilon,
            "epsilon_used": model.epsilon,
            "epsilon_escalated": args.epsilon is not None
            and model.epsilon != args.epsilon,
            "model_out": model_path,
            "k": model.n_classes,
            "d": model.dim,
        },
    )
    print(model_path)
    return 0


def _sniff_model(path):
    from . import embed_store, maha, oe_head

    with open(path, "rb") as f:
        magic = f.read(8)
    if magic == maha.GAUSSIAN_MAGIC:
        return "gaussian", maha.load_gaussian(path)
    if magic == oe_head.HEAD_MAGIC:
        return "oe_head", oe_head.load_head(path)
    raise embed_store.FormatError(f"{path}: unrecognized model magic {magic!r}")


def cmd_score(args) -> int:
    from . import maha, oe_head

    kind, model = _sniff_model(args.model)
    query = _load(args.embeddings, args.format)
    if kind == "gaussian":
        scores = maha.score_maha(model, query)
    else:
        scores = oe_head.score_oe(model, query)
    scores_path = args.scores_out or str(Path(args.out_dir) / "scores.csv")
    _write_scores(scores_path, scores)
    _write_manifest(
        args.out_dir,
        "score",
        {
            "model": args.model,
            "model_kind": kind,
            "embeddings": args.embeddings,
            "format": args.format,
            "scores_out": scores_path,
        },
    )
    print(scores_path)
    return 0


def cmd_eval(args) -> int:
    config = {"method": args.method, "seed": args.seed}
    if args.method == "maha":
        from . import maha

        train = _load(args.train, args.format, csv_labels=args.format == "csv")
        model = maha.fit_gaussian(train, epsilon=args.epsilon)
        in_scores = maha.score_maha(model, _load(args.in_test, args.format))
        out_scores = maha.score_maha(model, _load(args.out_test, args.format))
        config.update(
            {
                "train": args.train,
                "in_test": args.in_test,
                "out_test": args.out_test,
                "epsilon_used": model.epsilon,
            }
        )
    elif args.method == "msp":
        from . import probs

        def msp_of(path):
            es = _load(path, args.format)
            ls = probs.LogitSet(logits=es.data, in_indices=(0,))
            return probs.score_msp(ls, presoftmaxed=args.presoftmaxed)

        in_scores = msp_of(args.in_test)
        out_scores = msp_of(args.out_test)
        config.update(
            {
                "in_test": args.in_test,
                "out_test": args.out_test,
                "presoftmaxed": args.presoftmaxed,
                # MSP is taken over every output column; when the inputs come
                # from an outlier-exposure head this is not the same score as
                # the head's p(in|x).
                "msp_over_all_columns": True,
            }
        )
    elif args.method == "oe":
        from . import oe_head

        head = oe_head.load_head(args.head)
        in_scores = oe_head.score_oe(head, _load(args.in_test, args.format))
        out_scores = oe_head.score_oe(head, _load(args.out_test, args.format))
        config.update(
            {"head": args.head, "in_test": args.in_test, "out_test": args.out_test}
        )
    elif args.method == "zshot":
        labels = _candidate_labels(args)
        from . import zshot

        in_scores = zshot.score_zshot(_load(args.in_test, args.format), labels)
        out_scores = zshot.score_zshot(_load(args.out_test, args.format), labels)
        config.update(
            {
                "in_test": args.in_test,
                "out_test": args.out_test,
                "in_labels": args.in_labels,
                "out_labels": args.out_labels,
                "raw": args.raw,
                "temperature": args.temperature,
                "baseline_msp_fallback": labels.o_out == 0,
            }
        )
    else:
        raise ValueError(f"unknown method {args.method!r}")

    curves_prefix = (
        str(Path(args.out_dir) / f"eval_{args.method}") if args.curves else None
    )
    report = _metrics_report(in_scores, out_scores, curves_prefix)
    report_path = args.report_out or str(Path(args.out_dir) / "eval_report.json")
    _write_json(report_path, report)
    config["report_out"] = report_path
    _write_manifest(args.out_dir, "eval", config)
    print(_json_dumps(report), end="")
    return 0


def _candidate_labels(args):
    from . import zshot

    in_set = _load(args.in_labels, args.format)
    out_set = _load(args.out_labels, args.format) if args.out_labels else None
    return zshot.CandidateLabels(
        in_text=in_set.data,
        in_names=in_set.class_names or [str(i) for i in range(in_set.n)],
        out_text=None if out_set is None else out_set.data,
        out_names=None if out_set is None else out_set.class_names,
        normalize=not args.raw,
        temperature=args.temperature,
    )


def _subsample_shots(oe_train, shots: int, seed: int):
    from . import embed_store
    import numpy as np

    if oe_train.labels is None:
        raise ValueError("--shots requires labeled OOD embeddings")
    rng = np.random.default_rng(seed)
    groups = embed_store.split_by_label(oe_train)
    keep = []
    for cid in sorted(groups):
        rows = groups[cid]
        if shots > rows.size:
            raise ValueError(
                f"--shots {shots} exceeds the {rows.size} rows of OOD class {cid}"
            )
        keep.append(rng.choice(rows, size=shots, replace=False))
    keep = np.sort(np.concatenate(keep))
    return embed_store.EmbeddingSet(
        data=oe_train.data[keep],
        labels=oe_train.labels[keep],
        dataset_tag=oe_train.dataset_tag,
        class_names=oe_train.class_names,
    )


def cmd_train_oe(args) -> int:
    from . import embed_store, oe_head

    in_train = _load(args.in_train, args.format, csv_labels=args.format == "csv")
    oe_train = _load(args.oe_train, args.format, csv_labels=args.format == "csv")
    if args.shots is not None:
        oe_train = _subsample_shots(oe_train, args.shots, args.seed)

    k = len(set(int(v) for v in in_train.labels))
    if args.collapse:
        o_true = (
            len(set(int(v) for v in oe_train.labels))
            if oe_train.labels is not None
            else 1
        )
        partition = embed_store.ClassPartition(
            k_in=k, o_out=o_true, mode="collapsed_single_class"
        )
    else:
        partition = None

    config = oe_head.OeConfig(
        head_kind=args.head_kind,
        hidden_units=args.hidden_units,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        l2_penalty=args.l2_penalty,
        max_steps=args.max_steps,
        seed=args.seed,
        oversample_override=args.gamma,
        eval_every=args.eval_every,
    )
    validation = None
    if args.in_val and args.out_val:
        validation = (_load(args.in_val, args.format), _load(args.out_val, args.format))
    head = oe_head.train_oe_head(
        in_train, oe_train, config, partition=partition, validation=validation
    )
    head_path = args.head_out or str(Path(args.out_dir) / "head.oodhed")
    Path(head_path).parent.mkdir(parents=True, exist_ok=True)
    oe_head.save_head(head, head_path)

    manifest = {
        "in_train": args.in_train,
        "oe_train": args.oe_train,
        "shots": args.shots,
        "head_kind": args.head_kind,
        "collapse": args.collapse,
        "head_width": head.out_width,
        "gamma": head.gamma,
        "seed": args.seed,
        "max_steps": args.max_steps,
        "checkpoint_selection": "best_validation_auroc" if validation else "final_step",
        "head_out": head_path,
    }
    if args.in_test and args.out_test:
        in_scores = oe_head.score_oe(head, _load(args.in_test, args.format))
        out_scores = oe_head.score_oe(head, _load(args.out_test, args.format))
        report = _metrics_report(in_scores, out_scores)
        report_path = args.report_out or str(Path(args.out_dir) / "train_oe_report.json")
        _write_json(report_path, report)
        manifest["report_out"] = report_path
        print(_json_dumps(report), end="")
    _write_manifest(args.out_dir, "train_oe", manifest)
    print(head_path)
    return 0


def cmd_zshot(args) -> int:
    from . import zshot

    labels = _candidate_labels(args)
    images = _load(args.images, args.format)
    scores = zshot.score_zshot(images, labels)
    scores_path = args.scores_out or str(Path(args.out_dir) / "zshot_scores.csv")
    _write_scores(scores_path, scores)
    _write_manifest(
        args.out_dir,
        "zshot",
        {
            "images": args.images,
            "in_labels": args.in_labels,
            "out_labels": args.out_labels,
            "raw": args.raw,
            "temperature": args.temperature,
            "baseline_msp_fallback": labels.o_out == 0,
            "scores_out": scores_path,
        },
    )
    print(scores_path)
    return 0


def cmd_pca(args) -> int:
    import numpy as np

    from . import pca

    sets = [_load(p, args.format) for p in args.inputs]
    stacked = np.concatenate([s.data for s in sets])
    result = pca.fit_pca(stacked, n_components=args.components)

    score_col = None
    if args.score_model:
        from . import maha

        model = maha.load_gaussian(args.score_model)
        score_col = np.concatenate([maha.score_maha(model, s) for s in sets])

    proj_path = args.projection_out or str(Path(args.out_dir) / "pca_projection.csv")
    Path(proj_path).parent.mkdir(parents=True, exist_ok=True)
    cols = ",".join(f"pc{i + 1}" for i in range(args.components))
    with open(proj_path, "w") as f:
        f.write("set_index,row_index," + cols)
        f.write(",maha_score\n" if score_col is not None else "\n")
        offset = 0
        for si, s in enumerate(sets):
            proj = result.transform(s.data)
            for ri in range(s.n):
                row = [str(si), str(ri)] + [repr(float(v)) for v in proj[ri]]
                if score_col is not None:
                    row.append(repr(float(score_col[offset + ri])))
                f.write(",".join(row) + "\n")
            offset += s.n
    report = {
        "explained_variance": [float(v) for v in result.explained_variance],
        "explained_variance_ratio": [
            float(v) for v in result.explained_variance_ratio
        ],
        "n_samples": int(stacked.shape[0]),
        "projection_out": proj_path,
    }
    _write_json(Path(args.out_dir) / "pca_report.json", report)
    _write_manifest(
        args.out_dir,
        "pca",
        {
            "inputs": list(args.inputs),
            "components": args.components,
            "score_model": args.score_model,
            "projection_out": proj_path,
        },
    )
    print(proj_path)
    return 0


def cmd_serve_bench(args) -> int:
    import uvicorn

    from . import bench

    store = bench.SessionStore(args.data_dir or str(Path(args.out_dir) / "sessions"))
    app = bench.create_app(store, static_dir=args.static_dir)
    _write_manifest(
        args.out_dir,
        "serve_bench",
        {
            "port": args.port,
            "data_dir": str(store.root),
            "static_dir": args.static_dir,
        },
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oodkit")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=["binary", "csv"], default="binary")

    p = sub.add_parser("fit", help="fit the shared-covariance Gaussian model")
    common(p)
    p.add_argument("--train", required=True)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--model-out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("score", help="score embeddings with a saved model")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--scores-out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="compute AUROC/AUPRC/FPR95 for a method")
    common(p)
    p.add_argument("--method", choices=["maha", "msp", "oe", "zshot"], required=True)
    p.add_argument("--train")
    p.add_argument("--in-test", required=True)
    p.add_argument("--out-test", required=True)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--presoftmaxed", action="store_true")
    p.add_argument("--head")
    p.add_argument("--in-labels")
    p.add_argument("--out-labels")
    p.add_argument("--raw", action="store_true")
    p.add_argument("--temperature", type=float, default=0.01)
    p.add_argument("--curves", action="store_true")
    p.add_argument("--report-out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("train-oe", help="train a few-shot outlier-exposure head")
    common(p)
    p.add_argument("--in-train", required=True)
    p.add_argument("--oe-train", required=True)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--head-kind", choices=["linear", "mlp_one_hidden"], default="linear")
    p.add_argument("--hidden-units", type=int, default=1024)
    p.add_argument("--collapse", action="store_true")
    p.add_argument("--batch-size", type=int, default=200)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--l2-penalty", type=float, default=1.0)
    p.add_argument("--max-steps", type=int, default=1000)
    p.add_argument("--gamma", type=float, default=None, help="oversampling override")
    p.add_argument("--eval-every", type=int, default=100)
    p.add_argument("--in-val")
    p.add_argument("--out-val")
    p.add_argument("--in-test")
    p.add_argument("--out-test")
    p.add_argument("--head-out")
    p.add_argument("--report-out")
    p.set_defaults(func=cmd_train_oe)

    p = sub.add_parser("zshot", help="zero-shot candidate-label scoring")
    common(p)
    p.add_argument("--images", required=True)
    p.add_argument("--in-labels", required=True)
    p.add_argument("--out-labels")
    p.add_argument("--raw", action="store_true")
    p.add_argument("--temperature", type=float, default=0.01)
    p.add_argument("--scores-out")
    p.set_defaults(func=cmd_zshot)

    p = sub.add_parser("pca", help="2-D PCA projection export")
    common(p)
    p.add_argument("--inputs", nargs="+", required=True,
                   help="embedding files, in-distribution first")
    p.add_argument("--components", type=int, default=2)
    p.add_argument("--score-model", help="Gaussian model for a score column")
    p.add_argument("--projection-out")
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("serve-bench", help="run the human-benchmark service")
    common(p)
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir")
    p.add_argument("--static-dir")
    p.set_defaults(func=cmd_serve_bench)
    return parser


def main(argv=None) -> int:
    threads = os.environ.get("OODKIT_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)
    args = build_parser().parse_args(argv)
    from . import bench, embed_store, maha

    try:
        return args.func(args)
    except (
        embed_store.FormatError,
        bench.BenchError,
        FileNotFoundError,
        ValueError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (maha.CovarianceError, ArithmeticError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
