#!/usr/bin/env python3
"""Generate synthetic embedding containers for trying out the CLI.

Creates a directory with well-separated Gaussian class clusters playing the
role of frozen backbone embeddings:

    train.oodemb      labeled in-distribution training embeddings
    in_test.oodemb    unlabeled in-distribution queries
    out_test.oodemb   unlabeled OOD queries
    oe_train.oodemb   labeled outlier-exposure examples (distinct classes)
    in_labels.oodemb  unit-norm "text" embeddings near the in-class centers
    out_labels.oodemb unit-norm "text" embeddings near the OOD centers

Example:
    python3 scripts/make_demo_data.py --out-dir demo_data --seed 0
    oodkit eval --method maha --train demo_data/train.oodemb \\
        --in-test demo_data/in_test.oodemb --out-test demo_data/out_test.oodemb \\
        --out-dir demo_run
"""

import argparse
from pathlib import Path

import numpy as np

from oodkit.embed_store import EmbeddingSet, save_embeddings


def make_clusters(rng, centers, n_per, scale):
    rows = np.concatenate(
        [rng.normal(c, scale, size=(n_per, centers.shape[1])) for c in centers]
    )
    labels = np.repeat(np.arange(len(centers)), n_per)
    return rows.astype(np.float32), labels.astype(np.uint32)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", required=True, type=Path)
    parser.add_argument("--dim", type=int, default=16)
    parser.add_argument("--in-classes", type=int, default=5)
    parser.add_argument("--out-classes", type=int, default=3)
    parser.add_argument("--train-per-class", type=int, default=200)
    parser.add_argument("--test-per-class", type=int, default=50)
    parser.add_argument("--oe-per-class", type=int, default=20)
    parser.add_argument("--scale", type=float, default=1.0,
                        help="within-cluster standard deviation")
    parser.add_argument("--gap", type=float, default=8.0,
                        help="distance between cluster centers")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    k, o = args.in_classes, args.out_classes
    if k + o > args.dim:
        parser.error(f"--dim must be >= in+out classes ({k + o})")
    rng = np.random.default_rng(args.seed)
    centers = np.eye(args.dim)[: k + o] * args.gap
    in_centers, out_centers = centers[:k], centers[k:]

    args.out_dir.mkdir(parents=True, exist_ok=True)

    rows, labels = make_clusters(rng, in_centers, args.train_per_class, args.scale)
    save_embeddings(
        EmbeddingSet(data=rows, labels=labels, dataset_tag="demo-train"),
        args.out_dir / "train.oodemb",
    )
    rows, _ = make_clusters(rng, in_centers, args.test_per_class, args.scale)
    save_embeddings(
        EmbeddingSet(data=rows, dataset_tag="demo-in-test"),
        args.out_dir / "in_test.oodemb",
    )
    rows, _ = make_clusters(rng, out_centers, args.test_per_class, args.scale)
    save_embeddings(
        EmbeddingSet(data=rows, dataset_tag="demo-out-test"),
        args.out_dir / "out_test.oodemb",
    )
    rows, labels = make_clusters(rng, out_centers, args.oe_per_class, args.scale)
    save_embeddings(
        EmbeddingSet(data=rows, labels=labels + k, dataset_tag="demo-oe"),
        args.out_dir / "oe_train.oodemb",
    )

    # noisy unit-norm label embeddings, one per class, for the zero-shot path
    for name, group in (("in_labels", in_centers), ("out_labels", out_centers)):
        text = group + rng.normal(scale=0.05, size=group.shape)
        text /= np.linalg.norm(text, axis=1, keepdims=True)
        save_embeddings(
            EmbeddingSet(data=text.astype(np.float32), dataset_tag=f"demo-{name}"),
            args.out_dir / f"{name}.oodemb",
        )
    print(f"wrote 6 containers to {args.out_dir}")


if __name__ == "__main__":
    main()
