#!/usr/bin/env python3
"""Sweep few-shot outlier-exposure training over shot counts and seeds.

Trains a head on synthetic separated clusters (or supplied containers) with
a varying number of outlier examples per class, and prints mean +/- std
AUROC per shot count. Useful for eyeballing the shots-vs-AUROC trend and
for comparing the linear head against the one-hidden-layer MLP.

Example:
    python3 scripts/fewshot_sweep.py --shots 1 2 3 5 10 --seeds 5
    python3 scripts/fewshot_sweep.py --head mlp_one_hidden --max-steps 2000
"""

import argparse

import numpy as np

from oodkit.embed_store import ClassPartition, EmbeddingSet
from oodkit.metrics import ScoreSet, auroc
from oodkit.oe_head import OeConfig, score_oe, train_oe_head


def make_clusters(rng, centers, n_per, scale=1.0):
    rows = np.concatenate(
        [rng.normal(c, scale, size=(n_per, centers.shape[1])) for c in centers]
    )
    labels = np.repeat(np.arange(len(centers)), n_per)
    return EmbeddingSet(
        data=rows.astype(np.float32), labels=labels.astype(np.uint32)
    )


def subsample_shots(rng, es, shots):
    keep = np.concatenate(
        [
            rng.choice(np.flatnonzero(es.labels == c), shots, replace=False)
            for c in np.unique(es.labels)
        ]
    )
    return EmbeddingSet(data=es.data[keep], labels=es.labels[keep])


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--shots", type=int, nargs="+", default=[1, 2, 3, 10])
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--dim", type=int, default=8)
    parser.add_argument("--in-classes", type=int, default=5)
    parser.add_argument("--out-classes", type=int, default=2)
    parser.add_argument("--gap", type=float, default=6.0)
    parser.add_argument("--head", default="linear",
                        choices=["linear", "mlp_one_hidden"])
    parser.add_argument("--hidden-units", type=int, default=64)
    parser.add_argument("--max-steps", type=int, default=1000)
    parser.add_argument("--collapse", action="store_true",
                        help="single outlier class instead of labeled outliers")
    parser.add_argument("--data-seed", type=int, default=0)
    args = parser.parse_args()

    k, o = args.in_classes, args.out_classes
    rng = np.random.default_rng(args.data_seed)
    centers = np.eye(args.dim)[: k + o] * args.gap
    in_train = make_clusters(rng, centers[:k], 50)
    oe_full = make_clusters(rng, centers[k:], 50)
    oe_full = EmbeddingSet(data=oe_full.data, labels=oe_full.labels + k)
    in_test = make_clusters(rng, centers[:k], 40)
    out_test = make_clusters(rng, centers[k:], 40)

    print(f"head={args.head} collapse={args.collapse} "
          f"max_steps={args.max_steps} K={k} O={o} dim={args.dim}")
    print(f"{'shots':>6} {'mean AUROC':>11} {'std':>8}  per-seed")
    for shots in args.shots:
        values = []
        for seed in range(args.seeds):
            srng = np.random.default_rng(1000 + seed)
            oe = subsample_shots(srng, oe_full, shots)
            config = OeConfig(
                head_kind=args.head,
                hidden_units=args.hidden_units,
                max_steps=args.max_steps,
                seed=seed,
            )
            partition = None
            if args.collapse:
                partition = ClassPartition(
                    k_in=k, o_out=o, mode="collapsed_single_class"
                )
            head = train_oe_head(in_train, oe, config, partition=partition)
            values.append(
                auroc(
                    ScoreSet(
                        in_scores=score_oe(head, in_test),
                        out_scores=score_oe(head, out_test),
                    )
                )
            )
        values = np.asarray(values)
        cells = " ".join(f"{v:.4f}" for v in values)
        print(f"{shots:>6} {values.mean():>11.4f} {values.std():>8.4f}  {cells}")


if __name__ == "__main__":
    main()
