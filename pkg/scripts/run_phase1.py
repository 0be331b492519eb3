"""Touch-action experiment at desk scale: synthetic traces, two-stage 1-NN.

Generates a labeled action dataset, extracts phase-1 features, and runs
k-fold cross-validation for the grouped, scroll-direction, and combined
classifiers. Prints the report; --report also writes it to disk.
"""

import argparse

import numpy as np

from touchinfer.evaluate import (
    EvalReport,
    confusion_from_pairs,
    cross_validate,
    knn_classifier,
    render_report,
    two_stage_classifier,
    write_report,
)
from touchinfer.features import extract
from touchinfer.knn import Metric
from touchinfer.model import SCROLL_ACTIONS, SCROLL_COLLAPSED
from touchinfer.synth import PROFILES, action_spec, gen_dataset


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--per-class", type=int, default=30)
    parser.add_argument("--separation", type=float, default=16.0)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--folds", type=int, default=10)
    parser.add_argument("--profile", choices=sorted(PROFILES), default="nexus5")
    parser.add_argument("--report", metavar="STEM", help="also write report files")
    args = parser.parse_args()

    spec = action_spec(args.per_class, args.separation, args.seed,
                       profile=PROFILES[args.profile])
    traces = gen_dataset(spec)
    X = np.array([extract(t, phase=1).values for t in traces])
    labels = [t.label for t in traces]

    result = cross_validate(X, labels, two_stage_classifier(k=1),
                            k=args.folds, seed=args.seed)
    merge = lambda a: SCROLL_COLLAPSED if a in SCROLL_ACTIONS else a
    stage1 = confusion_from_pairs(
        [(merge(a), merge(p)) for a, p in result.pairs])
    scroll_rows = [i for i, label in enumerate(labels)
                   if label in SCROLL_ACTIONS]
    direction = cross_validate(
        X[scroll_rows], [labels[i] for i in scroll_rows],
        knn_classifier(k=1, metric=Metric.CITY_BLOCK),
        k=args.folds, seed=args.seed)

    report = EvalReport(
        title=f"touch action identification (synthetic, separation "
              f"{args.separation:g}, {args.per_class}/class)",
        method=f"two-stage 1-nn, {args.folds}-fold cross-validation",
        seeds={"cv": args.seed, "synth": args.seed},
        matrices=(
            (f"stage 1: action groups ({args.folds}-fold cv)", stage1),
            (f"stage 2: scroll direction ({args.folds}-fold cv over "
             f"true scrolls)", direction.matrix),
            (f"combined: all touch actions ({args.folds}-fold cv)",
             result.matrix),
        ),
    )
    print(render_report(report), end="")
    if args.report:
        for kind, path in sorted(write_report(report, args.report).items()):
            print(f"{kind}: {path}")


if __name__ == "__main__":
    main()
