"""Compare Original, SMOTE and HeteroFair on the imbalanced Gaussian toy fixture.

Usage: python3 scripts/toy_experiment.py [--seeds 20] [--classifier LR]
"""

import argparse

import numpy as np

from hetfair.fixtures import toy_dataset
from hetfair.harness import ExperimentPlan, run_experiment

TECHNIQUES = ["None", "SMOTE", "FSMOTE", "FBSMOTE", "FADASYN", "HeteroFair"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--classifier", default="LR")
    ap.add_argument("--folds", type=int, default=5)
    args = ap.parse_args()

    scores = {}
    for seed in range(args.seeds):
        plan = ExperimentPlan(data=toy_dataset(seed), techniques=TECHNIQUES, classifiers=[args.classifier],
                              folds=args.folds, seeds=[seed])
        rep = run_experiment(plan)
        for tech, clf in rep.cells():
            for m in ("bacc", "sp", "eopp", "eodds"):
                scores.setdefault((tech, m), []).append(rep.mean(tech, clf, m))

    techs = list(dict.fromkeys(t for t, _ in scores))
    print(f"{'Technique':<12}" + "".join(f"{m:>10}" for m in ("BAcc", "SP", "E.Opp.", "E.Odds")))
    for tech in techs:
        row = [np.mean(scores[(tech, m)]) for m in ("bacc", "sp", "eopp", "eodds")]
        print(f"{tech:<12}" + "".join(f"{v:>10.4f}" for v in row))


if __name__ == "__main__":
    main()
