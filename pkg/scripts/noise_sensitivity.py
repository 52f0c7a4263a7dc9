"""How the exact inversion degrades as relative noise is added to the probabilities."""

import argparse
import json
from dataclasses import asdict, dataclass

import numpy as np

from gauss_counter.errors import GaussCounterError
from gauss_counter.forward import PhotonDistribution, forward_distribution
from gauss_counter.inverse import invert_distribution
from gauss_counter.state_model import NormalParameters


@dataclass
class Config:
    levels: tuple = (0.0, 1e-14, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-3)
    trials: int = 20
    seed: int = 5


def run(cfg):
    params = NormalParameters([2.0, 1.0], [2, 2], [np.sqrt(2), 0.0])
    exact = forward_distribution(params, 16).probabilities
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for level in cfg.levels:
        errors, outcomes = [], {}
        for _ in range(cfg.trials):
            noisy = PhotonDistribution(2, exact * (1 + level * rng.standard_normal(len(exact))))
            try:
                found = invert_distribution(noisy).parameters
                name = "recovered" if found.multiplicities.tolist() == [2, 2] else "wrong_structure"
                if name == "recovered":
                    errors.append(float(np.max(np.abs(found.eigenvalues / params.eigenvalues - 1))))
            except GaussCounterError as exc:
                name = exc.code
            outcomes[name] = outcomes.get(name, 0) + 1
        rows.append({"noise": level, "outcomes": outcomes, "median_lambda_rel_err": float(np.median(errors)) if errors else None})
    return {"config": asdict(cfg), "rows": rows}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=Config.trials)
    ap.add_argument("--seed", type=int, default=Config.seed)
    args = ap.parse_args()
    print(json.dumps(run(Config(trials=args.trials, seed=args.seed)), indent=2))


if __name__ == "__main__":
    main()
