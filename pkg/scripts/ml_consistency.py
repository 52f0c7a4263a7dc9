"""Spread of maximum-likelihood estimates over repeated simulated thermal runs."""

import argparse
import json
from dataclasses import asdict, dataclass

import numpy as np

from gauss_counter.ml import FitConfig, fit
from gauss_counter.oracle import sample_counts
from gauss_counter.state_model import NormalParameters


@dataclass
class Config:
    gamma: float = 3.0
    samples: int = 100_000
    repetitions: int = 100
    efficiency: float = 1.0
    seed: int = 2031
    free_displacement: bool = True


def run(cfg):
    truth = NormalParameters([cfg.gamma], [2], [0.0])
    # Detector loss maps a thermal gamma to 1 + eta (gamma - 1).
    effective = 1 + cfg.efficiency * (cfg.gamma - 1)
    seeds = np.random.SeedSequence(cfg.seed).generate_state(cfg.repetitions)
    estimates = []
    for i, seed in enumerate(seeds):
        counts = sample_counts(truth, cfg.samples, cfg.efficiency, int(seed))
        result = fit(counts, FitConfig(1, (2,), free_displacements=(cfg.free_displacement,), seed=i))
        estimates.append(float(result.parameters.eigenvalues[0]))
    est = np.array(estimates)
    rel = np.abs(est / effective - 1)
    return {
        "config": asdict(cfg),
        "effective_gamma": effective,
        "mean": float(est.mean()),
        "std": float(est.std(ddof=1)),
        "within_5_percent": int(np.sum(rel <= 0.05)),
        "estimates": estimates,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    for name, value in asdict(Config()).items():
        flag = "--" + name.replace("_", "-")
        if isinstance(value, bool):
            ap.add_argument(flag, type=lambda t: t.lower() in ("1", "true", "yes"), default=value)
        else:
            ap.add_argument(flag, type=type(value), default=value)
    print(json.dumps(run(Config(**vars(ap.parse_args()))), indent=2))


if __name__ == "__main__":
    main()
