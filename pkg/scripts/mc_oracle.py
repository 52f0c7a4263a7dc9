"""Compare exact photon-number distributions with the Monte Carlo phase-space estimator."""

import argparse
import json
import time
from dataclasses import asdict, dataclass

import numpy as np

from gauss_counter.forward import forward_from_spec
from gauss_counter.oracle import mc_distribution
from gauss_counter.suites import random_parameters, state_from_parameters


@dataclass
class Config:
    states: int = 20
    samples: int = 1_000_000
    seed: int = 7


def run(cfg):
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for _ in range(cfg.states):
        params = random_parameters(int(rng.integers(1, 4)), rng)
        spec = state_from_parameters(params, rng)
        n = 8 * params.mode_count
        t0 = time.perf_counter()
        est, se = mc_distribution(spec, n, cfg.samples, seed=int(rng.integers(2**63)))
        exact = forward_from_spec(spec, n).probabilities
        z = np.where(se > 0, np.abs(est - exact) / np.where(se > 0, se, 1), 0.0)
        rows.append(
            {
                "mode_count": params.mode_count,
                "exact": exact.tolist(),
                "estimate": est.tolist(),
                "standard_error": se.tolist(),
                "max_z": float(z.max()),
                "seconds": time.perf_counter() - t0,
            }
        )
    return {"config": asdict(cfg), "max_z": max(r["max_z"] for r in rows), "rows": rows}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--states", type=int, default=Config.states)
    ap.add_argument("--samples", type=int, default=Config.samples)
    ap.add_argument("--seed", type=int, default=Config.seed)
    args = ap.parse_args()
    print(json.dumps(run(Config(args.states, args.samples, args.seed)), indent=2))


if __name__ == "__main__":
    main()
