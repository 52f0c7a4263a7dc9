"""Forward then invert randomized states; report worst deviations and timings as JSON."""

import argparse
import json
import time
from dataclasses import asdict, dataclass

import numpy as np

from gauss_counter.forward import forward_distribution
from gauss_counter.inverse import invert_distribution
from gauss_counter.suites import degenerate_suite, random_parameters


@dataclass
class Config:
    modes: tuple = (1, 2, 3)
    states: int = 100
    seed: int = 2024
    digits: int = 120


def run(cfg):
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for s in cfg.modes:
        for params in [random_parameters(s, rng) for _ in range(cfg.states)] + degenerate_suite(s, rng):
            t0 = time.perf_counter()
            row = {"mode_count": s, "truth": params.to_dict()}
            try:
                found = invert_distribution(forward_distribution(params, 8 * s, digits=cfg.digits)).parameters
                same = found.multiplicities.tolist() == params.multiplicities.tolist()
                row["multiplicities_match"] = same
                if same:
                    row["lambda_rel_err"] = float(np.max(np.abs(found.eigenvalues / params.eigenvalues - 1)))
                    row["c_abs_err"] = float(np.max(np.abs(found.displacement_norms - params.displacement_norms)))
            except Exception as exc:  # recorded, not fatal: this is a survey
                row["error"] = f"{type(exc).__name__}: {exc}"
            row["seconds"] = time.perf_counter() - t0
            rows.append(row)
    ok = [r for r in rows if r.get("multiplicities_match")]
    summary = {
        "config": asdict(cfg),
        "instances": len(rows),
        "failures": sum(1 for r in rows if "error" in r or not r.get("multiplicities_match")),
        "max_lambda_rel_err": max(r["lambda_rel_err"] for r in ok),
        "max_c_abs_err": max(r["c_abs_err"] for r in ok),
        "max_seconds": max(r["seconds"] for r in rows),
        "total_seconds": sum(r["seconds"] for r in rows),
    }
    return summary, rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--states", type=int, default=Config.states)
    ap.add_argument("--seed", type=int, default=Config.seed)
    ap.add_argument("--digits", type=int, default=Config.digits)
    ap.add_argument("--rows", action="store_true", help="include per-instance rows")
    args = ap.parse_args()
    summary, rows = run(Config(states=args.states, seed=args.seed, digits=args.digits))
    out = {"summary": summary, "rows": rows} if args.rows else summary
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
