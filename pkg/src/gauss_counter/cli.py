"""Command-line front end.

Every command reads one JSON document (file or stdin) and writes one JSON
document (file or stdout), so commands compose in shell pipelines, e.g.
``gauss-counter forward -i state.json | gauss-counter invert``.
"""

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import __version__
from ._numerics import EXACT_DIGITS, FLOAT_DIGITS, context
from .errors import GaussCounterError, InvalidParameters
from .forward import PhotonDistribution, forward_distribution, tail_cutoff
from .inverse import TOL_ROOT, invert_distribution
from .ml import FitConfig, fit
from .moments import moment_triple
from .oracle import sample_counts
from .projector_kernel import projector_polynomial
from .serialization import dumps, loads, read_object
from .state_model import GaussianStateSpec, extract_normal_parameters

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_ROUNDTRIP = 4

EXIT_CODES = """exit codes:
  0  success
  2  invalid input (validation error, malformed JSON, unknown flag)
  3  numerical failure
  4  round trip deviation above --tol (roundtrip only)

GAUSS_COUNTER_THREADS caps the number of worker threads."""

FORWARD_DIGITS = 60


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error({"error": "UsageError", "message": message})
        self.print_usage(sys.stderr)
        sys.exit(EXIT_VALIDATION)


def _emit_error(payload):
    sys.stderr.write(dumps("error", payload))


def _shared_flags():
    shared = argparse.ArgumentParser(add_help=False)
    g = shared.add_argument_group("shared options")
    g.add_argument("-i", "--input", help="input JSON file (default: stdin)")
    g.add_argument("-o", "--output", help="output JSON file (default: stdout)")
    g.add_argument("--tol-rank", type=float, help="Hankel rank threshold (relative singular value)")
    g.add_argument("--tol-root", type=float, default=TOL_ROOT, help="root clustering distance")
    g.add_argument("--tol-res", type=float, help="residual threshold for the weight solve")
    g.add_argument("--seed", type=int, default=0, help="random seed")
    g.add_argument("--samples", type=int, default=100_000, help="number of detections to simulate")
    g.add_argument("--efficiency", type=float, default=1.0, help="detector efficiency in (0, 1]")
    g.add_argument("--max-photons", type=int, help="largest photon number N")
    g.add_argument("--tol", type=float, default=1e-6, help="round trip acceptance threshold")
    g.add_argument("--digits", type=int, help="significant digits of extended-precision output")
    return shared


def _csv(kind):
    def parse(text):
        try:
            return tuple(kind(x) for x in text.split(",") if x.strip())
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc

    return parse


def build_parser():
    shared = _shared_flags()
    parser = _Parser(
        prog="gauss-counter",
        description="Photon-number distributions of Gaussian states and their inversion.",
        epilog=EXIT_CODES,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text):
        return sub.add_parser(
            name, parents=[shared], help=help_text, epilog=EXIT_CODES,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )

    add("forward", "state or normal parameters -> photon-number distribution")
    p = add("invert", "photon-number distribution -> normal parameters")
    p.add_argument("--mode-count", type=int, help="override S")
    add("sample", "state or normal parameters -> simulated photon counts")
    p = add("fit", "photon counts -> maximum-likelihood normal parameters")
    p.add_argument("--mode-count", type=int, help="S, when the run does not record it")
    p.add_argument("--multiplicities", type=_csv(int), help="structure hypothesis, e.g. 2,2 (default: 2S)")
    p.add_argument("--free-displacements", type=_csv(int), help="1/0 per eigenvalue (default: all free)")
    p.add_argument("--lambda-min", type=float, default=0.05)
    p.add_argument("--lambda-max", type=float, default=50.0)
    p.add_argument("--c-max", type=float, default=10.0)
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--max-evals", type=int, default=4000)
    p = add("roundtrip", "normal parameters -> 8S+1 probabilities -> normal parameters")
    p.add_argument("--noise", type=float, default=0.0, help="relative Gaussian noise added to the probabilities")
    p = add("debug-kernel", "coefficients of the n-photon projector polynomial")
    p.add_argument("--mode-count", type=int, required=True)
    p.add_argument("--photon-number", type=int, required=True)
    p = add("debug-moments", "moments, cumulants and f_n of a photon-number distribution")
    p.add_argument("--mode-count", type=int, help="override S")
    return parser


# --- io ---------------------------------------------------------------------


def _read(args):
    if args.input in (None, "-"):
        text = sys.stdin.read()
    else:
        try:
            with open(args.input, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise InvalidParameters(f"cannot read {args.input}: {exc.strerror}") from exc
    return loads(text)


def _write(args, kind, payload):
    text = dumps(kind, payload)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)


def _read_parameters(args):
    kind, obj = read_object(_read(args), {"state", "normal_parameters", "inversion_report", "fit_result"})
    if isinstance(obj, GaussianStateSpec):
        return extract_normal_parameters(obj)
    return obj


def _distribution_payload(dist, digits):
    payload = dist.to_dict()
    if dist.precise is not None and digits is not None and digits > FLOAT_DIGITS:
        ctx = context(digits)
        payload["probabilities"] = [ctx.mpf(x) for x in dist.precise]
        payload["digits"] = digits
    else:
        payload["probabilities"] = dist.probabilities.tolist()
    return payload


# --- commands ---------------------------------------------------------------


def run_forward(args):
    params = _read_parameters(args)
    digits = args.digits if args.digits is not None else FORWARD_DIGITS
    dist = forward_distribution(params, args.max_photons, digits=max(digits, FLOAT_DIGITS))
    _write(args, "photon_distribution", _distribution_payload(dist, digits))
    return EXIT_OK


def run_invert(args):
    _, dist = read_object(_read(args), {"photon_distribution"})
    report = invert_distribution(dist, args.tol_rank, args.tol_root, args.tol_res, args.mode_count)
    _write(args, "inversion_report", report.to_dict())
    return EXIT_OK


def run_sample(args):
    params = _read_parameters(args)
    run = sample_counts(params, args.samples, args.efficiency, args.seed)
    _write(args, "sample_run", run.to_dict())
    return EXIT_OK


def run_fit(args):
    _, run = read_object(_read(args), {"sample_run"})
    s = args.mode_count or run.mode_count
    if s is None:
        raise InvalidParameters("--mode-count is required when the run does not record S")
    mult = args.multiplicities or (2 * s,)
    free = None if args.free_displacements is None else tuple(bool(x) for x in args.free_displacements)
    config = FitConfig(
        mode_count=s,
        multiplicities=mult,
        free_displacements=free,
        max_photons=args.max_photons,
        lambda_bounds=(args.lambda_min, args.lambda_max),
        c_max=args.c_max,
        restarts=args.restarts,
        max_evals=args.max_evals,
        seed=args.seed,
    )
    result = fit(run, config)
    payload = result.to_dict()
    payload["config"] = config.to_dict()
    payload["seed"] = args.seed
    _write(args, "fit_result", payload)
    return EXIT_OK


def _deviation(truth, found):
    if len(truth.eigenvalues) != len(found.eigenvalues) or np.any(truth.multiplicities != found.multiplicities):
        return math.inf
    lam = np.max(np.abs(found.eigenvalues - truth.eigenvalues) / truth.eigenvalues)
    c = np.max(np.abs(found.displacement_norms - truth.displacement_norms))
    return float(max(lam, c))


def run_roundtrip(args):
    params = _read_parameters(args)
    s = params.mode_count
    digits = args.digits if args.digits is not None else EXACT_DIGITS
    dist = forward_distribution(params, 8 * s, digits=digits)
    payload = {"tol": args.tol, "noise": args.noise, "input": params.to_dict()}
    if args.noise > 0:
        rng = np.random.default_rng(args.seed)
        noisy = dist.probabilities * (1 + args.noise * rng.standard_normal(len(dist)))
        dist = PhotonDistribution(s, noisy)
        payload["seed"] = args.seed
    payload["probabilities"] = dist.probabilities.tolist()
    try:
        report = invert_distribution(dist, args.tol_rank, args.tol_root, args.tol_res)
    except GaussCounterError as exc:
        payload.update({"passed": False, "max_deviation": None, "error": exc.to_dict()})
        _write(args, "roundtrip", payload)
        return EXIT_ROUNDTRIP
    deviation = _deviation(params, report.parameters)
    passed = deviation < args.tol
    payload.update(
        {
            "passed": passed,
            "max_deviation": deviation,
            "recovered": report.parameters.to_dict(),
            "report": report.to_dict(),
        }
    )
    _write(args, "roundtrip", payload)
    return EXIT_OK if passed else EXIT_ROUNDTRIP


def run_debug_kernel(args):
    poly = projector_polynomial(args.mode_count, args.photon_number)
    payload = {
        "mode_count": poly.mode_count,
        "photon_number": poly.photon_number,
        "coefficients": poly.coefficients.tolist(),
        "coefficients_times_pi_s": [str(x) for x in poly.rational_coefficients()],
    }
    _write(args, "projector_polynomial", payload)
    return EXIT_OK


def run_debug_moments(args):
    _, dist = read_object(_read(args), {"photon_distribution"})
    s = args.mode_count or dist.mode_count
    ctx = context((dist.digits if dist.precise is not None else FLOAT_DIGITS) + 30)
    mu, kappa, f = moment_triple(dist.values(ctx), s, ctx=ctx)
    out_ctx = context(max(args.digits or FLOAT_DIGITS, FLOAT_DIGITS))
    payload = {
        "mode_count": s,
        "moments": [out_ctx.mpf(x) for x in mu],
        "cumulants": [out_ctx.mpf(x) for x in kappa],
        "f": [out_ctx.mpf(x) for x in f],
    }
    _write(args, "moments", payload)
    return EXIT_OK


COMMANDS = {
    "forward": run_forward,
    "invert": run_invert,
    "sample": run_sample,
    "fit": run_fit,
    "roundtrip": run_roundtrip,
    "debug-kernel": run_debug_kernel,
    "debug-moments": run_debug_moments,
}


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except GaussCounterError as exc:
        _emit_error(exc.to_dict())
        return exc.exit_code
    except (ValueError, TypeError, KeyError, json.JSONDecodeError) as exc:
        _emit_error({"error": "InvalidInput", "message": str(exc)})
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
