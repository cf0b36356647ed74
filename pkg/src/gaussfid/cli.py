"""Command-line front end.

Exit codes: 0 success, 2 malformed input, 3 unphysical channel or
inconsistent data, 4 analytic/brute-force disagreement.
"""

import argparse
from dataclasses import dataclass
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .core import (
    GainMatrix,
    GaussianChannel,
    NoiseEllipse,
    check_physical,
    random_physical_channel,
    subtract_noise_mean,
)
from .exceptions import (
    DegenerateProbeSet,
    GaussFidError,
    NegativeVarianceEstimate,
    NumericalInconsistency,
    UnphysicalChannel,
)
from .fidelity import FidelityInputs, average_qubit_fidelity, optimal_phase_rotation
from .fock import DEFAULT_DIM, DEFAULT_STEP, channel_on_qubit_basis
from .scenarios import (
    CONVENTIONS,
    amplifier_sweep,
    benchmark_time_sweep,
    heat_bath_curve,
    symmetric_contour_grid,
)
from .tomography import read_probe_csv, reconstruct_channel

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_UNPHYSICAL = 3
EXIT_MISMATCH = 4

ORACLE_TOL = 1e-6
SEED_ENV = "GAUSSFID_SEED"
SCENARIOS = ("heat-bath", "symmetric-grid", "amplifier-sweep", "benchmark-time")


class InputError(Exception):
    """Malformed command-line input; maps to exit code 2."""


@dataclass(frozen=True)
class CliConfig:
    """Validated numerical settings of an invocation."""

    subcommand: str
    dim: int = DEFAULT_DIM
    h: float = DEFAULT_STEP

    def validate(self, needs_oracle=False):
        if needs_oracle and self.dim < 16:
            raise InputError(f"--dim must be >= 16 for oracle checks, got {self.dim}")
        if not 1e-4 <= self.h <= 1e-2:
            raise InputError(f"--h must lie in [1e-4, 1e-2], got {self.h}")
        return self


def _write(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _fmt(x):
    return f"{x:.12g}"


# -- channel input -------------------------------------------------------


def _load_channel(args):
    inline = args.gain is not None
    if inline and args.channel:
        raise InputError("give either a channel file or --gain/--sigma1sq/--sigma2sq, not both")
    if inline:
        if args.sigma1sq is None or args.sigma2sq is None:
            raise InputError("--gain requires --sigma1sq and --sigma2sq")
        try:
            ellipse = NoiseEllipse(args.sigma1sq, args.sigma2sq, args.theta)
            return GaussianChannel.from_output(GainMatrix(*args.gain), ellipse)
        except (ValueError, TypeError) as exc:
            raise InputError(str(exc)) from None
    if not args.channel:
        raise InputError("a channel JSON file (or '-' for stdin) is required")
    try:
        if args.channel == "-":
            text = sys.stdin.read()
        else:
            with open(args.channel) as fh:
                text = fh.read()
        return GaussianChannel.from_json(text)
    except OSError as exc:
        raise InputError(f"cannot read {args.channel}: {exc.strerror}") from None
    except (ValueError, TypeError) as exc:
        raise InputError(f"malformed channel JSON: {exc}") from None


def _channel_args(p):
    p.add_argument("channel", nargs="?", help="channel JSON file, '-' for stdin")
    p.add_argument("--gain", nargs=4, type=float, metavar=("A11", "A12", "A21", "A22"))
    p.add_argument("--sigma1sq", type=float)
    p.add_argument("--sigma2sq", type=float)
    p.add_argument("--theta", type=float, default=0.0)


# -- subcommands ---------------------------------------------------------


def cmd_fidelity(args):
    ch = subtract_noise_mean(_load_channel(args))
    report = check_physical(ch)
    out = {
        "channel": ch.to_dict(),
        "physicality": report.as_dict(),
    }
    code = EXIT_OK
    if ch.output_covariance().is_positive_definite():
        e = ch.ellipse()
        out["ellipse"] = {"s1sq": e.s1sq, "s2sq": e.s2sq, "theta": e.theta}
    if report.physical:
        try:
            inp = FidelityInputs.from_channel(ch)
            out["fq"] = average_qubit_fidelity(inp)
            if args.optimize_phase:
                opt = optimal_phase_rotation(inp)
                out["phase_optimum"] = {
                    "theta_prime": opt.theta_prime,
                    "fq_max": opt.fq_max,
                    "fq_min": opt.fq_min,
                }
        except (UnphysicalChannel, NumericalInconsistency) as exc:
            out["error"] = str(exc)
            code = EXIT_UNPHYSICAL
    else:
        out["error"] = "channel violates the physicality constraints"
        code = EXIT_UNPHYSICAL
    if args.format == "json":
        _write(json.dumps(out, indent=2) + "\n", args.out)
    else:
        _write(_fidelity_text(out), args.out)
    return code


def _fidelity_text(out):
    lines = []
    if "fq" in out:
        lines.append(f"Fq = {_fmt(out['fq'])}")
    if "phase_optimum" in out:
        po = out["phase_optimum"]
        lines.append(
            f"phase-optimized: theta' = {_fmt(po['theta_prime'])}, "
            f"Fq_max = {_fmt(po['fq_max'])}, Fq_min = {_fmt(po['fq_min'])}"
        )
    if "ellipse" in out:
        e = out["ellipse"]
        lines.append(
            f"ellipse: s1sq = {_fmt(e['s1sq'])}, s2sq = {_fmt(e['s2sq'])}, "
            f"theta = {_fmt(e['theta'])}"
        )
    rep = out["physicality"]
    lines.append(
        f"physical: {'yes' if rep['physical'] else 'no'} "
        f"(noise min eigenvalue {_fmt(rep['noise_min_eigenvalue'])}, "
        f"uncertainty margin {_fmt(rep['uncertainty_margin'])})"
    )
    if rep["quadrature_margins"] is not None:
        mx, mp = rep["quadrature_margins"]
        lines.append(f"quadrature margins: {_fmt(mx)}, {_fmt(mp)}")
    if "error" in out:
        lines.append(f"error: {out['error']}")
    return "\n".join(lines) + "\n"


def cmd_tomography(args):
    try:
        records = read_probe_csv(args.probes)
    except OSError as exc:
        raise InputError(f"cannot read {args.probes}: {exc.strerror}") from None
    except ValueError as exc:
        raise InputError(f"malformed probe CSV: {exc}") from None
    try:
        ch = reconstruct_channel(records)
    except DegenerateProbeSet as exc:
        raise InputError(f"DegenerateProbeSet: {exc}") from None
    except UnphysicalChannel as exc:
        detail = exc.report.as_dict() if exc.report is not None else {}
        sys.stderr.write(f"UnphysicalReconstruction: {exc}\n{json.dumps(detail)}\n")
        return EXIT_UNPHYSICAL
    except NegativeVarianceEstimate as exc:
        sys.stderr.write(f"NegativeVarianceEstimate: {exc}\n")
        return EXIT_UNPHYSICAL
    _write(ch.to_json(indent=2) + "\n", args.out)
    sys.stderr.write(json.dumps({"physicality": check_physical(ch).as_dict()}) + "\n")
    return EXIT_OK


def _grid(lo, hi, steps, name):
    if steps < 2 or not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise InputError(f"bad {name} grid: need finite min < max and steps >= 2")
    return np.linspace(lo, hi, steps)


def cmd_scenario(args):
    try:
        if args.name == "heat-bath":
            grid = _grid(args.gt_min, args.gt_max, args.gt_steps, "gamma_t")
            result = heat_bath_curve(args.nbar[0], grid, args.convention)
        elif args.name == "symmetric-grid":
            g = _grid(args.g_min, args.g_max, args.g_steps, "g")
            y = _grid(args.excess_min, args.excess_max, args.excess_steps, "excess")
            result = symmetric_contour_grid(np.sort(1.0 - g), y)
        elif args.name == "amplifier-sweep":
            eps = _grid(args.eps_min, args.eps_max, args.eps_steps, "epsilon")
            result = amplifier_sweep(args.g0, args.sigma0sq, eps)
        else:
            result = benchmark_time_sweep(sorted(args.nbar), args.convention)
    except InputError:
        raise
    except (ValueError, TypeError) as exc:
        raise InputError(str(exc)) from None
    text = result.to_json() if args.format == "json" else result.to_csv()
    _write(text, args.out)
    return EXIT_OK


def cmd_oracle_check(args):
    cfg = CliConfig("oracle-check", dim=args.dim, h=args.h).validate(needs_oracle=True)
    if args.batch:
        if args.channel or args.gain is not None:
            raise InputError("--batch generates its own channels; do not pass a channel")
        seed_text = os.environ.get(SEED_ENV, "0")
        try:
            seed = int(seed_text)
        except ValueError:
            raise InputError(f"{SEED_ENV} must be an integer, got {seed_text!r}") from None
        rng = np.random.default_rng(seed)
        channels = [random_physical_channel(rng) for _ in range(args.batch)]
    else:
        channels = [subtract_noise_mean(_load_channel(args))]
    rows = []
    worst = 0.0
    for i, ch in enumerate(channels):
        try:
            analytic = average_qubit_fidelity(FidelityInputs.from_channel(ch))
        except (UnphysicalChannel, NumericalInconsistency) as exc:
            sys.stderr.write(f"channel {i}: {exc}\n")
            return EXIT_UNPHYSICAL
        blocks = channel_on_qubit_basis(ch, cfg.dim, cfg.h)
        brute = blocks.average_fidelity()
        diff = abs(analytic - brute)
        worst = max(worst, diff)
        rows.append(
            {
                "index": i,
                "analytic": analytic,
                "bruteforce": brute,
                "abs_diff": diff,
                "richardson_defect": blocks.richardson_defect,
                "pass": diff <= ORACLE_TOL,
            }
        )
    if args.format == "json":
        payload = {"dim": cfg.dim, "h": cfg.h, "tolerance": ORACLE_TOL, "results": rows}
        _write(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        lines = [f"dim = {cfg.dim}, h = {cfg.h:g}, tolerance = {ORACLE_TOL:g}"]
        for r in rows:
            lines.append(
                f"[{r['index']}] analytic = {_fmt(r['analytic'])}  "
                f"bruteforce = {_fmt(r['bruteforce'])}  |diff| = {r['abs_diff']:.3e}  "
                f"richardson = {r['richardson_defect']:.3e}  "
                f"{'PASS' if r['pass'] else 'FAIL'}"
            )
        _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK if worst <= ORACLE_TOL else EXIT_MISMATCH


# -- parser --------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser():
    parser = _Parser(prog="gaussfid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gaussfid {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("fidelity", help="closed-form average qubit fidelity of a channel")
    _channel_args(p)
    p.add_argument("--optimize-phase", action="store_true")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("tomography", help="reconstruct a channel from a probe CSV")
    p.add_argument("probes")
    p.add_argument("--out")
    p.set_defaults(func=cmd_tomography)

    p = sub.add_parser("scenario", help="parameter sweeps of the worked examples")
    p.add_argument("name", choices=SCENARIOS)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.add_argument("--nbar", type=float, nargs="+", default=None)
    p.add_argument("--convention", choices=CONVENTIONS, default="fast-gain")
    p.add_argument("--gt-min", type=float, default=0.0)
    p.add_argument("--gt-max", type=float, default=5.0)
    p.add_argument("--gt-steps", type=int, default=400)
    p.add_argument("--g-min", type=float, default=0.0)
    p.add_argument("--g-max", type=float, default=1.0)
    p.add_argument("--g-steps", type=int, default=201)
    p.add_argument("--excess-min", type=float, default=0.0)
    p.add_argument("--excess-max", type=float, default=1.0)
    p.add_argument("--excess-steps", type=int, default=201)
    p.add_argument("--g0", type=float, default=1.0)
    p.add_argument("--sigma0sq", type=float, default=0.5)
    p.add_argument("--eps-min", type=float, default=1.0)
    p.add_argument("--eps-max", type=float, default=3.0)
    p.add_argument("--eps-steps", type=int, default=400)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("oracle-check", help="compare closed form with the Fock-space oracle")
    _channel_args(p)
    p.add_argument("--dim", type=int, default=DEFAULT_DIM)
    p.add_argument("--h", type=float, default=DEFAULT_STEP)
    p.add_argument("--batch", type=int, default=0, help=f"random channels (seed from {SEED_ENV})")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise InputError("a subcommand is required")
        if args.command == "scenario":
            if args.nbar is None:
                args.nbar = [0.0] if args.name == "heat-bath" else [0.0, 0.3, 1.0, 3.0, 10.0]
            elif args.name == "heat-bath" and len(args.nbar) != 1:
                raise InputError("heat-bath takes a single --nbar value")
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"gaussfid: error: {exc}\n")
        return EXIT_INPUT
    except GaussFidError as exc:
        sys.stderr.write(f"gaussfid: {type(exc).__name__}: {exc}\n")
        return EXIT_UNPHYSICAL


if __name__ == "__main__":
    sys.exit(main())
