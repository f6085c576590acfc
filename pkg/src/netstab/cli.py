"""Command-line interface.

One problem file per invocation; subcommands cover validation, structural
decomposition, the capacity feasibility check, full co-design, closed-loop
analysis, and covariance simulation. Exit status 0 means the command's
verdict is positive (valid / feasible / stabilized / converged), 1 a
negative verdict, 2 an error.
"""

from __future__ import annotations

import argparse
import sys

from . import analysis, reports
from .codesign import codesign
from .cyclic import cyclic_decompose
from .errors import (
    DecompositionFailed,
    EpsilonExhausted,
    NetstabError,
    NotDiagonalizable,
    Unstabilizable,
)
from .majorize import STRICT_WEAK_ABOVE, check_order, pad_to_match
from .plantmodel import FADING, capacities, validate_plant
from .problemfile import load_problem_file

EXIT_POSITIVE = 0
EXIT_NEGATIVE = 1
EXIT_ERROR = 2

_COMMANDS = ("validate", "decompose", "check", "codesign", "analyze", "simulate")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="netstab",
        description=(
            "Stabilization of a linear plant over fixed-capacity subchannels: "
            "decide feasibility, synthesize the controller and codec, verify "
            "the closed loop."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("validate", "plant validation report (stabilizability, entropy)"),
        ("decompose", "cyclic decomposition of the plant"),
        ("check", "capacity-vs-entropy feasibility check with prefix table"),
        ("codesign", "full co-design: gain, codec, scaling search"),
        ("analyze", "co-design followed by the closed-loop analysis report"),
        ("simulate", "co-design followed by covariance simulation (fading)"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("problem", help="problem file (YAML)")
        cmd.add_argument(
            "--format",
            choices=(reports.HUMAN, reports.MACHINE, reports.TABLE),
            default=reports.HUMAN,
            help="output rendering (table applies to trajectories)",
        )
        cmd.add_argument("--out", help="write the document to this path")
        cmd.add_argument("--seed", type=int, help="randomization seed (default 0)")
        cmd.add_argument("--epsilon", type=float, help="pin the codec scaling")
        cmd.add_argument("--t-end", dest="t_end", type=float, help="simulation horizon")
        cmd.add_argument("--dt", type=float, help="simulation step")
    return parser


def _option(args, pf, key, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    return pf.options.get(key, default)


def _write(doc: str, args) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(doc)
    else:
        sys.stdout.write(doc)


def _run(args) -> int:
    pf = load_problem_file(args.problem)
    seed = int(_option(args, pf, "seed", 0))
    command = args.command

    if command == "validate":
        report = validate_plant(pf.plant)
        _write(reports.emit(report, args.format), args)
        return EXIT_POSITIVE if report.ok else EXIT_NEGATIVE

    if command == "decompose":
        decomposition = cyclic_decompose(pf.plant, seed=seed)
        _write(reports.emit(decomposition, args.format), args)
        return EXIT_POSITIVE

    if command == "check":
        decomposition = cyclic_decompose(pf.plant, seed=seed)
        c_pad, h_pad = pad_to_match(capacities(pf.channels), decomposition.h)
        verdict = check_order(c_pad, h_pad, STRICT_WEAK_ABOVE)
        _write(reports.emit(verdict, args.format), args)
        return EXIT_POSITIVE if verdict.holds else EXIT_NEGATIVE

    epsilon = _option(args, pf, "epsilon")
    result = codesign(pf.plant, pf.channels, seed=seed, epsilon=epsilon)

    if command == "codesign":
        _write(reports.emit(result, args.format), args)
        return EXIT_POSITIVE if result.feasible else EXIT_NEGATIVE

    if command == "analyze":
        if not result.feasible:
            _write(reports.emit(result, args.format), args)
            return EXIT_NEGATIVE
        _write(reports.emit(result.report, args.format), args)
        return EXIT_POSITIVE if result.report.stabilized else EXIT_NEGATIVE

    # simulate
    if pf.channels.kind != FADING:
        raise NetstabError(
            "covariance simulation applies to fading channels only "
            "(AWGN loops are verified analytically)"
        )
    if not result.feasible:
        _write(reports.emit(result, args.format), args)
        return EXIT_NEGATIVE
    t_end = float(_option(args, pf, "t_end", 10.0))
    dt = _option(args, pf, "dt")
    trajectory = analysis.simulate_fading_covariance(
        pf.plant, result.design, pf.channels, t_end=t_end, dt=dt
    )
    _write(reports.emit(trajectory, args.format), args)
    return EXIT_NEGATIVE if trajectory.diverged else EXIT_POSITIVE


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _run(args)
    except (Unstabilizable, NotDiagonalizable, DecompositionFailed) as exc:
        print(f"netstab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except EpsilonExhausted as exc:
        # a pinned scaling that fails verification is a negative verdict;
        # an exhausted search signals numerical pathology
        print(f"netstab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE if args.epsilon is not None else EXIT_ERROR
    except NetstabError as exc:
        print(f"netstab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"netstab: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
