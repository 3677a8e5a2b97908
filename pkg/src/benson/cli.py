"""Command line front end.

Runs one approximation job end to end: load problem, run the configured
engine, certify, and write a result bundle. Engine diagnostics exit with a
machine-readable ``error.json`` instead of a traceback; an iteration-capped
run still writes its partial bundle.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .certification import certify
from .duality import DualFrame
from .engine import RunConfig, run
from .errors import BensonError, MaxIterationsError
from .io import load_problem, save_bundle

log = logging.getLogger("benson")

_LEVELS = {"error": logging.ERROR, "info": logging.INFO,
           "debug": logging.DEBUG}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="benson",
        description="Polyhedral approximation of convex vector optimization "
                    "problems (primal and dual outer approximation).")
    p.add_argument("--problem", required=True, help="problem JSON file")
    p.add_argument("--epsilon", type=float, required=True,
                   help="approximation error level (> 0)")
    p.add_argument("--algorithm", choices=("primal", "dual"),
                   default="primal")
    p.add_argument("--break", dest="break_mode", choices=("on", "off"),
                   default="on",
                   help="cut immediately (on) or sweep all vertices (off)")
    p.add_argument("--variant", choices=("fine", "alt"), default="fine",
                   help="recording granularity of the solution sets")
    p.add_argument("--out", default="benson-out", help="output directory")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for certification sampling")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="summary format printed to stdout")
    return p


def _fail(outdir: Path, kind: str, message: str, code: int) -> int:
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "error.json").write_text(json.dumps(
        {"error": kind, "message": message}, indent=2))
    log.error("%s: %s", kind, message)
    print(f"error: {kind}: {message}", file=sys.stderr)
    return code


def _summary(args, sol, report) -> None:
    row = {
        "epsilon": sol.epsilon,
        "algorithm": sol.algorithm,
        "break": args.break_mode == "on",
        "variant": sol.granularity,
        "num_opt": sol.stats.num_scalar_solves,
        "num_vert_enum": sol.stats.num_vertex_enumerations,
        "card_X": len(sol.primal_points),
        "card_T": len(sol.dual_points),
        "time_s": round(sol.stats.wall_time, 3),
        "achieved_epsilon": sol.achieved_epsilon,
        "certified": bool(report.all_passed) if report else None,
    }
    if args.format == "json":
        print(json.dumps(row, indent=2))
    else:
        print(",".join(str(k) for k in row))
        print(",".join(str(v) for v in row.values()))


def main(argv=None) -> int:
    level = _LEVELS.get(os.environ.get("BENSON_LOG", "error").lower(),
                        logging.ERROR)
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.epsilon <= 0:
        parser.error("--epsilon must be positive")
    outdir = Path(args.out)

    try:
        prob = load_problem(args.problem)
    except FileNotFoundError:
        return _fail(outdir, "FileNotFound", args.problem, 2)
    except BensonError as e:
        return _fail(outdir, type(e).__name__, str(e), 2)

    cfg = RunConfig(
        epsilon=args.epsilon,
        algorithm=args.algorithm,
        use_break=args.break_mode == "on",
        granularity=args.variant,
        max_iterations=args.max_iter,
    )
    frame = DualFrame.for_cone(prob.cone, prob.frame_columns)

    try:
        sol = run(prob, frame, cfg)
    except MaxIterationsError as e:
        sol = e.partial
        report = None
        if sol is not None:
            report = certify(sol, prob, frame, seed=args.seed)
            save_bundle(outdir, sol, cfg, report, args.problem)
            _summary(args, sol, report)
        return _fail(outdir, "MaxIterationsError", str(e), 3)
    except BensonError as e:
        return _fail(outdir, type(e).__name__, str(e), 3)

    report = certify(sol, prob, frame, seed=args.seed)
    save_bundle(outdir, sol, cfg, report, args.problem)
    _summary(args, sol, report)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
