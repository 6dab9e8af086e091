"""Command line entry point.

Usage:
  triodflow run <config.json>
  triodflow convergence|convergence-time|epsilon|conditioning|spiral|selfintersect [flags]
  triodflow version

Subcommands other than `run` build a configuration from flags; `run` loads a
JSON document (see docs/config_schema.md).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .errors import TriodflowError
from .scenarios import ScenarioConfig, run_scenario


def _add_common(p):
    p.add_argument("--out", default="out", help="output directory (default: %(default)s)")
    p.add_argument("--workers", type=int, default=1, help="sweep parallelism (default: %(default)s)")


def _floats(text):
    return [float(x) for x in text.split(",") if x]


def _ints(text):
    return [int(x) for x in text.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="triodflow",
                                     description="Curvature flow of planar triods, experiments and reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("version", help="print the package version")

    p = sub.add_parser("run", help="run a scenario described by a JSON configuration")
    p.add_argument("config", help="path to the configuration file")

    p = sub.add_parser("convergence", help="mesh refinement study against a nested reference run")
    _add_common(p)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--j-list", type=_ints, default=None, metavar="J1,J2,...")
    p.add_argument("--j-ref", type=int, default=None)
    p.add_argument("--paper-scale", action="store_true",
                   help="use the large reference resolution and the full mesh sweep")
    p.add_argument("--final-time", type=float, default=0.2)

    p = sub.add_parser("convergence-time", help="time refinement study at fixed mesh")
    _add_common(p)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--j", type=int, default=60)
    p.add_argument("--n-list", type=_ints, default=None, metavar="N1,N2,...")
    p.add_argument("--n-ref", type=int, default=34560)

    p = sub.add_parser("epsilon", help="relaxation study sweeping the regularisation parameter")
    _add_common(p)
    p.add_argument("--j", type=int, default=20)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--epsilon-list", type=_floats, default=None, metavar="E1,E2,...")
    p.add_argument("--threshold", type=float, default=1e-6)

    p = sub.add_parser("conditioning", help="spectral studies of the assembled matrices")
    _add_common(p)
    p.add_argument("--kind", choices=("mass", "system"), default="mass")
    p.add_argument("--j", type=int, default=20, help="mesh for kind=mass")
    p.add_argument("--j-list", type=_ints, default=None, help="meshes for kind=system")
    p.add_argument("--no-rotation", action="store_true",
                   help="assemble from the unrotated initial data")

    p = sub.add_parser("spiral", help="tightly wound initial curves stress test")
    _add_common(p)
    p.add_argument("--j", type=int, default=60)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--delta-list", type=_floats, default=None, metavar="D1,D2,...")
    p.add_argument("--final-time", type=float, default=0.48)

    p = sub.add_parser("selfintersect", help="self-intersecting initial curves stress test")
    _add_common(p)
    p.add_argument("--j", type=int, default=60)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--delta", type=float, default=1e-4)
    p.add_argument("--final-time", type=float, default=0.5)

    return parser


def _config_from_args(args) -> ScenarioConfig:
    doc: dict = {"output_dir": args.out, "workers": args.workers}
    cmd = args.command
    if cmd == "convergence":
        doc["scenario"] = "convergence"
        doc["epsilon"] = args.epsilon
        doc["final_time"] = args.final_time
        if args.paper_scale:
            doc["paper_scale"] = True
        if args.j_list is not None:
            doc["j_list"] = args.j_list
        if args.j_ref is not None:
            doc["j_ref"] = args.j_ref
    elif cmd == "convergence-time":
        doc["scenario"] = "convergence_time"
        doc["epsilon"] = args.epsilon
        doc["j"] = args.j
        doc["n_ref"] = args.n_ref
        if args.n_list is not None:
            doc["n_list"] = args.n_list
    elif cmd == "epsilon":
        doc["scenario"] = "epsilon_study"
        doc["j"] = args.j
        doc["delta"] = args.delta
        doc["velocity_threshold"] = args.threshold
        if args.epsilon_list is not None:
            doc["epsilon_list"] = args.epsilon_list
    elif cmd == "conditioning":
        if args.kind == "mass":
            doc["scenario"] = "conditioning_mass"
            doc["j"] = args.j
        else:
            doc["scenario"] = "conditioning_system"
            if args.j_list is not None:
                doc["j_list"] = args.j_list
        if args.no_rotation:
            doc["rotation_deg"] = 0.0
    elif cmd == "spiral":
        doc["scenario"] = "spiral"
        doc["j"] = args.j
        doc["epsilon"] = args.epsilon
        doc["final_time"] = args.final_time
        if args.delta_list is not None:
            doc["delta_list"] = args.delta_list
    elif cmd == "selfintersect":
        doc["scenario"] = "self_intersect"
        doc["j"] = args.j
        doc["epsilon"] = args.epsilon
        doc["delta"] = args.delta
        doc["final_time"] = args.final_time
    else:  # pragma: no cover
        raise AssertionError(cmd)
    return ScenarioConfig.from_dict(doc)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "version":
        print(__version__)
        return 0
    try:
        if args.command == "run":
            config = ScenarioConfig.from_file(args.config)
        else:
            config = _config_from_args(args)
        result = run_scenario(config)
    except TriodflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    brief = {k: v for k, v in result.items() if k != "rows"}
    print(json.dumps(brief, indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
