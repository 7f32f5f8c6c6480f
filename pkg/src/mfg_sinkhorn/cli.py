"""Command-line entry point.

    mfg-sinkhorn solve --config PATH --out DIR [--format csv|pgm|both]
                       [--log-domain auto|on|off] [--max-sweeps N] [--tol X]
    mfg-sinkhorn scenarios

Exit status: 0 on convergence, 2 when the iteration budget runs out (frames
and manifest are still written), 1 on any other error.
"""

import argparse
import dataclasses
import logging
import sys
import time

from .diagnostics import compute_metrics
from .exceptions import MaxIterations, MFGSinkhornError
from .kernel import build_heat_kernel
from .scenario_io import (
    build_manifest, build_scenario, load_config, shipped_scenario_path, shipped_scenarios, write_frames,
)
from .sinkhorn import solve

logger = logging.getLogger("mfg_sinkhorn")

LOG_DOMAIN = {"auto": "auto", "on": "log", "off": "linear"}
EXIT_OK, EXIT_ERROR, EXIT_MAX_ITER = 0, 1, 2


def run_scenario(scenario, out_dir, fmt=None):
    """Solve a built scenario and write its frames and manifest.

    Returns
    -------
    manifest : RunManifest
    converged : bool
    """
    cfg = scenario.solver_config
    K = build_heat_kernel(scenario.grid, scenario.time_axis.dt, scenario.epsilon,
                          mode="linear" if cfg.stabilization == "linear" else "auto")
    try:
        state, report, frames = solve(scenario.schedule, scenario.grid, scenario.time_axis,
                                      scenario.epsilon, cfg, K=K)
        converged = True
    except MaxIterations as exc:
        state, report, frames = exc.state, exc.report, exc.frames
        converged = False
    metrics = compute_metrics(state, state.schedule, K, scenario.time_axis.dt)
    manifest = build_manifest(scenario, report, metrics)
    fmt = fmt or scenario.config["output"]["format"]
    write_frames(frames, out_dir, fmt, manifest)
    return manifest, converged


def _solve(args):
    target = args.config
    if not target.endswith(".toml") and target in shipped_scenarios():
        target = shipped_scenario_path(target)
    cfg = load_config(target)
    solver = cfg.document["solver"]
    if args.log_domain is not None:
        solver["stabilization"] = LOG_DOMAIN[args.log_domain]
    if args.max_sweeps is not None:
        solver["max_sweeps"] = args.max_sweeps
    if args.tol is not None:
        solver["tolerance"] = args.tol
    if args.format is not None:
        cfg.document["output"]["format"] = args.format
    scenario = build_scenario(cfg)
    start = time.perf_counter()
    manifest, converged = run_scenario(scenario, args.out)
    report = manifest.residuals["report"]
    logger.info("%s after %d sweeps in %.1f s; max residual %.3e, frames in %s",
                "converged" if converged else "stopped without convergence",
                report["sweeps"], time.perf_counter() - start,
                max(report["residuals"].values(), default=0.0), args.out)
    return EXIT_OK if converged else EXIT_MAX_ITER


def _list(args):
    for name in shipped_scenarios():
        print(f"{name}\t{shipped_scenario_path(name)}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="mfg-sinkhorn", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a scenario and write density frames")
    p.add_argument("--config", required=True,
                   help="scenario TOML file, or the name of a shipped scenario")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=("csv", "pgm", "both"))
    p.add_argument("--log-domain", choices=tuple(LOG_DOMAIN))
    p.add_argument("--max-sweeps", type=int)
    p.add_argument("--tol", type=float, help="marginal residual tolerance")
    p.set_defaults(func=_solve)

    p = sub.add_parser("scenarios", help="list the shipped example scenarios")
    p.set_defaults(func=_list)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose + 1, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (MFGSinkhornError, ValueError, TypeError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
