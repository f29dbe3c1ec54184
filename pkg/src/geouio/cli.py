"""Command-line interface.

    geo-uio synth     --config cfg.json [--out DIR]
    geo-uio simulate  --config cfg.json [--out DIR]
    geo-uio verify    (--config cfg.json | --random) [--trials N] [--seed N] [--out DIR]
    geo-uio reproduce {centralized,distributed} [--out DIR]

Exit codes: 0 success, 1 configuration/usage error, 2 synthesis failure,
3 simulation divergence, 4 verification failure.  The environment variable
GEO_UIO_TOL overrides the relative rank tolerance.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import report as rpt
from .cases import builtin_config
from .central import synthesize_centralized_uio
from .config import ProjectConfig, parse_config, tolerance_from_env
from .distributed import synthesize_distributed
from .errors import (AssumptionViolated, ConfigError, ExistenceFailed,
                     InvarianceViolated, NonFiniteState,
                     NotConditionedInvariant, NotSolvable, SingularQ,
                     SpectrumUnassignable)
from .simulate import error_metrics, simulate_centralized, simulate_distributed
from .verify import (MARGINAL_GAP, random_equivalence_battery,
                     synthesis_residual_checks)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SYNTH = 2
EXIT_SIM = 3
EXIT_VERIFY = 4

_SYNTH_ERRORS = (ExistenceFailed, AssumptionViolated, SpectrumUnassignable,
                 NotSolvable, SingularQ, NotConditionedInvariant,
                 InvarianceViolated)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="geo-uio",
                     description="Geometric unknown-input observer toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="synthesize observers from a config")
    p_synth.add_argument("--config", required=True)
    p_synth.add_argument("--out", default="out")

    p_sim = sub.add_parser("simulate", help="synthesize then simulate a config")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", default="out")

    p_ver = sub.add_parser("verify", help="invariant and equivalence checks")
    p_ver.add_argument("--config")
    p_ver.add_argument("--random", action="store_true",
                       help="run the randomized equivalence battery")
    p_ver.add_argument("--trials", type=int, default=500)
    p_ver.add_argument("--seed", type=int, default=42)
    p_ver.add_argument("--out")

    p_rep = sub.add_parser("reproduce", help="run a bundled demonstration")
    p_rep.add_argument("which", help="centralized | distributed")
    p_rep.add_argument("--out", default="out")
    return parser


def _synthesize(cfg: ProjectConfig, tol):
    if cfg.mode == "centralized":
        obs = synthesize_centralized_uio(cfg.system, cfg.partition, cfg.spectral,
                                         tol, pole_targets=cfg.pole_targets,
                                         margin=cfg.margin)
        report = rpt.centralized_report(cfg.to_dict(), obs, cfg.system, cfg.partition)
        return obs, report
    net = synthesize_distributed(cfg.system, cfg.node_specs, cfg.graph,
                                 cfg.spectral, safety=cfg.safety,
                                 u_bar_max=cfg.u_bar_max, tol=tol,
                                 pole_targets=cfg.pole_targets, margin=cfg.margin)
    report = rpt.distributed_report(cfg.to_dict(), net, cfg.system)
    return net, report


def cmd_synth(cfg: ProjectConfig, out_dir, tol) -> int:
    _, report = _synthesize(cfg, tol)
    rpt.write_json(Path(out_dir) / "report.json", report)
    if cfg.mode == "centralized":
        print(f"synthesized centralized observer: z_dim = "
              f"{report['dimensions']['z_dim']}, existence condition passed")
    else:
        print(f"synthesized network: N1 = {report['classes']['N1']}, "
              f"N2 = {report['classes']['N2']}, chi = {report['gains']['chi']:.4g}, "
              f"gamma = {report['gains']['gamma']:.4g}")
    print(f"report written to {Path(out_dir) / 'report.json'}")
    return EXIT_OK


def cmd_simulate(cfg: ProjectConfig, out_dir, tol) -> int:
    if cfg.sim is None:
        raise ConfigError("config has no 'sim' block")
    artifact, report = _synthesize(cfg, tol)
    if cfg.mode == "centralized":
        traj = simulate_centralized(cfg.system, cfg.partition, artifact,
                                    cfg.signals, cfg.sim)
    else:
        traj = simulate_distributed(cfg.system, artifact, cfg.signals, cfg.sim)
    out = Path(out_dir)
    rpt.write_trajectory_csv(traj, out / "trajectory.csv")
    rpt.write_plot_series(traj, out)
    metrics = error_metrics(traj)
    report["metrics"] = metrics
    rpt.write_json(out / "report.json", report)
    final = metrics["max_final_err"]
    print(f"simulated {cfg.mode} run to t = {cfg.sim.t_end:g}: "
          f"max final error = {final:.3e}")
    print(f"artifacts written to {out}")
    return EXIT_OK


def cmd_verify(args, tol) -> int:
    failed = False
    lines = []
    battery_payload = None
    if args.random:
        if args.trials <= 0:
            raise ConfigError("--trials must be a positive integer")
        res = random_equivalence_battery(args.trials, args.seed, tol=tol)
        ok = res.all_agree and res.marginal_fraction < 0.05
        failed |= not ok
        lines.append(
            f"equivalence-battery       {'PASS' if ok else 'FAIL'}   "
            f"{res.agreements}/{res.scored} scored trials agree, "
            f"{len(res.marginal)} marginal excluded "
            f"(gap < {MARGINAL_GAP:g}), seed {res.seed}")
        for bad in res.disagreements:
            lines.append(f"  disagreement: {bad}")
        battery_payload = {
            "trials": res.trials, "seed": res.seed,
            "agreements": res.agreements, "scored": res.scored,
            "marginal": len(res.marginal),
            "disagreements": res.disagreements,
        }
    if args.config:
        cfg = parse_config(args.config)
        checks = synthesis_residual_checks(cfg, tol)
        worst = max((c.value for c in checks
                     if isinstance(c.value, float) and c.limit), default=0.0)
        for c in checks:
            status = "PASS" if c.passed else "FAIL"
            failed |= not c.passed
            if isinstance(c.value, bool):
                lines.append(f"{c.name:44s}  {status}")
            else:
                lim = f" (limit {c.limit:g})" if c.limit else ""
                lines.append(f"{c.name:44s}  {status}   {c.value:.3e}{lim}")
        lines.append(f"worst residual: {worst:.3e}")
    if not args.random and not args.config:
        raise ConfigError("verify needs --config and/or --random")
    for ln in lines:
        print(ln)
    if args.out:
        payload = {"checks": lines}
        if battery_payload:
            payload["battery"] = battery_payload
        rpt.write_json(Path(args.out) / "verify.json", payload)
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_reproduce(which, out_dir, tol) -> int:
    cfg = parse_config(builtin_config(which))
    out = Path(out_dir) / which
    code = cmd_synth(cfg, out, tol)
    if code:
        return code
    code = cmd_simulate(cfg, out, tol)
    if code:
        return code
    checks = synthesis_residual_checks(cfg, tol)
    bad = [c for c in checks if not c.passed]
    for c in checks:
        print(f"  {c.name}: {'PASS' if c.passed else 'FAIL'}")
    return EXIT_VERIFY if bad else EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        tol = tolerance_from_env(os.environ)
        if args.command == "synth":
            return cmd_synth(parse_config(args.config), args.out, tol)
        if args.command == "simulate":
            return cmd_simulate(parse_config(args.config), args.out, tol)
        if args.command == "verify":
            return cmd_verify(args, tol)
        if args.command == "reproduce":
            return cmd_reproduce(args.which, args.out, tol)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _SYNTH_ERRORS as exc:
        print(f"synthesis failed: {exc}", file=sys.stderr)
        return EXIT_SYNTH
    except NonFiniteState as exc:
        print(f"simulation diverged: {exc}", file=sys.stderr)
        return EXIT_SIM


def run():
    raise SystemExit(main())


if __name__ == "__main__":
    run()
