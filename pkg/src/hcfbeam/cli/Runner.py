from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np

from ..backstepping import TriangularKernel, cached_kernel, kernel_residuals
from ..backstepping.exceptions import KernelCacheError
from ..control.exceptions import ControlError
from ..exceptions import HcfBeamError
from ..flatness import feedforward_physical, parametrize_input
from ..flatness.exceptions import FlatnessError
from ..log import info_log, set_level
from ..model import BeamModel
from ..model.exceptions import ModelError
from ..simulation import Trajectory, simulate, stationary_profile
from ..simulation.exceptions import CflViolation, NotRegisteredException, SchemeUnsupported
from .Config import (ScenarioConfig, build_beam, build_reference, build_sim, kernel_step, load_config,
                     parse_config, time_step)
from .exceptions import CliError, ConfigInvalid, NumericalFailure, VerificationFailed
from .Export import write_beam_w, write_flat_output, write_inputs, write_plan, write_rows
from .Verify import VerifyContext, case_names, run_suite, thread_count

# Failures that stem from the scenario rather than from the numerics.
_CONFIG_ERRORS = (ModelError, FlatnessError, ControlError, CflViolation, SchemeUnsupported,
                  NotRegisteredException, KernelCacheError)


# ---------------------------------------------------------------------- #
# HELPERS
# ---------------------------------------------------------------------- #
def _scenario(args: argparse.Namespace) -> ScenarioConfig:
    if args.config is None:
        raise ConfigInvalid(f"{args.command} needs --config")
    return load_config(args.config)


def _setup(cfg: ScenarioConfig, cache: Optional[str]) -> tuple[BeamModel, TriangularKernel]:
    model = build_beam(cfg)
    return model, cached_kernel(model, kernel_step(cfg), cache or cfg.output.kernel_cache)


def _out_dir(args: argparse.Namespace, cfg: ScenarioConfig) -> Path:
    out = Path(args.out if args.out is not None else cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _check_finite(traj: Trajectory) -> None:
    for name in ("y", "u", "u_bar"):
        if not np.all(np.isfinite(getattr(traj, name))):
            raise NumericalFailure(f"Simulation produced non-finite {name} (scheme {traj.scheme})")


def _export(out: Path, cfg: ScenarioConfig, traj: Trajectory) -> None:
    write_flat_output(out / "flat_output.csv", traj, build_reference(cfg))
    write_beam_w(out / "beam_w.csv", traj)
    write_inputs(out / "inputs.csv", traj)


# ---------------------------------------------------------------------- #
# SUBCOMMANDS
# ---------------------------------------------------------------------- #
def cmd_simulate(args: argparse.Namespace) -> None:
    cfg = _scenario(args)
    model, kernel = _setup(cfg, args.cache)
    out = _out_dir(args, cfg)
    pairs = cfg.controller.gain_pairs()
    sims = [build_sim(cfg, model, gains) for gains in pairs]

    def run(sim):
        traj = simulate(model, kernel, sim, progress=args.progress and len(sims) == 1)
        _check_finite(traj)
        return traj

    with ThreadPoolExecutor(max_workers=min(thread_count(), len(sims))) as pool:
        trajectories = list(pool.map(run, sims))

    if len(pairs) == 1:
        _export(out, cfg, trajectories[0])
        return
    for (g1, g2), traj in zip(pairs, trajectories):
        _export(out / f"gamma_{g1:g}_{g2:g}", cfg, traj)


def cmd_plan(args: argparse.Namespace) -> None:
    cfg = _scenario(args)
    model, kernel = _setup(cfg, args.cache)
    ref = build_reference(cfg)
    t = np.arange(int(round(cfg.simulation.t_end / cfg.output.plan_dt)) + 1) * cfg.output.plan_dt
    u = np.array([feedforward_physical(model, kernel, ref, tk) for tk in t])
    u_bar = np.array([parametrize_input(model, kernel, ref, tk) for tk in t])
    if not np.all(np.isfinite(u)):
        raise NumericalFailure("Feedforward plan produced non-finite inputs")
    write_plan(_out_dir(args, cfg) / "plan.csv", t, u, u_bar, ref(t))


def cmd_kernel(args: argparse.Namespace) -> None:
    cfg = _scenario(args)
    model, kernel = _setup(cfg, args.cache)
    residuals = kernel_residuals(model, kernel)
    if not all(np.isfinite(v) for v in residuals.values()):
        raise NumericalFailure("Kernel residuals are not finite")
    for name, value in residuals.items():
        info_log(f"kernel residual {name}: {value:.3e}")
    rows = [(i, float(z), float(a0m), float(a0p))
            for i, (z, a0m, a0p) in enumerate(zip(kernel.mesh, kernel.a0_minus, kernel.a0_plus))]
    out = _out_dir(args, cfg)
    write_rows(out / "kernel_couplings.csv", ["index", "z", "a0_minus", "a0_plus"], rows)
    write_rows(out / "kernel_residuals.csv", ["pde", "diagonal", "edge_minus", "edge_plus"],
               [[residuals["pde"], residuals["diagonal"], residuals["edge_minus"], residuals["edge_plus"]]])


def cmd_verify(args: argparse.Namespace) -> None:
    cfg = _scenario(args)
    model, kernel = _setup(cfg, args.cache)
    r = cfg.reference
    ctx = VerifyContext(model=model, kernel=kernel, dt=time_step(cfg, model), t0=r.t0, tT=r.tT, yT=tuple(r.yT))
    results = run_suite(ctx, args.case or case_names())
    out = _out_dir(args, cfg) / "verify_report.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="") as fh:
        fh.write("case,residual,tolerance,status\n")
        for res in results:
            fh.write(f"{res.name},{res.residual:.12g},{res.tolerance:.12g},{res.status}\n")
    for res in results:
        detail = "" if res.skipped else f" {res.residual:.3e} <= {res.tolerance:.1e}"
        print(f"{res.status:<7} {res.name:<28}{detail}")
    failed = [res.name for res in results if res.status == "FAIL"]
    if failed:
        raise VerificationFailed(f"{len(failed)} invariant(s) failed: {', '.join(failed)}")


def cmd_reproduce(args: argparse.Namespace) -> None:
    cfg = load_config(args.config) if args.config is not None else parse_config({"schema_version": 1}, "clamped_tracking")
    model, kernel = _setup(cfg, args.cache)
    traj = simulate(model, kernel, build_sim(cfg, model, (0.0, 0.0)), progress=args.progress)
    _check_finite(traj)
    out = _out_dir(args, cfg)
    _export(out, cfg, traj)
    w_T, phi_T = stationary_profile(model, kernel, cfg.reference.yT)
    write_rows(out / "stationary_profile.csv", ["z", "w", "phi"], np.column_stack([model.z, w_T, phi_T]))
    info_log(f"Terminal flat output ({traj.y[-1, 0]:.6g}, {traj.y[-1, 1]:.6g}) written to {out}")


COMMANDS: dict[str, Callable[[argparse.Namespace], None]] = {
    "simulate": cmd_simulate,
    "plan": cmd_plan,
    "kernel": cmd_kernel,
    "verify": cmd_verify,
    "reproduce": cmd_reproduce,
}


# ---------------------------------------------------------------------- #
# CLI
# ---------------------------------------------------------------------- #
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hcfbeam", description="Flatness-based tracking control of a Timoshenko beam.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (("simulate", "Run a closed-loop or feedforward simulation"),
                            ("plan", "Tabulate the feedforward input for the reference"),
                            ("kernel", "Solve (or load) the backstepping kernel and report residuals"),
                            ("verify", "Run the invariant suite"),
                            ("reproduce", "Run the canned clamped-beam tracking scenario")):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", default=None, help="Scenario YAML file (schema_version: 1)")
        sp.add_argument("--out", default=None, help="Output directory (overrides output.dir)")
        sp.add_argument("--cache", default=None, help="Kernel cache CSV (overrides output.kernel_cache)")
        sp.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
        sp.add_argument("--progress", action="store_true", help="Show a progress bar when tqdm is installed")
        if name == "verify":
            sp.add_argument("--case", action="append", choices=case_names(), help="Run only this case (repeatable)")
    return p


def main(argv: List[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    set_level("DEBUG" if args.verbose else "INFO")
    try:
        COMMANDS[args.command](args)
    except CliError as err:
        print(f"ERROR: {err}", file=sys.stderr)
        return err.exit_code
    except _CONFIG_ERRORS as err:
        print(f"ERROR: {err}", file=sys.stderr)
        return ConfigInvalid.exit_code
    except (HcfBeamError, FloatingPointError, np.linalg.LinAlgError) as err:
        print(f"ERROR: {err}", file=sys.stderr)
        return NumericalFailure.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
