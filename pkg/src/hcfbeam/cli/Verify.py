from __future__ import annotations

import os
from fractions import Fraction
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.integrate import quad, trapezoid

from ..backstepping import TriangularKernel, apply_volterra, kernel_residuals, solve_kernel
from ..control import ControllerConfig, control_law, decoupling_feedback, future_v1, predicted_inputs, tracking_v
from ..flatness import feedforward_physical, make_reference, parametrize_input, parametrize_state, reference_state
from ..hcf import InputHistory, eta1_profile, hcf_boundary, hcf_to_xbar, xbar_to_hcf
from ..log import info_log, warn_log
from ..model import (BeamModel, Coefficient, RiemannField, build_model, from_riemann, strain_velocity, to_riemann,
                     with_coupling)
from ..simulation import (ClosedLoopInput, SimConfig, ZeroInput, delay_line_step, settle_time, simulate,
                          stationary_profile, tracking_tolerance)
from ..simulation.exceptions import SchemeUnsupported
from .exceptions import ConfigInvalid

THREADS_ENV = "HCF_BEAM_THREADS"
KERNEL_MESHES: tuple[int, ...] = (64, 128, 256)
ORDER_BAND: float = 0.2
CROSS_GRIDS: tuple[int, ...] = (201, 401, 801)


@dataclass(frozen=True)
class CaseResult:
    name: str
    residual: float
    tolerance: float
    skipped: bool = False

    @classmethod
    def skip(cls, name: str) -> CaseResult:
        return cls(name, float("nan"), float("nan"), skipped=True)

    @property
    def passed(self) -> bool:
        if self.skipped: return False
        return bool(np.isfinite(self.residual)) and self.residual <= self.tolerance

    @property
    def status(self) -> str:
        if self.skipped: return "SKIPPED"
        return "PASS" if self.passed else "FAIL"


@dataclass(frozen=True)
class VerifyContext:
    model: BeamModel
    kernel: TriangularKernel
    dt: float
    t0: float
    tT: float
    yT: tuple[float, float]
    seed: int = 7


Case = Callable[[VerifyContext], CaseResult]
_cases: dict[str, Case] = {}


def case(name: str):
    def decorator(fn: Case) -> Case:
        _cases[name] = fn
        return fn
    return decorator


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigInvalid(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigInvalid(f"{THREADS_ENV} must be a positive integer, got {n}")
    return n


# ---------------------------------------------------------------------- #
# HELPERS
# ---------------------------------------------------------------------- #
def random_consistent_state(model: BeamModel, rng: np.random.Generator, modes: int = 4) -> RiemannField:
    """Smooth random Riemann state with x+(0) = -x-(0)."""
    z = model.z
    cols = []
    for _ in range(4):
        c = rng.normal(size=modes) / (1.0 + np.arange(modes))
        cols.append(sum(c[k] * np.cos(np.pi * k * z) for k in range(modes)))
    x = np.stack(cols, axis=-1)
    x[0, 2:] = -x[0, :2]
    return RiemannField.from_array(z, x)


def _ref(ctx: VerifyContext):
    return make_reference((0.0, 0.0), ctx.yT, ctx.t0, ctx.tT)


def _delay_line_run(ctx: VerifyContext, gamma: float, t_end: float):
    ref = _ref(ctx)
    dt = delay_line_step(ctx.model, ctx.dt)
    sim = SimConfig(t_end=t_end, dt=dt, scheme="delay-line", ic="sin2",
                    source=ClosedLoopInput(ControllerConfig(gamma, gamma, ref)), snapshot_dt=t_end)
    return simulate(ctx.model, ctx.kernel, sim), dt


# ---------------------------------------------------------------------- #
# CASES
# ---------------------------------------------------------------------- #
@case("transport_times")
def _transport_times(ctx: VerifyContext) -> CaseResult:
    p = ctx.model.params
    mu1 = lambda z: float(np.sqrt(p.kappa(z) / (p.rho(z) * p.S(z))))
    mu2 = lambda z: float(np.sqrt(p.EI(z) / p.J(z)))
    tau1 = quad(lambda z: 1.0 / mu1(z), 0.0, 1.0)[0]
    tau2 = quad(lambda z: 1.0 / mu2(z), 0.0, 1.0)[0]
    res = max(abs(tau1 - ctx.model.tau1), abs(tau2 - ctx.model.tau2))
    return CaseResult("transport_times", res, 10.0 * ctx.model.dz ** 2)


@case("kernel_boundary_conditions")
def _kernel_bcs(ctx: VerifyContext) -> CaseResult:
    r = kernel_residuals(ctx.model, ctx.kernel)
    return CaseResult("kernel_boundary_conditions", max(r["diagonal"], r["edge_minus"], r["edge_plus"]), 1e-8)


@case("kernel_pde")
def _kernel_pde(ctx: VerifyContext) -> CaseResult:
    """Observed order of the interior residual over successive mesh halvings, distance from 1."""
    res = [kernel_residuals(ctx.model, solve_kernel(ctx.model, 1.0 / m))["pde"] for m in KERNEL_MESHES]
    orders = np.log2(np.asarray(res[:-1]) / np.asarray(res[1:]))
    info_log(f"kernel_pde: residuals {', '.join(f'{r:.3e}' for r in res)}, orders {np.round(orders, 3).tolist()}")
    return CaseResult("kernel_pde", float(np.max(np.abs(orders - 1.0))), ORDER_BAND)


@case("volterra_roundtrip")
def _volterra(ctx: VerifyContext) -> CaseResult:
    rng = np.random.default_rng(ctx.seed)
    res = 0.0
    for _ in range(5):
        x = random_consistent_state(ctx.model, rng)
        back = apply_volterra(ctx.kernel, apply_volterra(ctx.kernel, x, "forward"), "inverse")
        res = max(res, float(np.max(np.abs(back.stack() - x.stack()))))
    return CaseResult("volterra_roundtrip", res, 1e-6)


@case("hcf_roundtrip")
def _hcf_roundtrip(ctx: VerifyContext) -> CaseResult:
    rng = np.random.default_rng(ctx.seed + 1)
    model, kernel = ctx.model, ctx.kernel
    horizon = model.delta_tau + model.tau2
    res = 0.0
    for _ in range(20):
        xbar = random_consistent_state(model, rng)
        c = rng.normal(size=3)
        inputs = InputHistory(lambda s, c=c: c[0] + c[1] * np.sin(s) + c[2] * s, horizon)
        back = hcf_to_xbar(model, kernel, xbar_to_hcf(model, kernel, xbar, inputs), inputs)
        res = max(res, float(np.max(np.abs(back.stack() - xbar.stack()))))
    return CaseResult("hcf_roundtrip", res, 1e-6)


@case("decoupling_closure")
def _closure(ctx: VerifyContext) -> CaseResult:
    rng = np.random.default_rng(ctx.seed + 2)
    model, kernel = ctx.model, ctx.kernel
    cfg = ControllerConfig(0.3, -0.4, _ref(ctx))
    horizon = model.delta_tau + model.tau2
    xbar = random_consistent_state(model, rng)
    t = 0.5 * (ctx.t0 + ctx.tT)
    p1 = eta1_profile(model, xbar)
    inputs = predicted_inputs(p1, cfg, t, horizon)
    eta = xbar_to_hcf(model, kernel, xbar, inputs)
    v = tracking_v(eta, cfg, t)
    u_bar = decoupling_feedback(eta, v, future_v1(p1, cfg, t, horizon), model, kernel)
    res = float(np.max(np.abs(np.asarray(hcf_boundary(model, kernel, eta, u_bar, inputs)) - v)))
    return CaseResult("decoupling_closure", res, 1e-10)


@case("feedforward_consistency")
def _feedforward(ctx: VerifyContext) -> CaseResult:
    model, kernel = ctx.model, ctx.kernel
    ref = _ref(ctx)
    cfg = ControllerConfig(0.0, 0.0, ref)
    res = 0.0
    for t in (ctx.t0 - 0.3, ctx.t0 + 0.2, 0.5 * (ctx.t0 + ctx.tT), ctx.tT - 0.2):
        x_r = reference_state(model, kernel, ref, t)
        res = max(res, float(np.max(np.abs(control_law(x_r, cfg, model, kernel, t)
                                           - feedforward_physical(model, kernel, ref, t)))))
    return CaseResult("feedforward_consistency", res, 1e-6 * max(1.0, (140.0 * model.dz) ** 2))


@case("stationary_linearity")
def _linearity(ctx: VerifyContext) -> CaseResult:
    w1, p1 = stationary_profile(ctx.model, ctx.kernel, ctx.yT)
    w2, p2 = stationary_profile(ctx.model, ctx.kernel, tuple(2.0 * y for y in ctx.yT))
    res = float(max(np.max(np.abs(w2 - 2.0 * w1)), np.max(np.abs(p2 - 2.0 * p1))))
    return CaseResult("stationary_linearity", res, 1e-12 * (1.0 + float(np.max(np.abs(w1)))))


@case("deadbeat_tracking")
def _deadbeat(ctx: VerifyContext) -> CaseResult:
    model = ctx.model
    traj, dt = _delay_line_run(ctx, 0.0, ctx.tT + 1.5)
    res = 0.0
    for i, tau in enumerate((model.tau1, model.tau2)):
        late = traj.t >= 2.0 * tau + 2.0 * dt
        res = max(res, float(np.max(np.abs(traj.e[late, i]))))
    return CaseResult("deadbeat_tracking", res, 1e-9)


@case("input_substitution")
def _substitution(ctx: VerifyContext) -> CaseResult:
    traj, dt = _delay_line_run(ctx, 0.0, ctx.tT + 1.5)
    shift = int(round(2.0 * ctx.model.tau1 / dt))
    res = float(np.max(np.abs(traj.y[shift:, 0] + traj.u_bar[:-shift, 0])))
    return CaseResult("input_substitution", res, 1e-9)


@case("error_recursion")
def _recursion(ctx: VerifyContext) -> CaseResult:
    model = ctx.model
    dt = delay_line_step(model, ctx.dt)
    traj, _ = _delay_line_run(ctx, 0.5, 12.0 * model.tau2 + dt)
    res = 0.0
    for i, tau in enumerate((model.tau1, model.tau2)):
        shift = int(round(2.0 * tau / dt))
        # the inflow sample at t = 0 comes from the initial state, not from v(0)
        idx = np.arange(1, 5 * shift + 1)
        now, later = traj.e[idx, i], traj.e[idx + shift, i]
        mask = np.abs(now) > 1e-8
        if np.any(mask):
            res = max(res, float(np.max(np.abs(later[mask] / now[mask] + 0.5))))
    return CaseResult("error_recursion", res, 1e-6)


@case("lossless_conservation")
def _conservation(ctx: VerifyContext) -> CaseResult:
    model = with_coupling(ctx.model, None)
    kernel = solve_kernel(model, ctx.kernel.h)
    dt = delay_line_step(model, ctx.dt)
    period = 2.0 * model.tau1 * Fraction(model.tau2 / model.tau1).limit_denominator(64).numerator
    sim = SimConfig(t_end=period, dt=dt, scheme="delay-line", ic="sin2", source=ZeroInput(), snapshot_dt=period)
    traj = simulate(model, kernel, sim)
    energy = [float(trapezoid(np.sum(x.stack() ** 2, axis=1), model.z)) for x in (traj.x[0], traj.x[-1])]
    return CaseResult("lossless_conservation", abs(energy[1] - energy[0]), 1e-12 * max(1.0, energy[0]))


@case("riemann_roundtrip")
def _riemann(ctx: VerifyContext) -> CaseResult:
    rng = np.random.default_rng(ctx.seed + 3)
    model = ctx.model
    res = 0.0
    for _ in range(5):
        x, other = random_consistent_state(model, rng), random_consistent_state(model, rng)
        back = to_riemann(model, from_riemann(model, x))
        res = max(res, float(np.max(np.abs(back.stack() - x.stack()))))
        a, b = map(float, rng.normal(size=2))
        mixed = strain_velocity(model, x * a + other * b) - (a * strain_velocity(model, x) + b * strain_velocity(model, other))
        res = max(res, float(np.max(np.abs(mixed))))
    return CaseResult("riemann_roundtrip", res, 1e-12)


@case("coupling_diagonal")
def _coupling_diagonal(ctx: VerifyContext) -> CaseResult:
    return CaseResult("coupling_diagonal", float(np.max(np.abs(np.diagonal(ctx.model.A, axis1=1, axis2=2)))), 0.0)


def _scaled(c: Coefficient, factor: float) -> Coefficient:
    return replace(c, fn=lambda z: factor * c.fn(z), dfn=lambda z: factor * c.dfn(z))


@case("speed_scaling")
def _speed_scaling(ctx: VerifyContext) -> CaseResult:
    """Four times the stiffnesses doubles both speeds and halves both transport times."""
    p = ctx.model.params
    fast = build_model(replace(p, kappa=_scaled(p.kappa, 4.0), EI=_scaled(p.EI, 4.0)), ctx.model.n)
    res = max(abs(2.0 * fast.tau1 - ctx.model.tau1), abs(2.0 * fast.tau2 - ctx.model.tau2))
    return CaseResult("speed_scaling", res, 1e-10)


@case("a0_continuity")
def _a0_continuity(ctx: VerifyContext) -> CaseResult:
    """Largest step of a0-+ between neighbouring mesh points, against a bounded slope."""
    k = ctx.kernel
    steps = max(float(np.max(np.abs(np.diff(k.a0_minus)))), float(np.max(np.abs(np.diff(k.a0_plus)))))
    scale = 1.0 + max(float(np.max(np.abs(k.a0_minus))), float(np.max(np.abs(k.a0_plus))))
    return CaseResult("a0_continuity", steps, 10.0 * k.h * scale)


@case("prediction_window")
def _prediction_window(ctx: VerifyContext) -> CaseResult:
    """Overshoot of the reference times read by the parametrization beyond [t, t + tau1 + 2 tau2] and [t, t + 2 tau2]."""
    model, kernel = ctx.model, ctx.kernel
    reach = (model.tau1 + 2.0 * model.tau2, 2.0 * model.tau2)
    res = 0.0
    for t in (ctx.t0 - reach[0], 0.5 * (ctx.t0 + ctx.tT), ctx.tT):
        ref = _ref(ctx).recording()
        parametrize_state(model, kernel, ref, t)
        parametrize_input(model, kernel, ref, t)
        for i in (1, 2):
            lo, hi = ref.window(i)
            res = max(res, t - lo, hi - (t + reach[i - 1]))
    return CaseResult("prediction_window", res, 1e-12)


# ---------------------------------------------------------------------- #
# UPWIND CASES
# ---------------------------------------------------------------------- #
def _upwind_step(model: BeamModel, dt: float) -> float:
    return min(dt, model.dz / float(np.max(model.transport.lambda1)))


@case("clamped_every_step")
def _clamped(ctx: VerifyContext) -> CaseResult:
    model = ctx.model
    dt = _upwind_step(model, ctx.dt)
    sim = SimConfig(t_end=2.0 * model.tau1, dt=dt, scheme="upwind", ic="sin2",
                    source=ClosedLoopInput(ControllerConfig(0.0, 0.0, _ref(ctx))), snapshot_dt=dt)
    traj = simulate(model, ctx.kernel, sim)
    return CaseResult("clamped_every_step", max(x.clamped_residual() for x in traj.x), 1e-12)


@case("upwind_tracking")
def _upwind_tracking(ctx: VerifyContext) -> CaseResult:
    """
    Zero-gain closed loop from the sin2 state on the upwind scheme: e_i after its
    settle time, y - yT once the reference has arrived, and the final w against w_T.
    """
    model = ctx.model
    dt = _upwind_step(model, ctx.dt)
    settled = [settle_time(model, i, "upwind", dt) for i in (1, 2)]
    t_end = max(ctx.tT, settled[1]) + 1.5
    sim = SimConfig(t_end=t_end, dt=dt, scheme="upwind", ic="sin2",
                    source=ClosedLoopInput(ControllerConfig(0.0, 0.0, _ref(ctx))), snapshot_dt=t_end)
    traj = simulate(model, ctx.kernel, sim)
    res = max(float(np.max(np.abs(traj.e[traj.t >= settled[i], i]))) for i in range(2))
    arrived = traj.t >= max(ctx.tT, settled[1])
    res = max(res, float(np.max(np.abs(traj.y[arrived] - np.asarray(ctx.yT)))))
    w_T, _ = stationary_profile(model, ctx.kernel, ctx.yT)
    res = max(res, float(np.max(np.abs(traj.w[-1] - w_T))))
    return CaseResult("upwind_tracking", res, tracking_tolerance(model))


@case("scheme_cross_validation")
def _cross_validation(ctx: VerifyContext) -> CaseResult:
    """
    Upwind runs from rest on successively halved grids against the delay line;
    distance from 1 of the observed order of the flat-output gap.
    """
    model = ctx.model
    start = max(ctx.t0, model.tau1 + 2.0 * model.tau2)
    ref = make_reference((0.0, 0.0), ctx.yT, start, start + ctx.tT - ctx.t0)
    source = ClosedLoopInput(ControllerConfig(0.0, 0.0, ref))
    t_end = ref.tT + 0.5
    dt = delay_line_step(model, ctx.dt)
    exact = simulate(model, ctx.kernel, SimConfig(t_end=t_end, dt=dt, scheme="delay-line", source=source,
                                                  snapshot_dt=t_end))
    gaps = []
    for n in CROSS_GRIDS:
        fine = build_model(model.params, n)
        sim = SimConfig(t_end=t_end, dt=_upwind_step(fine, 1.0), scheme="upwind", source=source, snapshot_dt=t_end)
        traj = simulate(fine, solve_kernel(fine, fine.dz), sim)
        y_exact = ref(traj.t) + np.stack([np.interp(traj.t, exact.t, exact.e[:, i]) for i in range(2)], axis=-1)
        gaps.append(float(np.max(np.abs(traj.y - y_exact))))
    orders = np.log2(np.asarray(gaps[:-1]) / np.asarray(gaps[1:]))
    info_log(f"scheme_cross_validation: gaps {', '.join(f'{g:.3e}' for g in gaps)}, orders {np.round(orders, 3).tolist()}")
    return CaseResult("scheme_cross_validation", float(np.max(np.abs(orders - 1.0))), ORDER_BAND)


# ---------------------------------------------------------------------- #
# SUITE
# ---------------------------------------------------------------------- #
def _run_case(name: str, ctx: VerifyContext) -> CaseResult:
    try:
        result = _cases[name](ctx)
    except SchemeUnsupported as exc:
        warn_log(f"{name}: skipped, {exc}")
        return CaseResult.skip(name)
    info_log(f"{name}: residual {result.residual:.3e} (tolerance {result.tolerance:.1e}) "
             f"{'ok' if result.passed else 'FAILED'}")
    return result


def run_suite(ctx: VerifyContext, names: list[str] | None = None, threads: int | None = None) -> list[CaseResult]:
    names = list(_cases) if names is None else names
    workers = thread_count() if threads is None else threads
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda n: _run_case(n, ctx), names))


def case_names() -> list[str]:
    return list(_cases)
