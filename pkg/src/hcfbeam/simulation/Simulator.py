from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np

from ..backstepping import TriangularKernel, flat_output
from ..flatness import ReferenceTrajectory, constant_reference, reference_state
from ..log import debug_log, info_log
from ..model import BeamModel, PhysicalField, RiemannField, reconstruct_displacement, to_riemann
from .InitialConditions import initial_conditions
from .Inputs import InputSource, ZeroInput
from .Schemes import Sample, Scheme

try:
    from tqdm import tqdm
except ImportError:
    def tqdm(it, **kwargs):  # type: ignore
        return it

InitialState = Union[RiemannField, Callable[[BeamModel], RiemannField], str]


@dataclass(frozen=True)
class SimConfig:
    t_end: float
    dt: float
    scheme: str = "upwind"
    ic: InitialState = "zero"
    source: InputSource = field(default_factory=ZeroInput)
    snapshot_dt: float = 0.1

    def __post_init__(self):
        assert self.t_end > 0.0 and self.dt > 0.0, "t_end and dt must be positive."

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def snapshot_every(self) -> int:
        return max(1, int(round(self.snapshot_dt / self.dt)))

    def initial_state(self, model: BeamModel) -> RiemannField:
        if isinstance(self.ic, RiemannField): return self.ic
        if isinstance(self.ic, str): return initial_conditions(self.ic, model)
        return self.ic(model)


@dataclass(frozen=True)
class Trajectory:
    """
    Signals of one run. ``t``, ``y``, ``u``, ``u_bar`` (and ``e`` when the input
    source follows a reference) are recorded every step; Riemann states and the
    reconstructed w, phi profiles every ``snapshot_every`` steps.
    """
    scheme: str
    z: np.ndarray
    t: np.ndarray
    y: np.ndarray
    u: np.ndarray
    u_bar: np.ndarray
    e: Optional[np.ndarray]
    snapshot_t: np.ndarray
    x: tuple[RiemannField, ...] = field(repr=False)
    w: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)

    def index(self, t: float) -> int:
        return int(np.argmin(np.abs(self.t - t)))

    def snapshot_index(self, t: float) -> int:
        return int(np.argmin(np.abs(self.snapshot_t - t)))


# ---------------------------------------------------------------------- #
# TIME LOOP
# ---------------------------------------------------------------------- #
def simulate(model: BeamModel, kernel: TriangularKernel, sim: SimConfig, progress: bool = False) -> Trajectory:
    stepper = Scheme.get_registered(sim.scheme)(model, kernel, sim.dt, sim.source)
    x0 = sim.initial_state(model)
    info_log(f"Simulating {sim.steps} steps of dt = {sim.dt:.6g} with the {sim.scheme} scheme "
             f"and a {sim.source.id} input")

    samples: list[Sample] = [stepper.initialize(x0)]
    snaps_t, snaps = [0.0], [stepper.state()]
    steps = range(1, sim.steps + 1)
    if progress:
        steps = tqdm(steps, desc=sim.scheme, unit="step")
    for k in steps:
        samples.append(stepper.step((k - 1) * sim.dt))
        if k % sim.snapshot_every == 0 or k == sim.steps:
            snaps_t.append(k * sim.dt)
            snaps.append(stepper.state())

    t = np.arange(sim.steps + 1) * sim.dt
    profiles = [reconstruct_displacement(model, x) for x in snaps]
    traj = Trajectory(
        scheme=sim.scheme, z=model.z, t=t,
        y=np.array([s.y for s in samples]),
        u=np.array([s.u for s in samples]),
        u_bar=np.array([s.u_bar for s in samples]),
        e=None,
        snapshot_t=np.asarray(snaps_t), x=tuple(snaps),
        w=np.array([p[0] for p in profiles]), phi=np.array([p[1] for p in profiles]),
    )
    ref = sim.source.reference
    if ref is not None:
        traj = replace(traj, e=error_signals(traj, ref))
    info_log(f"Simulation finished at t = {t[-1]:.6g}, y = ({traj.y[-1, 0]:.6g}, {traj.y[-1, 1]:.6g})")
    debug_log(f"max |u| = {np.max(np.abs(traj.u)):.6g}, {len(snaps)} snapshots")
    return traj


def error_signals(traj: Trajectory, ref: ReferenceTrajectory) -> np.ndarray:
    """e_i(t) = y_i(t) - y_ir(t), shape (steps + 1, 2)."""
    return traj.y - ref(traj.t)


# ---------------------------------------------------------------------- #
# TRACKING ACCURACY
# ---------------------------------------------------------------------- #
# Multiples of sqrt(dz) the upwind scheme needs to wash out the error jump at 2 tau_i.
SETTLE_WIDTH = 6.0


def settle_time(model: BeamModel, i: int, scheme_id: str, dt: float) -> float:
    """Time after which e_i vanishes under zero gains: 2 tau_i plus two steps, later for the upwind scheme."""
    tau = model.tau1 if i == 1 else model.tau2
    if scheme_id == "delay-line":
        return 2.0 * tau + 2.0 * dt
    return 2.0 * tau + max(2.0 * dt, SETTLE_WIDTH * float(np.sqrt(model.dz)))


def tracking_tolerance(model: BeamModel, amplitude: float = 0.2) -> float:
    """First-order accuracy bound 5 dz A for a run started from an initial state of amplitude A."""
    return 5.0 * model.dz * amplitude


# ---------------------------------------------------------------------- #
# STATIONARY CONFIGURATIONS
# ---------------------------------------------------------------------- #
def stationary_profile(model: BeamModel, kernel: TriangularKernel, y_const) -> tuple[np.ndarray, np.ndarray]:
    """(w_T, phi_T) of the rest configuration whose flat output is the constant ``y_const``."""
    x = reference_state(model, kernel, constant_reference(y_const), 0.0)
    return reconstruct_displacement(model, x)


def stationary_flat_output(model: BeamModel, kernel: TriangularKernel, w: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Flat output of the rest configuration (w, phi), both sampled on the model grid."""
    z = model.z
    w, phi = np.asarray(w, dtype=float), np.asarray(phi, dtype=float)
    zero = np.zeros_like(z)
    field_ = PhysicalField(z=z, w=w, phi=phi, dz_w=np.gradient(w, z, edge_order=2),
                           dz_phi=np.gradient(phi, z, edge_order=2), dt_w=zero, dt_phi=zero)
    return flat_output(model, kernel, to_riemann(model, field_))
