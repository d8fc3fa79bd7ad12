"""Time integration, wave-breaking detection, and checkpointing.

Two integrators are provided.  Classical RK4 suits fCH and fBBM, whose
linearized phase speed stays bounded as k grows (it tends to
c_disp/c_evo), so the stiffness is only advective.  fKdV has no
evolution-side smoothing and its dispersive phase grows like
|k|^(2 nu + 1); the integrating-factor RK4 removes that linear part
exactly and steps only the nonlinearity.

Breaking detection is deliberately conjunctive: a steep slope alone can
be an under-resolved (aliased) front, so the detector also requires a
visible spectral tail before it reports physical wave breaking.
"""

from __future__ import annotations

import enum
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUpError, CheckpointError, ParameterError
from .models import (
    ModelKind,
    ModelParams,
    dispersion_speed,
    make_rhs,
)
from .operators import laplacian_symbol
from .spectral import Grid, RealField, coeffs_of, values_of

AUTO = "auto"


class Integrator(enum.Enum):
    RK4 = "rk4"
    IFRK4 = "ifrk4"

    @classmethod
    def from_string(cls, s: str) -> "Integrator":
        for member in cls:
            if member.value == s.strip().lower():
                return member
        raise ParameterError(f"unknown integrator {s!r}; expected rk4 or ifrk4")


@dataclass
class SolverConfig:
    t_end: float
    integrator: Integrator = Integrator.RK4
    dt: float | str = AUTO
    cfl: float = 0.5
    snapshot_every: float | None = None
    dealias: bool = True
    breaking_slope_threshold: float = 100.0
    tail_fraction_threshold: float = 1e-4
    on_breaking: str = "halt"  # or "warn"

    def __post_init__(self):
        if isinstance(self.integrator, str):
            self.integrator = Integrator.from_string(self.integrator)
        if not (np.isfinite(self.t_end) and self.t_end >= 0):
            raise ParameterError(f"t_end must be >= 0, got {self.t_end}")
        if self.dt != AUTO:
            self.dt = float(self.dt)
            if not (np.isfinite(self.dt) and self.dt > 0):
                raise ParameterError(f"dt must be positive or 'auto', got {self.dt}")
        if not (0 < self.cfl <= 1):
            raise ParameterError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.snapshot_every is not None and self.snapshot_every <= 0:
            raise ParameterError("snapshot_every must be positive when given")
        if self.breaking_slope_threshold <= 0 or self.tail_fraction_threshold <= 0:
            raise ParameterError("breaking thresholds must be positive")
        if not (0 < self.tail_fraction_threshold < 1):
            raise ParameterError("tail_fraction_threshold must lie in (0, 1)")
        if self.on_breaking not in ("halt", "warn"):
            raise ParameterError(
                f"on_breaking must be 'halt' or 'warn', got {self.on_breaking!r}"
            )


@dataclass
class SimulationState:
    t: float
    u: RealField
    step_count: int = 0
    min_slope_history: list = field(default_factory=list)


@dataclass
class BreakingReport:
    t: float
    min_slope: float
    location: float
    tail_fraction: float
    estimated_breaking_time: float | None

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "min_slope": self.min_slope,
            "location": self.location,
            "tail_fraction": self.tail_fraction,
            "estimated_breaking_time": self.estimated_breaking_time,
        }


class Outcome(enum.Enum):
    COMPLETED = "completed"
    BREAKING = "breaking"
    BLOWUP = "blowup"


@dataclass
class SimulationResult:
    state: SimulationState  # last good state
    outcome: Outcome
    dt: float
    breaking: BreakingReport | None = None
    blowup_time: float | None = None
    blowup_stage: int | None = None


# -- single steps ---------------------------------------------------------

def _stage_values(arr: np.ndarray, t: float, stage: int) -> np.ndarray:
    bad = np.isfinite(arr)
    if not bad.all():
        raise BlowUpError(
            f"non-finite value in stage {stage} at t={t:.6g}",
            index=int(np.argmin(bad)),
            t=t,
            stage=stage,
        )
    return arr


def rk4_step(state: SimulationState, rhs, dt: float) -> SimulationState:
    """One classical Runge-Kutta step of du/dt = rhs(u)."""
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    grid = state.u.grid
    u = state.u.values
    t = state.t

    def eval_rhs(vals, stage):
        try:
            out = rhs(RealField(grid, _stage_values(vals, t, stage)))
        except BlowUpError as err:
            raise BlowUpError(str(err), index=err.index, t=t, stage=stage) from None
        return _stage_values(out.values, t, stage)

    k1 = eval_rhs(u, 1)
    k2 = eval_rhs(u + 0.5 * dt * k1, 2)
    k3 = eval_rhs(u + 0.5 * dt * k2, 3)
    k4 = eval_rhs(u + dt * k3, 4)
    new_u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _stage_values(new_u, t, 5)
    return SimulationState(
        t=t + dt,
        u=RealField(grid, new_u),
        step_count=state.step_count + 1,
        min_slope_history=state.min_slope_history,
    )


def ifrk4_step(
    state: SimulationState, model: ModelParams, dt: float, dealias: bool = True
) -> SimulationState:
    """Integrating-factor RK4 for fKdV.

    The full linear multiplier -i k (c_adv + c_disp |k|^(2 nu)) is folded
    into an exact exponential; RK4 sees only the -u u_x remainder.
    """
    if model.kind is not ModelKind.FKDV:
        raise ParameterError("ifrk4_step treats the fKdV linear symbol; use rk4 otherwise")
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    grid = state.u.grid
    c = model.coefficients
    t = state.t

    lin = -grid._ik * (c.c_adv + c.c_disp * laplacian_symbol(grid, model.nu.value))
    e_half = np.exp(0.5 * dt * lin)
    e_full = e_half * e_half
    keep = grid.dealias_keep if dealias else 1.0

    def nonlinear(u_hat, stage):
        u = values_of(_stage_values(u_hat, t, stage))
        ux = values_of(grid._ik * u_hat)
        return -c.c_nl * keep * coeffs_of(u * ux)

    u_hat = coeffs_of(state.u.values)
    k1 = nonlinear(u_hat, 1)
    k2 = nonlinear(e_half * (u_hat + 0.5 * dt * k1), 2)
    k3 = nonlinear(e_half * u_hat + 0.5 * dt * k2, 3)
    k4 = nonlinear(e_full * u_hat + dt * e_half * k3, 4)
    new_hat = e_full * u_hat + (dt / 6.0) * (
        e_full * k1 + 2.0 * e_half * (k2 + k3) + k4
    )
    new_u = values_of(_stage_values(new_hat, t, 5))
    return SimulationState(
        t=t + dt,
        u=RealField(grid, new_u),
        step_count=state.step_count + 1,
        min_slope_history=state.min_slope_history,
    )


def auto_dt(
    u: RealField,
    model: ModelParams,
    grid: Grid,
    cfl: float,
    integrator: Integrator = Integrator.RK4,
) -> float:
    """CFL-style step size: cfl * dx / v_max.

    v_max combines the fastest linear phase speed on the grid with the
    amplitude of u (nonlinear advection).  When fKdV is stepped with the
    integrating factor, the exactly-handled linear symbol is excluded and
    only advection remains.
    """
    if model.kind is ModelKind.FKDV and integrator is Integrator.IFRK4:
        v_lin = abs(model.coefficients.c_adv)
    else:
        v_lin = float(np.abs(dispersion_speed(grid.k, model)).max())
    v_max = max(v_lin, float(np.abs(u.values).max()))
    if v_max == 0.0:
        return cfl * grid.spacing
    return cfl * grid.spacing / v_max


# -- breaking detection ---------------------------------------------------

def _slope_stats(u: RealField) -> tuple[float, float]:
    grid = u.grid
    ux = values_of(grid._ik * coeffs_of(u.values))
    i = int(np.argmin(ux))
    return float(ux[i]), float(grid.x[i])


def _tail_fraction(u: RealField) -> float:
    grid = u.grid
    coeffs = coeffs_of(u.values)
    energy = np.abs(coeffs) ** 2
    total = float(energy.sum())
    if total == 0.0:
        return 0.0
    band_max = grid.n_points // 3  # retained band under the 2/3 rule
    tail = np.abs(grid.modes) > band_max / 2  # its top octave and beyond
    return float(energy[tail].sum()) / total


def _fit_breaking_time(history, threshold: float) -> float | None:
    """Extrapolate T from min u_x ~ -C/(T - t): fit -1/min_slope linearly."""
    pts = [(t, m) for t, m in history if m <= -threshold / 4.0]
    if len(pts) < 3:
        return None
    pts = pts[-16:]
    ts = np.array([p[0] for p in pts])
    ys = np.array([-1.0 / p[1] for p in pts])
    slope, intercept = np.polyfit(ts, ys, 1)
    if slope >= 0:
        return None
    return float(-intercept / slope)


def detect_breaking(state: SimulationState, config: SolverConfig) -> BreakingReport | None:
    """Report wave breaking when the slope threshold and the spectral-tail
    resolution guard are both exceeded; otherwise None."""
    min_slope, location = _slope_stats(state.u)
    if min_slope > -config.breaking_slope_threshold:
        return None
    tail = _tail_fraction(state.u)
    if tail <= config.tail_fraction_threshold:
        return None
    return BreakingReport(
        t=state.t,
        min_slope=min_slope,
        location=location,
        tail_fraction=tail,
        estimated_breaking_time=_fit_breaking_time(
            state.min_slope_history + [(state.t, min_slope)],
            config.breaking_slope_threshold,
        ),
    )


# -- driver ---------------------------------------------------------------

def resolve_dt(
    u0: RealField, model: ModelParams, config: SolverConfig, span: float
) -> tuple[float, int]:
    """Pick (dt, n_steps) for a time span.

    Explicit dt is honored exactly (the final step may overshoot t_end by
    less than one dt); AUTO snaps the CFL estimate so the last step lands
    exactly on t_end.
    """
    if span <= 0:
        return 0.0, 0
    if config.dt == AUTO:
        estimate = auto_dt(u0, model, u0.grid, config.cfl, config.integrator)
        n = max(1, int(np.ceil(span / estimate - 1e-12)))
        return span / n, n
    n = max(1, int(np.ceil(span / config.dt - 1e-9)))
    return config.dt, n


def integrate(
    u0: RealField,
    model: ModelParams,
    config: SolverConfig,
    sink=None,
    start: SimulationState | None = None,
) -> SimulationResult:
    """Advance the initial-value problem to t_end.

    ``sink(t, field)`` is called at the snapshot cadence (plus the first
    and last states); it never sees a non-finite field.  Returns a result
    whose outcome is COMPLETED, BREAKING (detector fired and the config
    says halt) or BLOWUP (non-finite value appeared; the state in the
    result is the last good one).

    Pass ``start`` to resume from a checkpointed state; ``u0`` is ignored
    then.  Resumed trajectories are bit-identical to uninterrupted ones
    when dt is explicit, because every step performs the same float
    operations in the same order.
    """
    if config.integrator is Integrator.IFRK4 and model.kind is not ModelKind.FKDV:
        raise ParameterError("IFRK4 is only valid for fKdV")

    if start is None:
        u_start = u0
        if config.dealias:
            # keep the evolved band clean from the start
            u_start = RealField(
                u0.grid, values_of(u0.grid.dealias_keep * coeffs_of(u0.values))
            )
        state = SimulationState(t=0.0, u=u_start, step_count=0, min_slope_history=[])
    else:
        state = start

    span = config.t_end - state.t
    dt, n_steps = resolve_dt(state.u, model, config, span)

    if config.snapshot_every is not None and dt > 0:
        stride = max(1, int(round(config.snapshot_every / dt)))
    else:
        stride = None

    rhs = make_rhs(model, config.dealias) if config.integrator is Integrator.RK4 else None

    history = state.min_slope_history
    slope, _ = _slope_stats(state.u)
    if not history or history[-1][0] < state.t:
        history.append((state.t, slope))

    if sink is not None:
        sink(state.t, state.u)

    breaking: BreakingReport | None = None
    for i in range(n_steps):
        try:
            if config.integrator is Integrator.RK4:
                state = rk4_step(state, rhs, dt)
            else:
                state = ifrk4_step(state, model, dt, config.dealias)
        except BlowUpError as err:
            return SimulationResult(
                state=state,
                outcome=Outcome.BLOWUP,
                dt=dt,
                breaking=breaking,
                blowup_time=err.t if err.t is not None else state.t,
                blowup_stage=err.stage,
            )
        slope, _ = _slope_stats(state.u)
        history.append((state.t, slope))
        report = None
        if slope <= -config.breaking_slope_threshold:
            report = detect_breaking(state, config)
        if report is not None and breaking is None:
            breaking = report
            if config.on_breaking == "halt":
                if sink is not None:
                    sink(state.t, state.u)
                return SimulationResult(
                    state=state, outcome=Outcome.BREAKING, dt=dt, breaking=breaking
                )
        if sink is not None and (
            (stride is not None and (i + 1) % stride == 0) or i == n_steps - 1
        ):
            sink(state.t, state.u)
    return SimulationResult(state=state, outcome=Outcome.COMPLETED, dt=dt, breaking=breaking)


# -- checkpointing --------------------------------------------------------
#
# Fixed binary layout, little-endian throughout:
#   magic "FWCK" | version u32 | N u32 | pad u32 | L f64 | t f64
#   | step_count u64 | n_history u64 | history (t, min_slope) f64 pairs
#   | u values N x f64 | crc32 u32 of everything before it

_MAGIC = b"FWCK"
_VERSION = 1
_HEADER = struct.Struct("<4sIIIddQQ")


def checkpoint_write(state: SimulationState, path) -> None:
    grid = state.u.grid
    hist = np.asarray(state.min_slope_history, dtype=np.float64).reshape(-1, 2)
    payload = _HEADER.pack(
        _MAGIC,
        _VERSION,
        grid.n_points,
        0,
        grid.length,
        state.t,
        state.step_count,
        hist.shape[0],
    )
    payload += hist.astype("<f8").tobytes()
    payload += state.u.values.astype("<f8").tobytes()
    payload += struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
    with open(path, "wb") as fh:
        fh.write(payload)


def checkpoint_read(path) -> SimulationState:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size + 4:
        raise CheckpointError(f"checkpoint {path} is truncated ({len(blob)} bytes)")
    body, (crc_stored,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != crc_stored:
        raise CheckpointError(f"checkpoint {path} failed its CRC32 check")
    magic, version, n, _pad, length, t, step_count, n_hist = _HEADER.unpack_from(body)
    if magic != _MAGIC:
        raise CheckpointError(f"checkpoint {path} has bad magic {magic!r}")
    if version != _VERSION:
        raise CheckpointError(
            f"checkpoint {path} has format version {version}, expected {_VERSION}"
        )
    expected = _HEADER.size + 8 * (2 * n_hist + n)
    if len(body) != expected:
        raise CheckpointError(
            f"checkpoint {path} has {len(body)} payload bytes, expected {expected}"
        )
    offset = _HEADER.size
    hist = np.frombuffer(body, dtype="<f8", count=2 * n_hist, offset=offset)
    offset += 16 * n_hist
    values = np.frombuffer(body, dtype="<f8", count=n, offset=offset)
    grid = Grid(length=length, n_points=n)
    history = [(float(a), float(b)) for a, b in hist.reshape(-1, 2)]
    return SimulationState(
        t=t,
        u=RealField(grid, values),
        step_count=step_count,
        min_slope_history=history,
    )
