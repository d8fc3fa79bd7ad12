"""Numerical probes of the analytic estimates behind well-posedness.

None of the constants in the commutator and Lipschitz estimates have
published values, so nothing here asserts a number.  The testable
surrogate is: measured sup ratios over seeded random sample sets are
finite, scale-invariant where the estimate is homogeneous, and stable
(within a factor two) under refinement of the grid or the sample count.

All samplers draw band-limited random fields: independent uniform phases
under a |k|^-2 amplitude envelope, rescaled to a requested Sobolev norm.
Every report is bit-reproducible from (spec, parameters).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError
from .models import ModelParams
from .operators import as_order, lambda_pow, apply_A, apply_B, apply_f, masked_product
from .spectral import Grid, RealField, coeffs_of, sobolev_norm, values_of
from .timestepper import Outcome, SolverConfig, integrate, resolve_dt

_ZERO_DENOM = 1e-13


@dataclass(frozen=True)
class SampleSpec:
    """How to draw a random sample set: grid, band, scale, count, seed."""

    n_samples: int
    grid: Grid
    band_limit: int
    amplitude: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ParameterError("n_samples must be >= 1")
        if self.band_limit < 1 or 3 * self.band_limit > self.grid.n_points:
            raise ParameterError(
                f"band_limit must lie in [1, N/3] = [1, {self.grid.n_points // 3}] "
                f"to stay dealias-safe, got {self.band_limit}"
            )
        if not (np.isfinite(self.amplitude) and self.amplitude > 0):
            raise ParameterError(f"amplitude must be positive, got {self.amplitude}")

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "grid": {"L": self.grid.length, "N": self.grid.n_points},
            "band_limit": self.band_limit,
            "amplitude": self.amplitude,
            "seed": self.seed,
        }


@dataclass
class DiagnosticsReport:
    estimate: str
    ratios: list
    skipped: int
    spec: SampleSpec
    params: dict

    @property
    def sup_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    @property
    def mean_ratio(self) -> float:
        return float(np.mean(self.ratios)) if self.ratios else 0.0

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "params": self.params,
            "spec": self.spec.to_dict(),
            "n_ratios": len(self.ratios),
            "skipped_zero_denominator": self.skipped,
            "sup_ratio": self.sup_ratio,
            "mean_ratio": self.mean_ratio,
            "ratios": list(self.ratios),
        }


def random_band_limited(grid: Grid, band_limit: int, rng) -> RealField:
    """One smooth random field: uniform phases, |k|^-2 envelope, zero mean."""
    if band_limit < 1 or 2 * band_limit >= grid.n_points:
        raise ParameterError(f"band_limit {band_limit} does not fit grid N={grid.n_points}")
    coeffs = np.zeros(grid.n_points, dtype=np.complex128)
    idx = np.arange(1, band_limit + 1)
    phases = rng.uniform(0.0, 2.0 * np.pi, band_limit)
    coeffs[idx] = np.abs(grid.k[idx]) ** -2.0 * np.exp(1j * phases)
    coeffs[-idx] = np.conj(coeffs[idx])
    return RealField(grid, values_of(coeffs))


def _scaled_sample(grid, band, rng, norm_index, target) -> RealField:
    u = random_band_limited(grid, band, rng)
    n = sobolev_norm(u, norm_index)
    return RealField(grid, u.values * (target / n))


# -- commutator estimate ---------------------------------------------------

def commutator_estimate_sample(
    m: float, s: float, sigma: float, nu, spec: SampleSpec
) -> DiagnosticsReport:
    """Sample ||[Lam^m, f] g||_s / (||f||_sigma ||g||_{s+m-1}).

    Hypotheses m > 0, s >= 0, 3/2 < s + m <= sigma are validated before
    any computation.
    """
    nu = as_order(nu)
    if not m > 0:
        raise ParameterError(f"commutator estimate needs m > 0, got m={m}")
    if not s >= 0:
        raise ParameterError(f"commutator estimate needs s >= 0, got s={s}")
    if not s + m > 1.5:
        raise ParameterError(
            f"commutator estimate needs s + m > 3/2, got s + m = {s + m}"
        )
    if not s + m <= sigma:
        raise ParameterError(
            f"commutator estimate needs s + m <= sigma, got {s + m} > {sigma}"
        )
    grid = spec.grid
    rng = np.random.default_rng(spec.seed)
    ratios, skipped = [], 0
    for _ in range(spec.n_samples):
        f = _scaled_sample(grid, spec.band_limit, rng, sigma, spec.amplitude)
        g = _scaled_sample(grid, spec.band_limit, rng, s + m - 1.0, spec.amplitude)
        denom = sobolev_norm(f, sigma) * sobolev_norm(g, s + m - 1.0)
        if denom < _ZERO_DENOM:
            skipped += 1
            continue
        lam_g = lambda_pow(g, m, nu)
        bracket = masked_product(grid, f.values, lam_g.values) - lambda_pow(
            RealField(grid, masked_product(grid, f.values, g.values)), m, nu
        ).values
        ratios.append(sobolev_norm(RealField(grid, bracket), s) / denom)
    return DiagnosticsReport(
        estimate="commutator",
        ratios=ratios,
        skipped=skipped,
        spec=spec,
        params={"m": m, "s": s, "sigma": sigma, "nu": nu.value},
    )


# -- Lipschitz / boundedness constants of the quasi-linear pieces ----------

class LipschitzKind(enum.Enum):
    A_LIP = "a-lip"
    B_BOUND = "b-bound"
    B_LIP = "b-lip"
    F_LIP_X = "f-lip-x"
    F_LIP_Y = "f-lip-y"

    @classmethod
    def from_string(cls, s: str) -> "LipschitzKind":
        key = s.strip().lower().replace("_", "-")
        for member in cls:
            if member.value == key:
                return member
        raise ParameterError(
            f"unknown Lipschitz probe {s!r}; expected one of "
            f"{[k.value for k in cls]}"
        )


def kato_lipschitz_sample(which, s: float, nu, spec: SampleSpec) -> DiagnosticsReport:
    """Sample the constants behind the A/B/f hypotheses.

    a-lip    ||(A(u)-A(v)) z||_{s-1} / (||u-v||_{s-1} ||z||_s)
    b-bound  ||B(u) w||_{s-1} / ||w||_{s-1}
    b-lip    ||(B(u)-B(v)) w||_{s-1} / (||u-v||_s ||w||_{s-1})
    f-lip-x  ||f(u)-f(v)||_{s-1} / ||u-v||_{s-1}
    f-lip-y  ||f(u)-f(v)||_s / ||u-v||_s

    u and v are drawn inside the H^s ball of radius ``spec.amplitude``
    (rescaled draws); the index constraint s > 2 nu + 1/2 is validated.
    """
    nu = as_order(nu)
    if isinstance(which, str):
        which = LipschitzKind.from_string(which)
    if not s > 2.0 * nu.value + 0.5:
        raise ParameterError(
            f"Lipschitz probes need s > 2 nu + 1/2 = {2 * nu.value + 0.5}, got s={s}"
        )
    grid = spec.grid
    rng = np.random.default_rng(spec.seed)
    radius = spec.amplitude
    ratios, skipped = [], 0

    def ball_draw():
        return _scaled_sample(
            grid, spec.band_limit, rng, s, radius * rng.uniform(0.2, 1.0)
        )

    for _ in range(spec.n_samples):
        u = ball_draw()
        if which in (LipschitzKind.A_LIP, LipschitzKind.B_LIP,
                     LipschitzKind.F_LIP_X, LipschitzKind.F_LIP_Y):
            v = ball_draw()
            diff = RealField(grid, u.values - v.values)
        if which is LipschitzKind.A_LIP:
            z = _scaled_sample(grid, spec.band_limit, rng, s, 1.0)
            denom = sobolev_norm(diff, s - 1.0) * sobolev_norm(z, s)
            num = sobolev_norm(
                RealField(grid, apply_A(u, z, nu).values - apply_A(v, z, nu).values),
                s - 1.0,
            )
        elif which is LipschitzKind.B_BOUND:
            w = _scaled_sample(grid, spec.band_limit, rng, s - 1.0, 1.0)
            denom = sobolev_norm(w, s - 1.0)
            num = sobolev_norm(apply_B(u, w, nu), s - 1.0)
        elif which is LipschitzKind.B_LIP:
            w = _scaled_sample(grid, spec.band_limit, rng, s - 1.0, 1.0)
            denom = sobolev_norm(diff, s) * sobolev_norm(w, s - 1.0)
            num = sobolev_norm(
                RealField(grid, apply_B(u, w, nu).values - apply_B(v, w, nu).values),
                s - 1.0,
            )
        elif which is LipschitzKind.F_LIP_X:
            denom = sobolev_norm(diff, s - 1.0)
            num = sobolev_norm(
                RealField(grid, apply_f(u, nu).values - apply_f(v, nu).values),
                s - 1.0,
            )
        else:  # F_LIP_Y
            denom = sobolev_norm(diff, s)
            num = sobolev_norm(
                RealField(grid, apply_f(u, nu).values - apply_f(v, nu).values), s
            )
        if denom < _ZERO_DENOM:
            skipped += 1
            continue
        ratios.append(num / denom)
    return DiagnosticsReport(
        estimate=f"kato-{which.value}",
        ratios=ratios,
        skipped=skipped,
        spec=spec,
        params={"which": which.value, "s": s, "nu": nu.value},
    )


# -- continuous dependence on initial data ---------------------------------

@dataclass
class DependenceReport:
    delta: float
    g_values: list
    censored: int
    n_pairs: int
    norm_index: float

    @property
    def max_g(self) -> float:
        return max(self.g_values) if self.g_values else float("nan")

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "n_pairs": self.n_pairs,
            "censored": self.censored,
            "max_g": self.max_g,
            "g_values": list(self.g_values),
            "norm_index": self.norm_index,
        }


class _Collector:
    def __init__(self):
        self.times = []
        self.fields = []

    def __call__(self, t, u):
        self.times.append(t)
        self.fields.append(u)


def continuous_dependence_experiment(
    u0: RealField,
    delta: float,
    n_pairs: int,
    model: ModelParams,
    config: SolverConfig,
    s: float,
    seed: int = 0,
    band_limit: int | None = None,
) -> DependenceReport:
    """Growth of perturbations: G = sup_{t<=T} ||u1-u2||_{s-1} at t over t=0.

    Each pair is (u0, u0 + delta * p) with p a random band-limited field
    of unit H^{s-1} norm.  Pairs whose trajectory breaks or blows up
    before t_end are censored (reported, not hidden).
    """
    if not (np.isfinite(delta) and delta > 0):
        raise ParameterError(f"perturbation scale must be positive, got {delta}")
    grid = u0.grid
    band = band_limit if band_limit is not None else max(2, grid.n_points // 6)
    # Fix dt once from the unperturbed data so all trajectories share a
    # time grid.
    dt, _ = resolve_dt(u0, model, config, config.t_end)
    run_cfg = replace(config, dt=dt, snapshot_every=dt)

    base = _Collector()
    base_result = integrate(u0, model, run_cfg, sink=base)
    if base_result.outcome is not Outcome.COMPLETED:
        return DependenceReport(delta, [], n_pairs, n_pairs, s - 1.0)

    rng = np.random.default_rng(seed)
    g_values, censored = [], 0
    for _ in range(n_pairs):
        p = _scaled_sample(grid, band, rng, s - 1.0, delta)
        perturbed0 = RealField(grid, u0.values + p.values)
        d0 = sobolev_norm(
            RealField(grid, perturbed0.values - u0.values), s - 1.0
        )
        if d0 < _ZERO_DENOM:
            censored += 1
            continue
        coll = _Collector()
        result = integrate(perturbed0, model, run_cfg, sink=coll)
        if result.outcome is not Outcome.COMPLETED or len(coll.fields) != len(base.fields):
            censored += 1
            continue
        sup = 0.0
        for ub, up in zip(base.fields, coll.fields):
            diff = sobolev_norm(RealField(grid, up.values - ub.values), s - 1.0)
            sup = max(sup, diff / d0)
        g_values.append(sup)
    return DependenceReport(delta, g_values, censored, n_pairs, s - 1.0)


# -- convergence studies ----------------------------------------------------

class StudyKind(enum.Enum):
    SPATIAL = "spatial"
    TEMPORAL = "temporal"
    BOX_SIZE = "box-size"

    @classmethod
    def from_string(cls, sname: str) -> "StudyKind":
        key = sname.strip().lower().replace("_", "-")
        aliases = {"box": "box-size"}
        key = aliases.get(key, key)
        for member in cls:
            if member.value == key:
                return member
        raise ParameterError(f"unknown study kind {sname!r}")


@dataclass
class ConvergenceResult:
    kind: StudyKind
    rows: list  # (resolution, error) pairs
    fitted_order: float | None
    reference: dict

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "rows": [{"resolution": r, "error": e} for r, e in self.rows],
            "fitted_order": self.fitted_order,
            "reference": self.reference,
        }


def _final_field(initial, grid, model, config) -> RealField:
    u0 = RealField(grid, initial(grid))
    result = integrate(u0, model, config, sink=None)
    if result.outcome is not Outcome.COMPLETED:
        raise ParameterError(
            f"convergence run on N={grid.n_points}, L={grid.length} ended in "
            f"{result.outcome.value}; refine the setup"
        )
    return result.state.u


def convergence_study(
    kind,
    model: ModelParams,
    config: SolverConfig,
    initial,
    *,
    length: float = 2.0 * np.pi,
    n_points: int = 64,
    spatial_ns=(16, 32, 64, 128),
    dt_halvings: int = 3,
    box_lengths=(2.0 * np.pi, 4.0 * np.pi, 8.0 * np.pi),
) -> ConvergenceResult:
    """Self-convergence tables against a refined reference run.

    ``initial`` is a builder mapping a Grid to a value array, so the same
    datum can be realized on every resolution (and every box size).
    SPATIAL doubles N at fixed dt; TEMPORAL halves dt at fixed N and fits
    the observed order; BOX_SIZE grows L at fixed spacing for localized
    data, quantifying the periodic-box stand-in for the real line.
    """
    if isinstance(kind, str):
        kind = StudyKind.from_string(kind)

    if kind is StudyKind.SPATIAL:
        ref_n = 4 * max(spatial_ns)
        ref_grid = Grid(length, ref_n)
        if config.dt == "auto":
            dt, _ = resolve_dt(RealField(ref_grid, initial(ref_grid)), model, config, config.t_end)
            config = replace(config, dt=dt)
        ref = _final_field(initial, ref_grid, model, config)
        rows = []
        for n in spatial_ns:
            u = _final_field(initial, Grid(length, n), model, config)
            stride = ref_n // n  # grids nest: coarse points are every stride-th fine point
            err = float(np.abs(u.values - ref.values[::stride]).max())
            rows.append((float(n), err))
        return ConvergenceResult(kind, rows, None, {"N": ref_n, "dt": config.dt})

    if kind is StudyKind.TEMPORAL:
        grid = Grid(length, n_points)
        u0 = RealField(grid, initial(grid))
        if config.dt == "auto":
            dt0, _ = resolve_dt(u0, model, config, config.t_end)
        else:
            # snap so every halved run lands exactly on t_end
            dt0 = config.t_end / max(1, round(config.t_end / float(config.dt)))
        ref_dt = dt0 / 2 ** (dt_halvings + 2)
        ref = _final_field(initial, grid, model, replace(config, dt=ref_dt))
        rows = []
        for i in range(dt_halvings + 1):
            dt = dt0 / 2**i
            u = _final_field(initial, grid, model, replace(config, dt=dt))
            rows.append((dt, float(np.abs(u.values - ref.values).max())))
        log_dt = np.log([r[0] for r in rows])
        log_err = np.log([max(r[1], 1e-300) for r in rows])
        order = float(np.polyfit(log_dt, log_err, 1)[0])
        return ConvergenceResult(kind, rows, order, {"N": n_points, "dt": ref_dt})

    # BOX_SIZE: fixed spacing, growing box
    spacing = length / n_points
    ref_len = 2.0 * max(box_lengths)
    if config.dt == "auto":
        g0 = Grid(length, n_points)
        dt, _ = resolve_dt(RealField(g0, initial(g0)), model, config, config.t_end)
        config = replace(config, dt=dt)
    ref_n = int(round(ref_len / spacing))
    ref = _final_field(initial, Grid(ref_len, ref_n), model, config)
    rows = []
    for box_l in box_lengths:
        n = int(round(box_l / spacing))
        u = _final_field(initial, Grid(box_l, n), model, config)
        offset = (ref_n - n) // 2
        err = float(np.abs(u.values - ref.values[offset : offset + n]).max())
        rows.append((box_l, err))
    return ConvergenceResult(kind, rows, None, {"L": ref_len, "dt": config.dt})


# -- phase-speed measurement -------------------------------------------------

def measure_phase_speed(times, fields, mode: int) -> float:
    """Phase speed of one Fourier mode from a snapshot series.

    Fits the unwrapped phase of u_hat_mode(t) against t; needs the mode
    populated and at least two snapshots.
    """
    if len(times) < 2:
        raise ParameterError("phase-speed fit needs at least two snapshots")
    coeffs = np.array([coeffs_of(f.values)[mode] for f in fields])
    if np.abs(coeffs).min() < 1e-300:
        raise ParameterError(f"mode {mode} is not populated; cannot fit its phase")
    phases = np.unwrap(np.angle(coeffs))
    slope = np.polyfit(np.asarray(times, dtype=float), phases, 1)[0]
    k = fields[0].grid.k[mode]
    return float(-slope / k)
