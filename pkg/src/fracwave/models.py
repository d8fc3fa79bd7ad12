"""Right-hand sides du/dt = F(u) for the fractional wave-model family.

Model coefficients follow the generalized form

    (1 + c_evo L_nu) u_t
        = -[ c_adv u_x + c_nl u u_x + c_disp L_nu u_x
             + c_mix (2 L_nu(u u_x) + u L_nu u_x) ]

with L_nu the fractional Laplacian.  The three physical members are

    fCH   c_disp = 3/4,  c_evo = 5/4,  c_mix = 1/4
    fKdV  c_disp = -1/2, c_evo = 0,    c_mix = 0
    fBBM  c_disp = 3/4,  c_evo = 5/4,  c_mix = 0

plus a shared linearization (c_nl = c_mix = 0) used for dispersion
measurements and as a pure-advection workhorse when c_disp = c_evo = 0.
Every mode travels at the phase speed

    c(k) = (c_adv + c_disp |k|^(2 nu)) / (1 + c_evo |k|^(2 nu))

in the linear regime.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .operators import (
    FractionalOrder,
    apply_A,
    apply_f,
    as_order,
    laplacian_symbol,
)
from .spectral import Grid, RealField, coeffs_of, values_of


class ModelKind(enum.Enum):
    FCH = "fch"
    FKDV = "fkdv"
    FBBM = "fbbm"
    LINEARIZED_FCH = "linearized"

    @classmethod
    def from_string(cls, s: str) -> "ModelKind":
        key = s.strip().lower().replace("-", "_")
        aliases = {"linearized_fch": "linearized"}
        key = aliases.get(key, key)
        for kind in cls:
            if kind.value == key:
                return kind
        raise ParameterError(
            f"unknown model kind {s!r}; expected one of "
            f"{[k.value for k in cls]}"
        )


@dataclass(frozen=True)
class Coefficients:
    c_adv: float = 1.0
    c_nl: float = 1.0
    c_disp: float = 0.0
    c_evo: float = 0.0
    c_mix: float = 0.0


_DEFAULTS = {
    ModelKind.FCH: Coefficients(c_disp=0.75, c_evo=1.25, c_mix=0.25),
    ModelKind.FKDV: Coefficients(c_disp=-0.5, c_evo=0.0, c_mix=0.0),
    ModelKind.FBBM: Coefficients(c_disp=0.75, c_evo=1.25, c_mix=0.0),
    ModelKind.LINEARIZED_FCH: Coefficients(c_disp=0.75, c_evo=1.25, c_mix=0.0),
}


def default_coefficients(kind: ModelKind) -> Coefficients:
    return _DEFAULTS[kind]


@dataclass(frozen=True)
class ModelParams:
    """A model kind plus its fractional order and coefficient set.

    Coefficients default per kind and may be overridden (e.g. c_mix = 0
    to strip the mixed term from fCH), subject to structural consistency:
    c_evo >= 0 always, and the fKdV form admits no evolution or mixed
    term.
    """

    kind: ModelKind
    nu: FractionalOrder
    coefficients: Coefficients | None = None

    def __post_init__(self):
        if self.coefficients is None:
            object.__setattr__(self, "coefficients", _DEFAULTS[self.kind])
        c = self.coefficients
        if c.c_evo < 0:
            raise ParameterError(f"c_evo must be nonnegative, got {c.c_evo}")
        if self.kind is ModelKind.FKDV and (c.c_evo != 0.0 or c.c_mix != 0.0):
            raise ParameterError("fKdV admits no c_evo or c_mix term")
        if self.kind is ModelKind.FBBM and c.c_mix != 0.0:
            raise ParameterError("fBBM admits no c_mix term")


def make_params(kind, nu, coefficients=None, strict_nu: bool = True) -> ModelParams:
    """Convenience constructor taking plain strings/floats."""
    if not isinstance(kind, ModelKind):
        kind = ModelKind.from_string(kind)
    if not isinstance(nu, FractionalOrder):
        nu = FractionalOrder(float(nu), strict=strict_nu)
    return ModelParams(kind, nu, coefficients)


# -- right-hand sides ----------------------------------------------------

def _rhs_values(u: np.ndarray, grid: Grid, p: ModelParams, dealias: bool) -> np.ndarray:
    """Shared evaluator for the generalized coefficient form."""
    c = p.coefficients
    lap = laplacian_symbol(grid, p.nu.value)
    keep = grid.dealias_keep if dealias else 1.0
    u_hat = coeffs_of(u)
    ux_hat = grid._ik * u_hat
    bracket = c.c_adv * ux_hat + c.c_disp * lap * ux_hat
    if c.c_nl != 0.0 or c.c_mix != 0.0:
        ux = values_of(ux_hat)
        uux_hat = keep * coeffs_of(u * ux)
        bracket = bracket + c.c_nl * uux_hat
        if c.c_mix != 0.0:
            lux = values_of(lap * ux_hat)
            ulux_hat = keep * coeffs_of(u * lux)
            bracket = bracket + c.c_mix * (2.0 * lap * uux_hat + ulux_hat)
    if c.c_evo != 0.0:
        bracket = bracket / (1.0 + c.c_evo * lap)
    return -values_of(bracket)


def rhs_fch(u: RealField, p: ModelParams, dealias: bool = True) -> RealField:
    """du/dt for the fractional Camassa-Holm equation."""
    if p.kind is not ModelKind.FCH:
        raise ParameterError(f"rhs_fch needs an FCH parameter set, got {p.kind}")
    return RealField(u.grid, _rhs_values(u.values, u.grid, p, dealias))


def rhs_fkdv(u: RealField, p: ModelParams, dealias: bool = True) -> RealField:
    """du/dt for the fractional Korteweg-de Vries equation."""
    if p.kind is not ModelKind.FKDV:
        raise ParameterError(f"rhs_fkdv needs an FKDV parameter set, got {p.kind}")
    return RealField(u.grid, _rhs_values(u.values, u.grid, p, dealias))


def rhs_fbbm(u: RealField, p: ModelParams, dealias: bool = True) -> RealField:
    """du/dt for the fractional Benjamin-Bona-Mahony equation."""
    if p.kind is not ModelKind.FBBM:
        raise ParameterError(f"rhs_fbbm needs an FBBM parameter set, got {p.kind}")
    return RealField(u.grid, _rhs_values(u.values, u.grid, p, dealias))


def rhs_linearized(u: RealField, p: ModelParams, dealias: bool = True) -> RealField:
    """du/dt for the linearization shared by fCH/fBBM (c_nl = c_mix = 0)."""
    c = p.coefficients
    lin = ModelParams(
        ModelKind.LINEARIZED_FCH,
        p.nu,
        Coefficients(c.c_adv, 0.0, c.c_disp, c.c_evo, 0.0),
    )
    return RealField(u.grid, _rhs_values(u.values, u.grid, lin, dealias))


def rhs_quasilinear_normalized(u: RealField, nu) -> RealField:
    """du/dt = -A(u)u + f(u), the unit-coefficient quasi-linear form.

    Kept separate from the physical evaluators: it is the analysis-side
    normalization that the estimate probes exercise, not a rescaling of
    any of the physical coefficient sets.
    """
    nu = as_order(nu)
    return RealField(
        u.grid, -apply_A(u, u, nu).values + apply_f(u, nu).values
    )


def make_rhs(p: ModelParams, dealias: bool = True):
    """Bind a parameter set into a plain ``u -> du/dt`` callable."""
    dispatch = {
        ModelKind.FCH: rhs_fch,
        ModelKind.FKDV: rhs_fkdv,
        ModelKind.FBBM: rhs_fbbm,
        ModelKind.LINEARIZED_FCH: rhs_linearized,
    }
    fn = dispatch[p.kind]
    return lambda u: fn(u, p, dealias)


# -- dispersion and conserved functionals --------------------------------

def dispersion_speed(k, p: ModelParams):
    """Linear phase speed c(k); accepts scalars or arrays."""
    c = p.coefficients
    big_k = np.abs(k) ** (2.0 * p.nu.value)
    return (c.c_adv + c.c_disp * big_k) / (1.0 + c.c_evo * big_k)


def mass(u: RealField) -> float:
    """integral of u over the box: L * u_hat_0.  Conserved by the fCH flow."""
    return float(u.grid.length * coeffs_of(u.values)[0].real)


def momentum(u: RealField) -> float:
    """(1/2) integral of u^2: (L/2) sum_k |u_hat_k|^2.  Conserved by fKdV."""
    coeffs = coeffs_of(u.values)
    return float(0.5 * u.grid.length * np.sum(np.abs(coeffs) ** 2))


def fbbm_energy(u: RealField, p: ModelParams) -> float:
    """(L/2) sum_k (1 + c_evo |k|^(2 nu)) |u_hat_k|^2.  Conserved by fBBM."""
    coeffs = coeffs_of(u.values)
    weight = 1.0 + p.coefficients.c_evo * laplacian_symbol(u.grid, p.nu.value)
    return float(0.5 * u.grid.length * np.sum(weight * np.abs(coeffs) ** 2))
