"""Periodic grid, discrete Fourier transforms, multipliers, and Sobolev norms.

Everything downstream is built on the representation fixed here: a uniform
grid of N points on [0, L), and Fourier coefficients in the "analysis"
normalization

    u(x_j) = sum_k  u_hat_k * exp(i k x_j),    k = 2*pi*j/L,

with the signed index j running over [-N/2, N/2) in standard FFT order.
Under this convention u_hat_0 is the mean of u and single-mode fields have
coefficients of magnitude amplitude/2, which keeps hand-computed test
values exact.

The fast paths go through numpy.fft; ``dft_oracle`` is an independent
O(N^2) direct summation with the same normalization, used by the test
suite to cross-check the fast transforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BlowUpError,
    GridMismatchError,
    ParameterError,
    SymbolError,
    SymmetryError,
)

_SYMMETRY_TOL = 1e-10
_ORACLE_MAX_N = 1024


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0, length).

    ``n_points`` must be even (the signed spectrum layout needs it) and at
    least 8.  Powers of two give the fastest transforms but are not
    required.
    """

    length: float
    n_points: int

    def __post_init__(self):
        if not np.isfinite(self.length) or self.length <= 0:
            raise ParameterError(f"grid length must be positive, got {self.length}")
        n = self.n_points
        if n % 2 != 0 or n < 8:
            raise ParameterError(f"n_points must be even and >= 8, got {n}")
        # Derived arrays are stashed once; the dataclass stays hashable on
        # (length, n_points) alone.
        x = np.arange(n) * (self.length / n)
        modes = np.fft.fftfreq(n, d=1.0 / n)  # signed indices [-N/2, N/2)
        k = (2.0 * np.pi / self.length) * modes
        ik = 1j * k
        ik[n // 2] = 0.0  # Nyquist zeroed for odd derivatives of real data
        mask = 3 * np.abs(modes) <= n  # 2/3 rule: keep |j| <= N/3
        for arr in (x, modes, k, ik, mask):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "_ik", ik)
        object.__setattr__(self, "dealias_keep", mask)

    @property
    def spacing(self) -> float:
        return self.length / self.n_points

    @property
    def k_max(self) -> float:
        """Largest wavenumber magnitude on the grid, 2*pi*(N/2)/length."""
        return (2.0 * np.pi / self.length) * (self.n_points // 2)


def _first_nonfinite(values) -> int | None:
    finite = np.isfinite(values)
    if finite.all():
        return None
    return int(np.argmin(finite))


@dataclass(eq=False)
class RealField:
    """A real-valued function sampled on a grid.

    Values are copied and frozen at construction; non-finite entries are
    rejected immediately with a ``BlowUpError`` so that an exploding
    simulation can never propagate NaNs silently.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, copy=True)
        if vals.shape != (self.grid.n_points,):
            raise GridMismatchError(
                f"field has {vals.shape} values for a grid of {self.grid.n_points} points"
            )
        idx = _first_nonfinite(vals)
        if idx is not None:
            raise BlowUpError(
                f"non-finite field value at grid index {idx}", index=idx
            )
        vals.setflags(write=False)
        self.values = vals

    @classmethod
    def zeros(cls, grid: Grid) -> "RealField":
        return cls(grid, np.zeros(grid.n_points))


@dataclass(eq=False)
class SpectralField:
    """Fourier coefficients of a grid function, signed layout, analysis
    normalization (see module docstring)."""

    grid: Grid
    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coefficients, dtype=np.complex128, copy=True)
        if coeffs.shape != (self.grid.n_points,):
            raise GridMismatchError(
                f"spectrum has {coeffs.shape} coefficients for a grid of "
                f"{self.grid.n_points} points"
            )
        idx = _first_nonfinite(coeffs)
        if idx is not None:
            raise BlowUpError(
                f"non-finite coefficient at spectral index {idx}", index=idx
            )
        coeffs.setflags(write=False)
        self.coefficients = coeffs

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros(grid.n_points, dtype=np.complex128))


def require_same_grid(*fields) -> Grid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatchError(
                f"fields live on different grids: {grid} vs {f.grid}"
            )
    return grid


# -- raw-array transform kernels (shared by the field-level API and the
#    hot loops in models/timestepper) -----------------------------------

def coeffs_of(values: np.ndarray) -> np.ndarray:
    return np.fft.fft(values) / len(values)


def values_of(coeffs: np.ndarray) -> np.ndarray:
    return (len(coeffs) * np.fft.ifft(coeffs)).real


def symmetry_defect(coeffs: np.ndarray) -> float:
    """Max deviation from conjugate symmetry u_hat(-k) = conj(u_hat(k))."""
    n = len(coeffs)
    mirrored = coeffs[(-np.arange(n)) % n]
    return float(np.abs(mirrored - np.conj(coeffs)).max())


def forward_transform(u: RealField) -> SpectralField:
    """Fourier coefficients of ``u`` (fast path, O(N log N))."""
    return SpectralField(u.grid, coeffs_of(u.values))


def inverse_transform(field: SpectralField) -> RealField:
    """Synthesize the real grid function from coefficients.

    The coefficients must be conjugate-symmetric to within 1e-10
    (relative to the largest coefficient); otherwise the requested real
    result does not exist and a ``SymmetryError`` is raised.
    """
    coeffs = field.coefficients
    scale = max(1.0, float(np.abs(coeffs).max()))
    defect = symmetry_defect(coeffs)
    if defect > _SYMMETRY_TOL * scale:
        raise SymmetryError(
            f"spectrum is not conjugate-symmetric (defect {defect:.3e}, "
            f"scale {scale:.3e}); real output is undefined"
        )
    return RealField(field.grid, values_of(coeffs))


def dft_oracle(u: RealField) -> SpectralField:
    """Direct O(N^2) summation DFT with the package normalization.

    Test-only correctness oracle; refuses grids larger than 1024 points
    because of the quadratic cost.
    """
    n = u.grid.n_points
    if n > _ORACLE_MAX_N:
        raise ParameterError(
            f"dft_oracle is quadratic and limited to N <= {_ORACLE_MAX_N}, got {n}"
        )
    j = np.arange(n)
    # exp(-i k_m x_j) = exp(-2*pi*i*m*j/N) regardless of L
    kernel = np.exp(-2j * np.pi * np.outer(j, j) / n)
    return SpectralField(u.grid, kernel @ u.values / n)


def apply_symbol(field: SpectralField, m) -> SpectralField:
    """Multiply coefficients by a Fourier symbol, u_hat_k <- m(k) u_hat_k.

    ``m`` maps a physical wavenumber to a real or complex factor.  It may
    be vectorized over the wavenumber array or scalar-only; both work.
    Non-finite symbol values raise ``SymbolError`` naming the wavenumber.
    """
    k = field.grid.k
    try:
        m_vals = np.asarray(m(k), dtype=np.complex128)
        if m_vals.shape != k.shape:
            raise TypeError
    except (TypeError, ValueError):
        m_vals = np.array([m(kj) for kj in k], dtype=np.complex128)
    bad = _first_nonfinite(m_vals)
    if bad is not None:
        raise SymbolError(
            f"symbol is non-finite at wavenumber k={k[bad]} (index {bad})"
        )
    return SpectralField(field.grid, m_vals * field.coefficients)


def dealias(field: SpectralField) -> SpectralField:
    """Zero every mode with |k| beyond two thirds of the grid maximum.

    Idempotent; removes exactly the band that aliased quadratic products
    can contaminate.
    """
    return SpectralField(field.grid, field.coefficients * field.grid.dealias_keep)


def derivative(u: RealField) -> RealField:
    """Spectral d/dx.  The Nyquist mode is zeroed, which keeps odd
    derivatives of real data real."""
    return RealField(u.grid, values_of(u.grid._ik * coeffs_of(u.values)))


def sobolev_norm(u, s: float) -> float:
    """H^s norm with the Bessel weight: ( L * sum_k (1+k^2)^s |u_hat_k|^2 )^(1/2).

    Accepts either a RealField or a SpectralField.
    """
    if not np.isfinite(s):
        raise ParameterError(f"Sobolev index must be finite, got {s}")
    if isinstance(u, RealField):
        coeffs = coeffs_of(u.values)
        grid = u.grid
    else:
        coeffs = u.coefficients
        grid = u.grid
    weight = (1.0 + grid.k**2) ** s
    return float(np.sqrt(grid.length * np.sum(weight * np.abs(coeffs) ** 2)))


def inner_product(u: RealField, v: RealField) -> float:
    """Discrete L^2 inner product, (L/N) * sum_j u_j v_j."""
    require_same_grid(u, v)
    return float(u.grid.spacing * np.dot(u.values, v.values))
