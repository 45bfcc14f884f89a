"""Periodic-torus grids, transforms, multiplier calculus and the Navier-Stokes
nonlinearity.

All fields live on the 2*pi-periodic torus (other periods are supported; the
frequency lattice is then the integer lattice scaled by 2*pi/period).  Spectral
data are stored as Fourier coefficients c_xi with

    f(x) = sum_xi c_xi exp(i xi . x),

i.e. numpy's ``norm="forward"`` convention, so a constant field 1 has
coefficient 1 at xi = 0.  Nyquist rows (|xi_i| = N/2) are zeroed on
construction so that the lattice is symmetric and odd multipliers like
i*xi preserve Hermitian symmetry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    CorruptedFieldError,
    InvalidParameterError,
    RejectedInputError,
)

HERMITIAN_RTOL = 1e-12
DIVFREE_RTOL = 1e-10


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform collocation grid on the n-dimensional periodic torus.

    resolution is the number of points per axis (a power of two, >= 8);
    period is the torus side length, 2*pi by default.
    """

    n_dims: int
    resolution: int
    period: float = 2.0 * np.pi

    def __post_init__(self):
        if self.n_dims not in (2, 3):
            raise InvalidParameterError(f"n_dims must be 2 or 3, got {self.n_dims}")
        if self.resolution < 8 or not _is_power_of_two(self.resolution):
            raise InvalidParameterError(
                f"resolution must be a power of two >= 8, got {self.resolution}"
            )
        if not (np.isfinite(self.period) and self.period > 0):
            raise InvalidParameterError(f"period must be positive, got {self.period}")

    # -- lattice geometry ---------------------------------------------------

    @property
    def scale(self) -> float:
        """Frequency-lattice spacing 2*pi/period (1 on the default torus)."""
        return 2.0 * np.pi / self.period

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.resolution,) * self.n_dims

    @property
    def cell_volume(self) -> float:
        return (self.period / self.resolution) ** self.n_dims

    @property
    def volume(self) -> float:
        return self.period**self.n_dims

    @cached_property
    def k_int(self) -> tuple[np.ndarray, ...]:
        """Integer frequency indices per axis, broadcastable (sparse meshgrid)."""
        k1d = np.fft.fftfreq(self.resolution, d=1.0 / self.resolution)
        return tuple(np.meshgrid(*([k1d] * self.n_dims), indexing="ij", sparse=True))

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        """Physical frequencies (scale * integer index) per axis."""
        return tuple(self.scale * k for k in self.k_int)

    @cached_property
    def xi_sq(self) -> np.ndarray:
        return sum(x**2 for x in self.xi)

    @cached_property
    def xi_abs(self) -> np.ndarray:
        return np.sqrt(self.xi_sq)

    @cached_property
    def xi_l1(self) -> np.ndarray:
        return sum(abs(x) for x in self.xi) + np.zeros(self.shape)

    @cached_property
    def xi_linf(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for x in self.xi:
            out = np.maximum(out, abs(x))
        return out

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on modes with any |k_i| = N/2 (zeroed on field construction)."""
        half = self.resolution // 2
        mask = np.zeros(self.shape, dtype=bool)
        for k in self.k_int:
            mask |= abs(k) == half
        return mask

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: True on retained modes (all |k_i| <= N/3)."""
        cutoff = self.resolution / 3.0
        mask = np.ones(self.shape, dtype=bool)
        for k in self.k_int:
            mask &= abs(k) <= cutoff
        return mask

    @cached_property
    def x(self) -> tuple[np.ndarray, ...]:
        pts = np.arange(self.resolution) * (self.period / self.resolution)
        return tuple(np.meshgrid(*([pts] * self.n_dims), indexing="ij", sparse=True))

    def mode_index(self, k: tuple[int, ...]) -> tuple[int, ...]:
        """Array index of integer lattice mode k; validates it is active."""
        if len(k) != self.n_dims:
            raise InvalidParameterError(f"mode {k} has wrong dimension")
        half = self.resolution // 2
        if any(abs(int(ki)) >= half for ki in k):
            raise InvalidParameterError(
                f"mode {k} outside active lattice |k_i| < {half}"
            )
        return tuple(int(ki) % self.resolution for ki in k)


def _spatial_axes(grid: Grid) -> tuple[int, ...]:
    return tuple(range(-grid.n_dims, 0))


def reflect_coeffs(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """Coefficient array evaluated at -xi: out[k] = in[(-k) mod N]."""
    axes = _spatial_axes(grid)
    return np.roll(np.flip(coeffs, axis=axes), 1, axis=axes)


@dataclass
class PhysicalField:
    """Real-valued samples on the collocation lattice, one array per component."""

    grid: Grid
    values: np.ndarray  # shape (components, N, ..., N), real

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim == self.grid.n_dims:
            self.values = self.values[None]
        expected = self.grid.shape
        if self.values.shape[1:] != expected:
            raise RejectedInputError(
                f"sample array shape {self.values.shape[1:]} does not match grid {expected}"
            )

    @property
    def components(self) -> int:
        return self.values.shape[0]

    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean magnitude across components."""
        if self.components == 1:
            return np.abs(self.values[0])
        return np.sqrt(np.sum(self.values**2, axis=0))

    def to_spectral(self) -> "SpectralField":
        return forward_transform(self)


@dataclass
class SpectralField:
    """Fourier coefficients of a real field; the package's universal currency."""

    grid: Grid
    coeffs: np.ndarray  # shape (components, N, ..., N), complex128
    divergence_free: bool = False

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.ndim == self.grid.n_dims:
            self.coeffs = self.coeffs[None]
        if self.coeffs.shape[1:] != self.grid.shape:
            raise RejectedInputError(
                f"coefficient shape {self.coeffs.shape[1:]} does not match grid {self.grid.shape}"
            )
        # Nyquist rows are zeroed so the lattice is reflection-symmetric.
        self.coeffs[:, self.grid.nyquist_mask] = 0.0

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy(), self.divergence_free)

    @classmethod
    def zeros(cls, grid: Grid, components: int = 1) -> "SpectralField":
        return cls(
            grid,
            np.zeros((components,) + grid.shape, dtype=np.complex128),
            divergence_free=True,
        )

    # -- invariants ----------------------------------------------------------

    def hermitian_error(self) -> float:
        """Max |c(-xi) - conj(c(xi))| relative to max |c|."""
        peak = float(np.max(np.abs(self.coeffs)))
        if peak == 0.0:
            return 0.0
        err = np.max(np.abs(reflect_coeffs(self.coeffs, self.grid) - np.conj(self.coeffs)))
        return float(err) / peak

    def divergence_error(self) -> float:
        """Max over modes of |xi . u_hat(xi)| / max|u_hat|, mean mode excluded."""
        if self.components != self.grid.n_dims:
            raise InvalidParameterError("divergence only defined for vector fields")
        div = sum(self.grid.xi[i] * self.coeffs[i] for i in range(self.components))
        peak = float(np.max(np.abs(self.coeffs)))
        if peak == 0.0:
            return 0.0
        return float(np.max(np.abs(div))) / peak

    def zero_mode(self) -> np.ndarray:
        return self.coeffs[(slice(None),) + (0,) * self.grid.n_dims].copy()

    def validate(self, rtol: float = HERMITIAN_RTOL) -> None:
        err = self.hermitian_error()
        if err > rtol:
            raise CorruptedFieldError(
                f"Hermitian symmetry violated: relative error {err:.3e} > {rtol:g}"
            )

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(
            self.grid,
            self.coeffs + other.coeffs,
            self.divergence_free and other.divergence_free,
        )

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(
            self.grid,
            self.coeffs - other.coeffs,
            self.divergence_free and other.divergence_free,
        )

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar, self.divergence_free)

    __rmul__ = __mul__

    def to_physical(self) -> PhysicalField:
        return inverse_transform(self)


# -- transforms ---------------------------------------------------------------


def forward_transform(f: PhysicalField) -> SpectralField:
    """Fourier coefficients of a physical field (constant 1 -> 1 at xi=0)."""
    if not np.all(np.isfinite(f.values)):
        raise RejectedInputError("physical field contains non-finite samples")
    axes = _spatial_axes(f.grid)
    coeffs = np.fft.fftn(f.values, axes=axes, norm="forward")
    return SpectralField(f.grid, coeffs)


def inverse_transform(f: SpectralField, check: bool = True) -> PhysicalField:
    """Collocation samples of a spectral field; input must be Hermitian."""
    if check:
        f.validate()
    axes = _spatial_axes(f.grid)
    values = np.fft.ifftn(f.coeffs, axes=axes, norm="forward")
    return PhysicalField(f.grid, values.real)


def lp_norm(f: PhysicalField | SpectralField, p: float) -> float:
    """L^p norm by Riemann summation on the collocation lattice (max for p=inf).

    Vector fields are measured through their pointwise Euclidean magnitude.
    """
    if not (p >= 1.0):
        raise InvalidParameterError(f"p must satisfy p >= 1, got {p}")
    if isinstance(f, SpectralField):
        f = inverse_transform(f)
    mag = f.magnitude()
    if np.isinf(p):
        return float(np.max(mag))
    return float((np.sum(mag**p) * f.grid.cell_volume) ** (1.0 / p))


def parseval_l2(f: SpectralField) -> float:
    """L^2 norm from coefficients: (vol * sum |c|^2)^(1/2); equals lp_norm(.,2)."""
    return float(np.sqrt(f.grid.volume * np.sum(np.abs(f.coeffs) ** 2)))


# -- multipliers --------------------------------------------------------------


def multiplier_table(grid: Grid, m) -> np.ndarray:
    """Evaluate a multiplier on the lattice; accepts a callable of the physical
    frequency axes or a ready table."""
    if callable(m):
        table = np.asarray(m(*grid.xi)) + np.zeros(grid.shape)
    else:
        table = np.asarray(m)
        if table.shape != grid.shape:
            raise InvalidParameterError(
                f"multiplier table shape {table.shape} does not match grid {grid.shape}"
            )
    return table


def apply_multiplier(f: SpectralField, m) -> SpectralField:
    """Coefficient-wise product with a frequency multiplier."""
    table = multiplier_table(f.grid, m)
    if not np.all(np.isfinite(table)):
        raise InvalidParameterError("multiplier takes non-finite values on the lattice")
    return SpectralField(f.grid, f.coeffs * table, divergence_free=f.divergence_free)


def fractional_laplacian(f: SpectralField, alpha: float) -> SpectralField:
    """(-Delta)^alpha: multiply by |xi|^(2 alpha)."""
    return apply_multiplier(f, f.grid.xi_abs ** (2.0 * alpha))


def gradient(f: SpectralField) -> SpectralField:
    """Gradient of a scalar field, returned as a vector field."""
    if f.components != 1:
        raise InvalidParameterError("gradient expects a scalar field")
    coeffs = np.stack([1j * f.grid.xi[i] * f.coeffs[0] for i in range(f.grid.n_dims)])
    return SpectralField(f.grid, coeffs)


def dealias(f: SpectralField) -> SpectralField:
    """Zero all modes with any |k_i| > N/3 (the 2/3 rule)."""
    out = f.coeffs * f.grid.dealias_mask
    return SpectralField(f.grid, out, divergence_free=f.divergence_free)


def apply_exp_weight(f: SpectralField, theta: float, metric: str = "l1") -> SpectralField:
    """Multiply coefficients by exp(theta * |xi|) with |xi| in the l1 (default)
    or l2 frequency metric.

    Evaluated in the log domain: a weighted coefficient whose log-magnitude
    would exceed 50 raises UnstableWeightError instead of overflowing.
    """
    from .errors import UnstableWeightError

    if theta == 0.0:
        return f.copy()
    grid = f.grid
    r = grid.xi_l1 if metric == "l1" else grid.xi_abs
    mag = np.abs(f.coeffs)
    # subnormal magnitudes break complex division; they carry nothing anyway
    nz = mag > 1e-300
    logmag = np.full(f.coeffs.shape, -np.inf)
    np.log(mag, out=logmag, where=nz)
    logmag += theta * r
    worst = float(np.max(logmag)) if logmag.size else -np.inf
    if worst > 50.0:
        raise UnstableWeightError(
            f"weighted coefficient magnitude e^{worst:.1f} exceeds the e^50 guard"
        )
    phase = np.where(nz, f.coeffs / np.where(nz, mag, 1.0), 0.0)
    return SpectralField(grid, np.exp(logmag) * phase, divergence_free=f.divergence_free)


# -- incompressible calculus ---------------------------------------------------


def leray_project(u: SpectralField) -> SpectralField:
    """Frequency-wise projection I - xi xi^T / |xi|^2 onto divergence-free
    fields; the xi = 0 mode passes through unchanged."""
    grid = u.grid
    n = grid.n_dims
    if u.components != n:
        raise InvalidParameterError(
            f"leray_project expects {n} components, got {u.components}"
        )
    denom = grid.xi_sq.copy()
    origin = (0,) * n
    denom[origin] = 1.0  # projector is singular at xi = 0; mode passed through
    dot = sum(grid.xi[i] * u.coeffs[i] for i in range(n)) / denom
    out = np.empty_like(u.coeffs)
    for i in range(n):
        out[i] = u.coeffs[i] - grid.xi[i] * dot
    out[(slice(None),) + origin] = u.coeffs[(slice(None),) + origin]
    return SpectralField(grid, out, divergence_free=True)


def dealiased_product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Pointwise product of two scalar fields with 2/3-rule dealiasing on both
    inputs and the output.  This is the product semantics used module-wide.

    The product is taken on complex collocation values, so it is also correct
    for non-Hermitian inputs such as individual frequency blocks.
    """
    if f.components != 1 or g.components != 1:
        raise InvalidParameterError("dealiased_product expects scalar fields")
    grid = f.grid
    a = np.fft.ifftn(dealias(f).coeffs[0], norm="forward")
    b = np.fft.ifftn(dealias(g).coeffs[0], norm="forward")
    prod = np.fft.fftn(a * b, norm="forward")
    return SpectralField(grid, prod * grid.dealias_mask)


def _tensor_product_coeffs(u: SpectralField) -> np.ndarray:
    """Dealiased coefficients of u (x) u; shape (n, n, ...) with T[i,j]=u_i u_j."""
    grid = u.grid
    n = grid.n_dims
    ud = dealias(u)
    w = inverse_transform(ud, check=False).values
    tensor = np.empty((n, n) + grid.shape, dtype=np.complex128)
    for i in range(n):
        for j in range(i, n):
            tij = np.fft.fftn(w[i] * w[j], norm="forward")
            tij = tij * grid.dealias_mask
            tensor[i, j] = tij
            tensor[j, i] = tij
    return tensor


def nonlinear_term(u: SpectralField) -> SpectralField:
    """P div(u (x) u): the Navier-Stokes transport term, dealiased with the
    2/3 rule and Leray-projected.  Output is divergence-free."""
    grid = u.grid
    n = grid.n_dims
    if u.components != n:
        raise InvalidParameterError("nonlinear_term expects a velocity vector field")
    tensor = _tensor_product_coeffs(u)
    div = np.empty((n,) + grid.shape, dtype=np.complex128)
    for i in range(n):
        div[i] = sum(1j * grid.xi[j] * tensor[i, j] for j in range(n))
    return leray_project(SpectralField(grid, div))


def symmetric_transport(u: SpectralField, w: SpectralField) -> SpectralField:
    """P div(u (x) w + w (x) u), the bilinear form behind Picard differences;
    symmetric_transport(u, u) = 2 nonlinear_term(u)."""
    grid = u.grid
    n = grid.n_dims
    a = inverse_transform(dealias(u), check=False).values
    b = inverse_transform(dealias(w), check=False).values
    div = np.zeros((n,) + grid.shape, dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            sij = np.fft.fftn(a[i] * b[j] + b[i] * a[j], norm="forward")
            div[i] += 1j * grid.xi[j] * (sij * grid.dealias_mask)
    return leray_project(SpectralField(grid, div))


def recover_pressure(u: SpectralField) -> SpectralField:
    """Pressure with zero mean: p_hat = -(xi xi^T : (u (x) u)^) / |xi|^2."""
    grid = u.grid
    n = grid.n_dims
    tensor = _tensor_product_coeffs(u)
    num = sum(
        grid.xi[i] * grid.xi[j] * tensor[i, j] for i in range(n) for j in range(n)
    )
    denom = grid.xi_sq.copy()
    origin = (0,) * n
    denom[origin] = 1.0
    p = -num / denom
    p[origin] = 0.0
    return SpectralField(grid, p[None])


# -- snapshot persistence -------------------------------------------------------

SNAPSHOT_DTYPE = "complex128"
SNAPSHOT_LAYOUT = "row-major, component-major"


def save_field(f: SpectralField, path: str | Path) -> tuple[Path, Path]:
    """Write a snapshot: <path>.json header plus <path>.bin little-endian
    complex128 payload.  Round trip is bit-exact."""
    path = Path(path)
    header = {
        "n_dims": f.grid.n_dims,
        "resolution": f.grid.resolution,
        "period": f.grid.period,
        "components": f.components,
        "dtype": SNAPSHOT_DTYPE,
        "layout": SNAPSHOT_LAYOUT,
        "divergence_free": f.divergence_free,
    }
    json_path = path.with_suffix(".json")
    bin_path = path.with_suffix(".bin")
    json_path.write_text(json.dumps(header, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    bin_path.write_bytes(np.ascontiguousarray(f.coeffs).astype("<c16").tobytes())
    return json_path, bin_path


def load_field(path: str | Path) -> SpectralField:
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    grid = Grid(header["n_dims"], header["resolution"], header["period"])
    raw = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<c16")
    coeffs = raw.reshape((header["components"],) + grid.shape).astype(np.complex128)
    return SpectralField(grid, coeffs.copy(), divergence_free=header["divergence_free"])
