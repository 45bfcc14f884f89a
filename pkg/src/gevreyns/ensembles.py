"""Initial-datum library and random field ensembles.

All constructors return Hermitian, zero-mean fields; vector data are
Leray-projected so the divergence-free invariant holds by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .spectral import (
    Grid,
    SpectralField,
    leray_project,
    lp_norm,
    reflect_coeffs,
)


def hermitize(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    return 0.5 * (coeffs + np.conj(reflect_coeffs(coeffs, grid)))


def _finalize(
    grid: Grid, coeffs: np.ndarray, project: bool, keep_mean: bool = False
) -> SpectralField:
    coeffs = hermitize(coeffs, grid)
    if not keep_mean:
        coeffs[(slice(None),) + (0,) * grid.n_dims] = 0.0
    else:
        mean_idx = (slice(None),) + (0,) * grid.n_dims
        coeffs[mean_idx] = coeffs[mean_idx].real
    f = SpectralField(grid, coeffs)
    if project:
        f = leray_project(f)
    return f


def _rng_coeffs(grid: Grid, components: int, rng: np.random.Generator) -> np.ndarray:
    shape = (components,) + grid.shape
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_field(
    grid: Grid,
    rng: np.random.Generator,
    decay: float = 2.0,
    components: int = 1,
    law: str = "gaussian_spectrum",
    law_param=None,
    project: bool = False,
    keep_mean: bool = False,
) -> SpectralField:
    """Random Hermitian field with the requested spectral law.

    gaussian_spectrum: Gaussian coefficients damped by (1+|xi|)^-decay.
    analytic:          Gaussian coefficients damped by exp(-rate |xi|_1).
    block_supported:   Gaussian coefficients restricted to one dyadic shell
                       (law_param = shell index j, profile support).
    """
    coeffs = _rng_coeffs(grid, components, rng)
    if law == "gaussian_spectrum":
        rate = decay if law_param is None else float(law_param)
        coeffs *= (1.0 + grid.xi_abs) ** (-rate)
    elif law == "analytic":
        rate = decay if law_param is None else float(law_param)
        coeffs *= np.exp(-rate * grid.xi_l1)
    elif law == "block_supported":
        from .decomposition import DyadicSystem

        j = int(law_param)
        sys = DyadicSystem(grid)
        coeffs *= sys.mode_supported(j)
    else:
        raise InvalidParameterError(f"unknown field law {law!r}")
    return _finalize(grid, coeffs, project, keep_mean=keep_mean)


def random_trace_profiles(rng: np.random.Generator, n_terms: int = 3):
    """Smooth deterministic-in-form time profiles with random coefficients,
    used to build synthetic forcing traces."""
    amps = rng.standard_normal(n_terms)
    rates = rng.uniform(0.3, 3.0, n_terms)

    def profile(t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return sum(a * np.exp(-r * t) for a, r in zip(amps, rates))

    return profile


# -- datum library -------------------------------------------------------------------


def taylor_green(grid: Grid, amplitude: float = 1.0) -> SpectralField:
    """Taylor-Green vortex: (cos x1 sin x2, -sin x1 cos x2) in 2D, whose exact
    pressure is -(cos 2x1 + cos 2x2)/4; the z-independent extension in 3D."""
    n = grid.n_dims
    coeffs = np.zeros((n,) + grid.shape, dtype=np.complex128)

    def put(comp, k, val):
        coeffs[(comp,) + grid.mode_index(k)] += val

    a = amplitude
    if n == 2:
        # cos x sin y = sum_{s1,s2} (s2/(4i)) e^{i(s1 x + s2 y)}
        for s1 in (1, -1):
            for s2 in (1, -1):
                put(0, (s1, s2), a * s2 / 4j)
                put(1, (s1, s2), -a * s1 / 4j)
    else:
        for s1 in (1, -1):
            for s2 in (1, -1):
                for s3 in (1, -1):
                    put(0, (s1, s2, s3), a * s2 / 8j)
                    put(1, (s1, s2, s3), -a * s1 / 8j)
    return SpectralField(grid, coeffs, divergence_free=True)


def single_mode(grid: Grid, k0: tuple[int, ...], amplitude: float = 1.0) -> SpectralField:
    """Divergence-free single-mode datum supported on +-k0."""
    k0 = tuple(int(k) for k in k0)
    if all(k == 0 for k in k0):
        raise InvalidParameterError("single_mode requires a nonzero frequency")
    idx = grid.mode_index(k0)  # validates |k_i| < N/2
    n = grid.n_dims
    kvec = np.array(k0, dtype=float)
    if n == 2:
        e = np.array([-kvec[1], kvec[0]])
    else:
        ref = np.zeros(3)
        ref[int(np.argmin(np.abs(kvec)))] = 1.0
        e = np.cross(kvec, ref)
    e = e / np.linalg.norm(e)
    coeffs = np.zeros((n,) + grid.shape, dtype=np.complex128)
    for i in range(n):
        coeffs[(i,) + idx] = amplitude * e[i] / 2.0
    coeffs = hermitize(coeffs, grid)
    return SpectralField(grid, coeffs, divergence_free=True)


def random_div_free(
    grid: Grid, decay: float, amplitude: float, seed: int, norm=None
) -> SpectralField:
    """Random divergence-free datum scaled so the configured norm (L^2 by
    default) equals amplitude."""
    rng = np.random.default_rng(seed)
    u = random_field(grid, rng, decay=decay, components=grid.n_dims, project=True)
    return _rescaled(u, amplitude, norm)


def analytic_datum(
    grid: Grid, rate: float, amplitude: float, seed: int, norm=None
) -> SpectralField:
    rng = np.random.default_rng(seed)
    u = random_field(
        grid, rng, components=grid.n_dims, law="analytic", law_param=rate, project=True
    )
    return _rescaled(u, amplitude, norm)


def _rescaled(u: SpectralField, amplitude: float, norm) -> SpectralField:
    current = norm(u) if callable(norm) else lp_norm(u, 2.0)
    if current == 0.0:
        raise InvalidParameterError("cannot rescale a zero field")
    return u * (amplitude / current)


def init_data(kind: str, grid: Grid, norm=None, **params) -> SpectralField:
    """Datum factory used by the CLI: taylor_green, random_div_free,
    single_mode, analytic."""
    if kind == "taylor_green":
        u = taylor_green(grid, params.get("amplitude", 1.0))
        return u
    if kind == "random_div_free":
        return random_div_free(
            grid,
            decay=float(params.get("decay", 2.0)),
            amplitude=float(params.get("amplitude", 1.0)),
            seed=int(params.get("seed", 0)),
            norm=norm,
        )
    if kind == "single_mode":
        k0 = tuple(int(k) for k in params["k0"])
        return single_mode(grid, k0, float(params.get("amplitude", 1.0)))
    if kind == "analytic":
        return analytic_datum(
            grid,
            rate=float(params.get("rate", 0.5)),
            amplitude=float(params.get("amplitude", 1.0)),
            seed=int(params.get("seed", 0)),
            norm=norm,
        )
    raise InvalidParameterError(f"unknown datum kind {kind!r}")
