"""Norm functionals: Besov, Chemin-Lerner time-space, modulation, exponential
modulation, time-dependent Gevrey weights, and the Gevrey-class fit.

Conventions (recorded in every norm report):
  - the domain is the periodic torus, so all norms are periodic analogues;
  - homogeneous sums run over the active dyadic shells only, the mean mode is
    assigned to no shell and reported separately;
  - exponential-modulation weights use base 2, 2^(s|k|), with |k| Euclidean by
    default (an l1 flag is available for cross-checks against the Gevrey fit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .decomposition import DyadicSystem, UniformSystem, uniform_block_lp_norms
from .errors import (
    InsufficientSamplesError,
    InvalidParameterError,
)
from .spectral import (
    Grid,
    SpectralField,
    apply_exp_weight,
    apply_multiplier,
    inverse_transform,
    lp_norm,
)

LN2 = math.log(2.0)


def trapezoid(y: np.ndarray, x: np.ndarray) -> float:
    return float(np.trapezoid(y, x))


# -- declarative specs ---------------------------------------------------------

WEIGHT_KINDS = (
    "none",
    "exp_sqrt_t_lambda",
    "exp_linear_t_lambda",
    "exp_power_t_lambda",
    "exp_modulation_rate",
)


@dataclass(frozen=True)
class WeightSpec:
    """Time-dependent exponential frequency weight.

    Lambda kinds multiply coefficients by exp(theta(t) |xi|_1) with
    theta(t) = rate * t^power (power 1/2, 1, or 1/(2 alpha)).  The modulation
    kind instead scales uniform blocks by 2^(s(t)|k|), s(t) = rate * t
    (rate * min(1, t) when clamp is set).
    """

    kind: str = "none"
    rate: float = 0.0
    power: float = 1.0
    clamp: bool = False

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise InvalidParameterError(f"unknown weight kind {self.kind!r}")
        if not (np.isfinite(self.rate) and self.rate >= 0):
            raise InvalidParameterError("weight rate must be finite and >= 0")
        if self.kind == "exp_power_t_lambda" and not (0.5 < self.power <= 1.0):
            raise InvalidParameterError("weight power must lie in (1/2, 1]")

    def theta(self, t: float) -> float:
        """Exponent coefficient of |xi|_1 at time t (Lambda kinds, base e)."""
        if self.kind == "none":
            return 0.0
        if self.kind == "exp_sqrt_t_lambda":
            return self.rate * math.sqrt(t)
        if self.kind == "exp_linear_t_lambda":
            return self.rate * t
        if self.kind == "exp_power_t_lambda":
            return self.rate * t**self.power
        raise InvalidParameterError(f"{self.kind} is not a Lambda-type weight")

    def s_of_t(self, t: float) -> float:
        """Block-weight rate s(t) for exponential-modulation norms (base 2)."""
        if self.kind == "none":
            return 0.0
        if self.kind != "exp_modulation_rate":
            raise InvalidParameterError(f"{self.kind} is not a modulation-rate weight")
        return self.rate * (min(1.0, t) if self.clamp else t)


NORM_FAMILIES = ("besov", "modulation", "exp_modulation", "lebesgue")


@dataclass(frozen=True)
class NormSpec:
    """Which norm to compute: family, indices (s, p, q), optional time exponent
    gamma and optional weight."""

    family: str
    s: float = 0.0
    p: float = 2.0
    q: float = 1.0
    gamma: float | None = None
    weight: WeightSpec = field(default_factory=WeightSpec)
    label: str = ""

    def __post_init__(self):
        if self.family not in NORM_FAMILIES:
            raise InvalidParameterError(f"unknown norm family {self.family!r}")
        for name, value in (("p", self.p), ("q", self.q)):
            if not (value >= 1.0):
                raise InvalidParameterError(f"{name} must be >= 1, got {value}")
        if self.gamma is not None and not (self.gamma >= 1.0):
            raise InvalidParameterError(f"gamma must be >= 1, got {self.gamma}")
        if self.family == "exp_modulation" and self.s < 0:
            raise InvalidParameterError("exp_modulation requires s >= 0")

    def describe(self) -> str:
        if self.label:
            return self.label
        g = "" if self.gamma is None else f",L{self.gamma:g}"
        w = "" if self.weight.kind == "none" else f",{self.weight.kind}:{self.weight.rate:g}"
        return f"{self.family}(s={self.s:g},p={self.p:g},q={self.q:g}{g}{w})"


@dataclass
class EvolutionTrace:
    """Time-indexed sequence of spectral fields plus per-time diagnostics."""

    times: np.ndarray
    states: list[SpectralField]
    diagnostics: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        if len(self.times) != len(self.states):
            raise InvalidParameterError("times and states must have equal length")
        if len(self.times) and np.any(np.diff(self.times) <= 0):
            raise InvalidParameterError("trace times must be strictly increasing")
        grids = {id(s.grid) for s in self.states}
        if len(self.states) > 1 and any(
            s.grid.shape != self.states[0].grid.shape for s in self.states
        ):
            raise InvalidParameterError("all trace states must share one grid")

    @property
    def grid(self) -> Grid:
        return self.states[0].grid

    def __len__(self) -> int:
        return len(self.states)

    def __sub__(self, other: "EvolutionTrace") -> "EvolutionTrace":
        if len(self) != len(other) or not np.allclose(self.times, other.times):
            raise InvalidParameterError("traces must share the time grid to subtract")
        return EvolutionTrace(
            self.times, [a - b for a, b in zip(self.states, other.states)]
        )

    def restricted(self, t_end: float) -> "EvolutionTrace":
        keep = self.times <= t_end + 1e-15
        return EvolutionTrace(
            self.times[keep], [s for s, k in zip(self.states, keep) if k]
        )


def constant_trace(f: SpectralField, times) -> EvolutionTrace:
    return EvolutionTrace(np.asarray(times, dtype=float), [f.copy() for _ in times])


# -- ell^q aggregation helpers ---------------------------------------------------


def _lq_sum(values: np.ndarray, q: float) -> float:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    if np.isinf(q):
        return float(np.max(values))
    return float(np.sum(values**q) ** (1.0 / q))


def _time_norm(values: np.ndarray, times: np.ndarray, gamma: float) -> float:
    if np.isinf(gamma):
        return float(np.max(values))
    if len(times) < 2:
        raise InsufficientSamplesError(
            "time-integrated norm requested on a single-sample trace"
        )
    return float(trapezoid(np.asarray(values, dtype=float) ** gamma, times) ** (1.0 / gamma))


# -- Besov ----------------------------------------------------------------------


def _block_lp(f: SpectralField, table: np.ndarray, p: float) -> float:
    block = SpectralField(f.grid, f.coeffs * table)
    if p == 2.0:
        # Riemann sum equals Parseval exactly for band-limited fields
        return float(np.sqrt(f.grid.volume * np.sum(np.abs(block.coeffs) ** 2)))
    return lp_norm(inverse_transform(block, check=False), p)


def besov_norm(f: SpectralField, s: float, p: float, q: float, sys: DyadicSystem) -> float:
    """Homogeneous Besov norm over the active shells; the mean mode carries no
    shell (see mean_mode_report)."""
    vals = [
        2.0 ** (j * s) * _block_lp(f, sys.phi_tables[j], p) for j in sys.shells
    ]
    return _lq_sum(np.array(vals), q)


def mean_mode_report(f: SpectralField) -> float:
    """|mean| of the field, reported separately from the homogeneous sum."""
    return float(np.max(np.abs(f.zero_mode())))


def _weighted_state(f: SpectralField, weight: WeightSpec, t: float) -> SpectralField:
    if weight.kind == "none":
        return f
    return apply_exp_weight(f, weight.theta(t), metric="l1")


def chemin_lerner_norm(
    tr: EvolutionTrace,
    gamma: float,
    s: float,
    p: float,
    q: float,
    sys: DyadicSystem,
    weight: WeightSpec = WeightSpec(),
) -> float:
    """Chemin-Lerner norm: per shell take L^gamma in time of the block L^p
    norms (trapezoid on the trace's own grid), then the weighted ell^q sum.

    An optional Lambda weight is applied to each state before block norms.
    """
    if len(tr) == 0:
        raise InvalidParameterError("empty trace")
    if np.isinf(gamma) is False and len(tr) < 2:
        raise InsufficientSamplesError(
            "Chemin-Lerner norm with finite gamma needs at least two time samples"
        )
    weighted = [_weighted_state(f, weight, t) for f, t in zip(tr.states, tr.times)]
    shell_vals = []
    for j in sys.shells:
        table = sys.phi_tables[j]
        a = np.array([_block_lp(w, table, p) for w in weighted])
        shell_vals.append(2.0 ** (j * s) * _time_norm(a, tr.times, gamma))
    return _lq_sum(np.array(shell_vals), q)


# -- modulation -------------------------------------------------------------------


def _bracket(grid: Grid) -> np.ndarray:
    """Japanese bracket <k> = (1 + |k|^2)^(1/2) on the lattice."""
    return np.sqrt(1.0 + grid.xi_sq)


def _block_k_abs(grid: Grid, metric: str) -> np.ndarray:
    return grid.xi_l1 if metric == "l1" else grid.xi_abs


def modulation_norm(
    f: SpectralField, s: float, p: float, q: float, sys: UniformSystem
) -> float:
    """M^s_{p,q}: ell^q over cells of <k>^s ||Box_k f||_p."""
    b = uniform_block_lp_norms(f, sys, p)
    w = _bracket(f.grid) ** s
    return _lq_sum((w * b).ravel(), q)


def exp_modulation_norm(
    f: SpectralField,
    s: float,
    p: float,
    q: float,
    sys: UniformSystem,
    metric: str = "l2",
) -> float:
    """E^s_{p,q}: ell^q over cells of 2^(s|k|) ||Box_k f||_p, evaluated in the
    log domain so large s never overflows intermediate products."""
    if s < 0:
        raise InvalidParameterError("exp_modulation_norm requires s >= 0")
    b = uniform_block_lp_norms(f, sys, p).ravel()
    r = _block_k_abs(f.grid, metric).ravel()
    nz = b > 0
    if not np.any(nz):
        return 0.0
    logs = np.log(b[nz]) + s * LN2 * r[nz]
    # the final exp may legitimately reach inf; it must not raise or NaN
    with np.errstate(over="ignore"):
        if np.isinf(q):
            return float(np.exp(np.max(logs)))
        m = float(np.max(logs))
        return float(np.exp(m + np.log(np.sum(np.exp(q * (logs - m)))) / q))


def time_exp_modulation_norm(
    tr: EvolutionTrace,
    s_of_t: WeightSpec,
    q_tilde: float,
    p: float,
    q: float,
    sys: UniformSystem,
    metric: str = "l2",
) -> float:
    """Chemin-Lerner norm over uniform cells with the time-dependent weight
    2^(s(t)|k|): per cell take L^q_tilde in time, then ell^q over cells."""
    if len(tr) == 0:
        raise InvalidParameterError("empty trace")
    if not np.isinf(q_tilde) and len(tr) < 2:
        raise InsufficientSamplesError(
            "time-integrated modulation norm needs at least two samples"
        )
    r = _block_k_abs(tr.grid, metric).ravel()
    rows = []
    for f, t in zip(tr.states, tr.times):
        s_t = s_of_t.s_of_t(t) if s_of_t.kind != "none" else 0.0
        if s_t < 0:
            raise InvalidParameterError("s(t) must be >= 0 on the trace interval")
        b = uniform_block_lp_norms(f, sys, p).ravel()
        rows.append(b * np.exp2(s_t * r))
    rows = np.array(rows)  # (T, cells)
    per_cell = (
        np.max(rows, axis=0)
        if np.isinf(q_tilde)
        else trapezoid_rows(rows, tr.times, q_tilde)
    )
    return _lq_sum(per_cell, q)


def trapezoid_rows(rows: np.ndarray, times: np.ndarray, gamma: float) -> np.ndarray:
    """Vectorized L^gamma-in-time norms for an array of time series (T, M)."""
    return np.trapezoid(rows**gamma, times, axis=0) ** (1.0 / gamma)


# -- unified dispatcher -------------------------------------------------------------


def snapshot_norm(f: SpectralField, spec: NormSpec, dyadic: DyadicSystem, uniform: UniformSystem) -> float:
    if spec.family == "besov":
        return besov_norm(f, spec.s, spec.p, spec.q, dyadic)
    if spec.family == "modulation":
        return modulation_norm(f, spec.s, spec.p, spec.q, uniform)
    if spec.family == "exp_modulation":
        return exp_modulation_norm(f, spec.s, spec.p, spec.q, uniform)
    if spec.family == "lebesgue":
        return lp_norm(f, spec.p)
    raise InvalidParameterError(spec.family)


def trace_norm(
    tr: EvolutionTrace, spec: NormSpec, dyadic: DyadicSystem, uniform: UniformSystem
) -> float:
    """Time-space norm selected by a NormSpec (gamma = inf when unset)."""
    gamma = spec.gamma if spec.gamma is not None else np.inf
    if spec.family == "besov":
        return chemin_lerner_norm(tr, gamma, spec.s, spec.p, spec.q, dyadic, spec.weight)
    if spec.family == "exp_modulation":
        return time_exp_modulation_norm(tr, spec.weight, gamma, spec.p, spec.q, uniform)
    if spec.family == "modulation":
        vals = np.array(
            [modulation_norm(f, spec.s, spec.p, spec.q, uniform) for f in tr.states]
        )
        return _time_norm(vals, tr.times, gamma)
    if spec.family == "lebesgue":
        vals = np.array([lp_norm(f, spec.p) for f in tr.states])
        return _time_norm(vals, tr.times, gamma)
    raise InvalidParameterError(spec.family)


def embedding_constant(grid: Grid, eps: float, metric: str = "l2") -> float:
    """C(eps) = sum_k 2^(-eps |k|) on the active lattice: the explicit constant
    in E^{s+eps}_{p,q} subset E^s_{p,1}."""
    r = _block_k_abs(grid, metric)
    return float(np.sum(np.exp2(-eps * r)))


# -- Gevrey membership ------------------------------------------------------------

_I_POWERS = (1.0 + 0j, 1j, -1.0 + 0j, -1j)


def derivative_multiplier(xi1: np.ndarray, m: int) -> np.ndarray:
    """(i xi)^m as i^m * xi^m; exact-sign arithmetic keeps the table Hermitian
    (complex exponentiation via exp(m log z) would not)."""
    return _I_POWERS[m % 4] * xi1**m


def gevrey_membership(
    f: SpectralField, p: float, max_order: int
) -> dict[str, float]:
    """Least-squares fit of log(||d^m_{x1} f||_p / m!) against a line in m.

    Returns rho_estimate (analyticity-radius scale), M_estimate and the RMS
    linearity residual.  Small residual with positive rho evidences G_{1,p}
    membership; polynomial spectral decay shows up as a large residual.
    """
    grid = f.grid
    if max_order > grid.resolution // 4:
        raise InvalidParameterError(
            f"max_order {max_order} exceeds N/4 = {grid.resolution // 4}"
        )
    if max_order < 2:
        raise InvalidParameterError("max_order must be >= 2 for a two-parameter fit")
    xi1 = grid.xi[0] * np.ones(grid.shape)
    ys = []
    for m in range(max_order + 1):
        deriv = apply_multiplier(f, derivative_multiplier(xi1, m))
        nrm = lp_norm(deriv, p)
        if not np.isfinite(nrm) or (m == 0 and nrm == 0.0):
            from .errors import UnstableError

            raise UnstableError(
                "derivative norms non-finite or zero; field outside the class at this precision"
            )
        ys.append(math.log(nrm) - math.lgamma(m + 1))
    ms = np.arange(max_order + 1, dtype=float)
    ys = np.array(ys)
    slope, intercept = np.polyfit(ms, ys, 1)
    resid = ys - (slope * ms + intercept)
    return {
        "rho_estimate": float(np.exp(-slope)),
        "M_estimate": float(np.exp(intercept)),
        "linearity_residual": float(np.sqrt(np.mean(resid**2))),
    }


# -- reports ------------------------------------------------------------------------


def norm_report(
    value: float,
    spec: NormSpec,
    grid: Grid,
    dyadic: DyadicSystem | None = None,
    uniform: UniformSystem | None = None,
) -> dict:
    """JSON-ready record of a norm evaluation, including the periodic-domain
    header and the truncation range actually used."""
    truncation: dict = {}
    if spec.family == "besov" and dyadic is not None:
        truncation = {"j_min": dyadic.j_min, "j_max": dyadic.j_max}
    elif uniform is not None:
        truncation = {"k_max": uniform.k_half}
    return {
        "family": spec.family,
        "s": spec.s,
        "p": spec.p,
        "q": spec.q,
        "gamma": spec.gamma,
        "weight": {
            "kind": spec.weight.kind,
            "rate": spec.weight.rate,
            "power": spec.weight.power,
            "clamp": spec.weight.clamp,
        },
        "value": value,
        "truncation": truncation,
        "grid": {"n": grid.n_dims, "N": grid.resolution},
        "domain": {"kind": "periodic_torus", "period": grid.period},
    }
