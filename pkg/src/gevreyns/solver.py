"""Mild-solution machinery: Picard fixed-point iteration on a whole interval
with contraction diagnostics, a stepwise exponential integrator for longer
runs, smallness checks and the blow-up (continuation) functional.

The mild map iterated here is

    u_{m+1}(t) = U_2a(t) u0 - A_2a [P div(u_m (x) u_m)](t).

The transport term enters with a minus sign, as dictated by the differential
form u_t + (-Delta)^a u + P div(u (x) u) = 0; every norm-based estimate is
insensitive to the sign.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .decomposition import DyadicSystem, UniformSystem
from .errors import (
    CoverageError,
    InvalidParameterError,
    SmallnessError,
    UnstableError,
)
from .norms import (
    EvolutionTrace,
    NormSpec,
    WeightSpec,
    besov_norm,
    modulation_norm,
    snapshot_norm,
    trace_norm,
)
from .semigroup import (
    apply_semigroup,
    duhamel_step,
    duhamel_trace,
    symbol,
    validate_alpha,
)
from .spectral import (
    Grid,
    SpectralField,
    fractional_laplacian,
    lp_norm,
    nonlinear_term,
    parseval_l2,
    save_field,
)

MODULATION_RATE = 2.0**-10  # Gevrey rate of the alpha=1 modulation scheme
HALF_ALPHA_RATE = 2.0**-5  # rate of the alpha=1/2 scheme, s(t) = 2^-5 (1 and t)


def theorem_metric(
    alpha: float, n: int, p: float = 2.0, q: float = 1.0, epsilon: float = 0.1
) -> list[NormSpec]:
    """The contraction metric used by the well-posedness theorem at this alpha:
    a pair of weighted Chemin-Lerner Besov norms for alpha = 1, the
    gamma_+/gamma_- pair for alpha in (1/2, 1), and the L~infty critical-Besov
    metric for alpha = 1/2.  The distance is the max of the listed norms."""
    validate_alpha(alpha)
    if alpha == 1.0:
        w = WeightSpec("exp_sqrt_t_lambda", rate=1.0)
        return [
            NormSpec("besov", s=n / p - 1.0 / 3.0, p=p, q=q, gamma=3.0, weight=w),
            NormSpec("besov", s=n / p + 1.0 / 3.0, p=p, q=q, gamma=1.5, weight=w),
        ]
    if alpha == 0.5:
        return [NormSpec("besov", s=n / p, p=p, q=1.0, gamma=np.inf)]
    g_plus = 2.0 * alpha / (2.0 * alpha - 1.0 + epsilon)
    g_minus = 2.0 * alpha / (2.0 * alpha - 1.0 - epsilon)
    w = WeightSpec("exp_power_t_lambda", rate=1.0, power=1.0 / (2.0 * alpha))
    return [
        NormSpec("besov", s=n / p + epsilon, p=p, q=q, gamma=g_plus, weight=w),
        NormSpec("besov", s=n / p - epsilon, p=p, q=q, gamma=g_minus, weight=w),
    ]


def modulation_metric(gamma: float = 2.0, p: float = 2.0, rate: float = MODULATION_RATE) -> list[NormSpec]:
    """L~gamma E^{ct}_{p,1} metric of the modulation-space scheme."""
    return [
        NormSpec(
            "exp_modulation",
            s=0.0,
            p=p,
            q=1.0,
            gamma=gamma,
            weight=WeightSpec("exp_modulation_rate", rate=rate),
        )
    ]


def critical_norm_spec(alpha: float, n: int, p: float = 2.0, q: float = 1.0) -> NormSpec:
    """The scaling-critical Besov index n/p - 2 alpha + 1."""
    return NormSpec("besov", s=n / p - 2.0 * alpha + 1.0, p=p, q=q)


@dataclass
class SolverConfig:
    alpha: float = 1.0
    T: float = 0.5
    dt: float = 1e-3
    n_picard: int = 6
    picard_time_samples: int = 65
    smallness_space: NormSpec | None = None
    delta: float = 1.0
    weight: WeightSpec = field(default_factory=WeightSpec)
    gns_epsilon: float = 0.1
    continuation_norms: list[NormSpec] | None = None
    metric_norms: list[NormSpec] | None = None
    nonlinearity: bool = True
    allow_large_data: bool = False
    save_every: int = 1
    time_grid_kind: str = "geometric"  # or "uniform"
    diagnostics_norms: list[NormSpec] = field(default_factory=list)
    calibration: dict | None = None

    def __post_init__(self):
        validate_alpha(self.alpha)
        if self.dt <= 0:
            raise InvalidParameterError("dt must be positive")
        if self.n_picard < 2:
            raise InvalidParameterError("n_picard must be >= 2")
        if self.delta <= 0:
            raise InvalidParameterError("delta must be positive")
        if not (0.0 < self.gns_epsilon < 0.25):
            raise InvalidParameterError("gns_epsilon must lie in (0, 1/4)")

    def resolved_metric(self, n: int) -> list[NormSpec]:
        if self.metric_norms is not None:
            return self.metric_norms
        return theorem_metric(self.alpha, n, epsilon=self.gns_epsilon)

    def resolved_smallness(self, n: int) -> NormSpec:
        if self.smallness_space is not None:
            return self.smallness_space
        return critical_norm_spec(self.alpha, n)


@dataclass
class PicardReport:
    iterate_distances: list[float]
    contraction_ratios: list[float]
    converged: bool
    final_trace: EvolutionTrace
    diverged: bool = False
    metric_labels: list[str] = field(default_factory=list)


def picard_time_grid(T: float, n: int, kind: str = "geometric") -> np.ndarray:
    """Sample grid on [0, T]; geometric refinement near 0 resolves the
    exp(sqrt(t) Lambda)-type weights, which vary fastest there."""
    if n < 2:
        raise InvalidParameterError("need at least two time samples")
    if kind == "uniform":
        return np.linspace(0.0, T, n)
    t_min = T * 1e-4
    return np.concatenate([[0.0], np.geomspace(t_min, T, n - 1)])


def _trace_distance(
    a: EvolutionTrace,
    b: EvolutionTrace,
    metric: list[NormSpec],
    dyadic: DyadicSystem,
    uniform: UniformSystem,
) -> float:
    diff = a - b
    return max(trace_norm(diff, spec, dyadic, uniform) for spec in metric)


def _semigroup_trace(u0: SpectralField, times: np.ndarray, alpha: float) -> EvolutionTrace:
    return EvolutionTrace(
        times, [apply_semigroup(u0, float(t), alpha) for t in times]
    )


def _forcing_trace(tr: EvolutionTrace, sign: float = -1.0) -> EvolutionTrace:
    return EvolutionTrace(
        tr.times, [sign * nonlinear_term(u) for u in tr.states]
    )


def picard_solve(
    u0: SpectralField,
    cfg: SolverConfig,
    interval=None,
    initial_trace: EvolutionTrace | None = None,
) -> PicardReport:
    """Iterate the mild map on a fixed sample grid, reporting distances and
    contraction ratios in the configured metric.

    The starting guess is the linear flow U(t) u0 unless initial_trace is
    given.  Divergence (three consecutive growing distances) is reported, not
    raised.
    """
    grid = u0.grid
    _enforce_smallness(u0, cfg)
    metric = cfg.resolved_metric(grid.n_dims)
    dyadic = DyadicSystem(grid)
    uniform = UniformSystem(grid)
    t0, t1 = (0.0, cfg.T) if interval is None else interval
    times = t0 + picard_time_grid(t1 - t0, cfg.picard_time_samples, cfg.time_grid_kind)
    local = times - t0
    linear = EvolutionTrace(
        times, [apply_semigroup(u0, float(t), cfg.alpha) for t in local]
    )
    if initial_trace is not None:
        if len(initial_trace) != len(times) or not np.allclose(initial_trace.times, times):
            raise InvalidParameterError(
                "initial_trace must live on the solver's sample grid"
            )
        current = initial_trace
    else:
        current = linear
    distances: list[float] = []
    scale0 = max(trace_norm(linear, spec, dyadic, uniform) for spec in metric)
    diverged = False
    for _ in range(cfg.n_picard):
        if cfg.nonlinearity:
            forcing = _forcing_trace(current)
            forcing = EvolutionTrace(local, forcing.states)
            correction = duhamel_trace(forcing, cfg.alpha)
            nxt = EvolutionTrace(
                times, [a + b for a, b in zip(linear.states, correction.states)]
            )
        else:
            nxt = linear
        if not all(np.all(np.isfinite(s.coeffs)) for s in nxt.states):
            raise UnstableError("Picard iterate produced non-finite coefficients")
        d = _trace_distance(current, nxt, metric, dyadic, uniform)
        distances.append(d)
        current = nxt
        if len(distances) >= 4 and all(
            distances[-i] > distances[-i - 1] for i in (1, 2, 3)
        ):
            diverged = True
            break
        if d <= 1e-15 * max(scale0, 1e-300):
            break
    ratios = [
        (distances[i] / distances[i - 1]) if distances[i - 1] > 0 else 0.0
        for i in range(1, len(distances))
    ]
    # converged: the iteration is contracting, or it already sits at the
    # roundoff floor of the exponentially weighted metric
    converged = (not diverged) and (
        all(d == 0.0 for d in distances)
        or (len(ratios) > 0 and ratios[-1] < 1.0)
        or distances[-1] <= 1e-6 * max(scale0, 1e-300)
    )
    return PicardReport(
        iterate_distances=distances,
        contraction_ratios=ratios,
        converged=converged,
        final_trace=current,
        diverged=diverged,
        metric_labels=[m.describe() for m in metric],
    )


def extension_schedule(
    u0: SpectralField, cfg: SolverConfig, breakpoints: list[float]
) -> list[PicardReport]:
    """Step-by-step extension: restart the Picard solve on [t_m, t_{m+1}],
    each interval with ball radius delta_m satisfying C 2^(8c) delta_m <= 1/4
    (the calibrated map constant when available, C = 1 otherwise)."""
    if breakpoints[0] != 0.0:
        raise InvalidParameterError("extension schedule must start at t = 0")
    c = MODULATION_RATE
    c_map = 1.0
    if cfg.calibration is not None:
        c_map = float(cfg.calibration.get("C_map", 1.0))
    delta_m = 0.25 / (c_map * 2.0 ** (8.0 * c))
    reports = []
    state = u0
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        local_cfg = replace(cfg, delta=delta_m, allow_large_data=True)
        rep = picard_solve(state, local_cfg, interval=(a, b))
        reports.append(rep)
        state = rep.final_trace.states[-1]
    return reports


# -- stepping integrator ----------------------------------------------------------------


def step_solve(
    u0: SpectralField, cfg: SolverConfig, save_times=None
) -> EvolutionTrace:
    """ETD2 predictor-corrector: over each step the linear flow is exact and
    the nonlinear forcing is integrated as its linear-in-time interpolant.

    Divergence-free is maintained by construction (the forcing is projected);
    diagnostics (energy, dissipation, configured norms) are recorded at every
    step; states are stored every cfg.save_every steps and at save_times.
    """
    grid = u0.grid
    _enforce_smallness(u0, cfg)
    lam = symbol(grid, cfg.alpha)
    dyadic = DyadicSystem(grid)
    uniform = UniformSystem(grid)
    n_steps = int(round(cfg.T / cfg.dt))
    if abs(n_steps * cfg.dt - cfg.T) > 1e-9 * cfg.T:
        n_steps = int(np.ceil(cfg.T / cfg.dt))
    boundaries = sorted({round(float(t), 12) for t in (save_times or [])})
    for t in boundaries:
        if t < 0 or t > cfg.T + 1e-12:
            raise InvalidParameterError(f"save time {t} outside [0, {cfg.T}]")

    def rhs(u: SpectralField) -> np.ndarray:
        if not cfg.nonlinearity:
            return np.zeros_like(u.coeffs)
        return -nonlinear_term(u).coeffs

    times = [0.0]
    states = [u0.copy()]
    diag_rows = {
        "t": [0.0],
        "energy": [parseval_l2(u0) ** 2],
        "dissipation": [_dissipation(u0, cfg.alpha)],
    }
    for spec in cfg.diagnostics_norms:
        diag_rows[spec.describe()] = [snapshot_norm(u0, spec, dyadic, uniform)]

    u = u0.copy()
    t = 0.0
    step_edges = _step_edges(cfg.T, cfg.dt, boundaries)
    warned = False
    for i, t_next in enumerate(step_edges):
        h = t_next - t
        f0 = rhs(u)
        eh = np.exp(-h * lam)
        if cfg.nonlinearity:
            # predictor (ETD1), then corrector with the two-point weights
            from .semigroup import _etd_weights

            w_a, w_b = _etd_weights(h * lam)
            pred = SpectralField(grid, eh * u.coeffs + h * (w_a + w_b) * f0)
            f1 = rhs(pred)
            new = eh * u.coeffs + h * (w_a * f0 + w_b * f1)
        else:
            new = eh * u.coeffs
        if not np.all(np.isfinite(new)):
            raise UnstableError(f"non-finite state at t = {t_next:g}")
        u = SpectralField(grid, new, divergence_free=True)
        t = t_next
        if cfg.nonlinearity and not warned:
            umax = lp_norm(u, np.inf)
            if umax * cfg.dt * grid.resolution > 0.5:
                warnings.warn(
                    f"CFL guard: ||u||_inf dt N = {umax * cfg.dt * grid.resolution:.3g} > 0.5",
                    RuntimeWarning,
                    stacklevel=2,
                )
                warned = True
        diag_rows["t"].append(t)
        diag_rows["energy"].append(parseval_l2(u) ** 2)
        diag_rows["dissipation"].append(_dissipation(u, cfg.alpha))
        for spec in cfg.diagnostics_norms:
            diag_rows[spec.describe()].append(snapshot_norm(u, spec, dyadic, uniform))
        on_boundary = any(abs(t - b) <= 1e-12 for b in boundaries)
        if (i + 1) % cfg.save_every == 0 or on_boundary or i == len(step_edges) - 1:
            times.append(t)
            states.append(u.copy())

    keep = np.concatenate([[True], np.diff(times) > 0])
    trace = EvolutionTrace(
        np.array(times)[keep], [s for s, k in zip(states, keep) if k]
    )
    trace.diagnostics = {k: np.array(v) for k, v in diag_rows.items()}
    return trace


def _step_edges(T: float, dt: float, boundaries) -> list[float]:
    """Step endpoints: uniform dt, shrunk locally so every boundary is hit."""
    edges = []
    t = 0.0
    pending = [b for b in boundaries if b > 1e-15]
    while t < T - 1e-12:
        t_next = min(t + dt, T)
        while pending and pending[0] <= t_next + 1e-12:
            b = pending.pop(0)
            if b > t + 1e-12:
                edges.append(b)
                t = b
            t_next = min(t + dt, T)
        if t_next > t + 1e-12:
            edges.append(t_next)
            t = t_next
    return edges


def _dissipation(u: SpectralField, alpha: float) -> float:
    return parseval_l2(fractional_laplacian(u, alpha / 2.0)) ** 2


def _simpson(y: np.ndarray, t: np.ndarray) -> float:
    """Composite Simpson on a (mostly) uniform grid, trapezoid fallback for a
    leftover interval; the dissipation integrand is too stiff for trapezoid."""
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    if len(t) < 3:
        return float(np.trapezoid(y, t))
    h = np.diff(t)
    total = 0.0
    i = 0
    while i + 2 < len(t) + 1 and i + 2 <= len(t) - 1:
        if abs(h[i] - h[i + 1]) < 1e-9 * max(h[i], h[i + 1]):
            total += (h[i] / 3.0) * (y[i] + 4.0 * y[i + 1] + y[i + 2])
            i += 2
        else:
            total += 0.5 * h[i] * (y[i] + y[i + 1])
            i += 1
    while i < len(t) - 1:
        total += 0.5 * h[i] * (y[i] + y[i + 1])
        i += 1
    return float(total)


def energy_balance_defect(trace: EvolutionTrace, alpha: float) -> float:
    """Relative defect of ||u(T)||_2^2 + 2 int ||(-Delta)^(a/2) u||_2^2
    - ||u0||_2^2 computed from the per-step diagnostics."""
    d = trace.diagnostics
    if "energy" not in d:
        raise InvalidParameterError("trace has no energy diagnostics")
    e = np.asarray(d["energy"])
    t = np.asarray(d["t"])
    dis = np.asarray(d["dissipation"])
    lhs = e[-1] + 2.0 * _simpson(dis, t)
    return float(abs(lhs - e[0]) / e[0])


# -- smallness and continuation ------------------------------------------------------------


def smallness_check(
    u0: SpectralField, cfg: SolverConfig, calibration: dict | None = None
) -> dict:
    """Critical-norm smallness test: passes when the configured norm of u0 is
    below delta / (4 C_emp), C_emp taken from the calibration record
    (C_lin * C_map; 1.0 when uncalibrated)."""
    grid = u0.grid
    spec = cfg.resolved_smallness(grid.n_dims)
    dyadic = DyadicSystem(grid)
    uniform = UniformSystem(grid)
    value = snapshot_norm(u0, spec, dyadic, uniform)
    record = calibration if calibration is not None else cfg.calibration
    c_emp = float(record["C_emp"]) if record else 1.0
    threshold = cfg.delta / (4.0 * c_emp)
    return {"norm": value, "threshold": threshold, "pass": bool(value <= threshold)}


def _enforce_smallness(u0: SpectralField, cfg: SolverConfig) -> None:
    if cfg.allow_large_data or cfg.calibration is None:
        return
    result = smallness_check(u0, cfg)
    if not result["pass"]:
        raise SmallnessError(
            f"datum norm {result['norm']:.3e} exceeds threshold {result['threshold']:.3e}; "
            "set allow_large_data to solve anyway"
        )


def continuation_functional(tr: EvolutionTrace, cfg: SolverConfig) -> float:
    """Accumulated theorem norm on [0, t_end]; infinite accumulation as
    t_end -> T_max is the blow-up alternative.  Monotone in trace extension."""
    grid = tr.grid
    norms = cfg.continuation_norms
    if norms is None:
        norms = cfg.resolved_metric(grid.n_dims)
    dyadic = DyadicSystem(grid)
    uniform = UniformSystem(grid)
    if len(tr) == 0:
        return 0.0
    if len(tr) == 1:
        return 0.0
    return max(trace_norm(tr, spec, dyadic, uniform) for spec in norms)


# -- scaling symmetry ---------------------------------------------------------------------


def dilate_datum(u0: SpectralField, lam: int, alpha: float) -> SpectralField:
    """u0 -> lam^(2a-1) u0(lam .): coefficient at lam*k becomes
    lam^(2a-1) c_k.  Frequencies pushed past the lattice raise."""
    grid = u0.grid
    if lam < 1 or int(lam) != lam:
        raise InvalidParameterError("dilation factor must be a positive integer")
    lam = int(lam)
    active = np.max(np.abs(u0.coeffs), axis=0) > 0
    if np.any(active):
        max_freq = float(np.max(grid.xi_linf[active])) / grid.scale
        if lam * max_freq >= grid.resolution // 2:
            raise InvalidParameterError(
                f"dilated frequency {lam * max_freq:g} exceeds the lattice bound N/2"
            )
    out = np.zeros_like(u0.coeffs)
    idx = np.argwhere(active)
    half = grid.resolution
    for flat in idx:
        k = tuple(int(v) for v in flat)
        k_int = tuple(v if v < half // 2 else v - half for v in k)
        target = tuple((lam * v) % half for v in k_int)
        out[(slice(None),) + target] = u0.coeffs[(slice(None),) + k] * lam ** (
            2.0 * alpha - 1.0
        )
    return SpectralField(grid, out, divergence_free=u0.divergence_free)


def scaling_symmetry_check(
    u0: SpectralField, lam: int, cfg: SolverConfig
) -> float:
    """Relative L^2 discrepancy at the final common time between the solve from
    the dilated datum and the dilation of the solve from u0."""
    alpha = cfg.alpha
    v0 = dilate_datum(u0, lam, alpha)
    tau = float(lam) ** (2.0 * alpha)
    base_cfg = replace(cfg, allow_large_data=True, save_every=10**9)
    run_u = step_solve(u0, base_cfg)
    scaled_cfg = replace(
        cfg, T=cfg.T / tau, dt=cfg.dt / tau, allow_large_data=True, save_every=10**9
    )
    run_v = step_solve(v0, scaled_cfg)
    u_T = run_u.states[-1]
    v_T = run_v.states[-1]
    grid = u0.grid
    half = grid.resolution
    # embed lam-dilated u(T) on the common lattice, dropping nothing silently:
    diff = v_T.coeffs.copy()
    norm_sq = float(np.sum(np.abs(v_T.coeffs) ** 2))
    factor = float(lam) ** (2.0 * alpha - 1.0)
    active = np.argwhere(np.max(np.abs(u_T.coeffs), axis=0) > 0)
    overflow_sq = 0.0
    for flat in active:
        k = tuple(int(v) for v in flat)
        k_int = tuple(v if v < half // 2 else v - half for v in k)
        target_int = tuple(int(lam) * v for v in k_int)
        c = u_T.coeffs[(slice(None),) + k] * factor
        if any(abs(v) >= half // 2 for v in target_int):
            overflow_sq += float(np.sum(np.abs(c) ** 2))
            continue
        target = tuple(v % half for v in target_int)
        diff[(slice(None),) + target] -= c
    num = np.sqrt(float(np.sum(np.abs(diff) ** 2)) + overflow_sq)
    return float(num / np.sqrt(norm_sq))


# -- persistence ---------------------------------------------------------------------------


def save_solve(
    directory: str | Path, cfg: SolverConfig, trace: EvolutionTrace, cli_extra=None
) -> list[Path]:
    """Persist a solve: config.json, per-time snapshots, and diagnostics.csv
    with the fixed columns t, energy, each configured norm, gevrey_norm,
    continuation_functional (evaluated at the saved states)."""
    from .reporting import write_csv, config_to_dict

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    cfg_path = directory / "config.json"
    payload = config_to_dict(cfg)
    if cli_extra:
        payload.update(cli_extra)
    cfg_path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    written.append(cfg_path)
    for i, (t, state) in enumerate(zip(trace.times, trace.states)):
        jp, bp = save_field(state, directory / f"state_{i:06d}")
        written.extend([jp, bp])
    grid = trace.grid
    dyadic = DyadicSystem(grid)
    uniform = UniformSystem(grid)
    norm_labels = [spec.describe() for spec in cfg.diagnostics_norms]
    crit = cfg.resolved_smallness(grid.n_dims)
    rows = []
    for i, (t, state) in enumerate(zip(trace.times, trace.states)):
        row = {"t": float(t), "energy": parseval_l2(state) ** 2}
        for spec, label in zip(cfg.diagnostics_norms, norm_labels):
            row[label] = snapshot_norm(state, spec, dyadic, uniform)
        theta = cfg.weight.theta(float(t)) if cfg.weight.kind != "none" else 0.0
        from .spectral import apply_exp_weight

        weighted = apply_exp_weight(state, theta, metric="l1") if theta else state
        row["gevrey_norm"] = snapshot_norm(weighted, crit, dyadic, uniform)
        prefix = EvolutionTrace(trace.times[: i + 1], trace.states[: i + 1])
        row["continuation_functional"] = continuation_functional(prefix, cfg)
        rows.append(row)
    columns = ["t", "energy"] + norm_labels + ["gevrey_norm", "continuation_functional"]
    csv_path = write_csv(directory / "diagnostics.csv", columns, rows)
    written.append(csv_path)
    return written
