"""gevreyns: pseudo-spectral solver and function-space analysis toolkit for the
incompressible Navier-Stokes equation with fractional dissipation on the
periodic torus."""

__version__ = "0.1.0"

from .spectral import (
    Grid,
    PhysicalField,
    SpectralField,
    apply_multiplier,
    apply_exp_weight,
    dealias,
    dealiased_product,
    forward_transform,
    fractional_laplacian,
    inverse_transform,
    leray_project,
    load_field,
    lp_norm,
    nonlinear_term,
    parseval_l2,
    recover_pressure,
    save_field,
)
from .decomposition import (
    DyadicSystem,
    UniformSystem,
    build_dyadic,
    build_uniform,
    dyadic_block,
    low_freq_project,
    paraproduct_split,
    uniform_block,
)
from .norms import (
    EvolutionTrace,
    NormSpec,
    WeightSpec,
    besov_norm,
    chemin_lerner_norm,
    exp_modulation_norm,
    gevrey_membership,
    modulation_norm,
    time_exp_modulation_norm,
)
from .semigroup import (
    PropagatorSpec,
    apply_semigroup,
    block_decay_profile,
    duhamel,
    duhamel_trace,
    weighted_semigroup_norm,
)
from .solver import (
    PicardReport,
    SolverConfig,
    continuation_functional,
    picard_solve,
    scaling_symmetry_check,
    smallness_check,
    step_solve,
    theorem_metric,
)
from .analyticity import (
    RadiusFit,
    gevrey_norm_monitor,
    radius_fit,
    radius_growth_experiment,
)
from .ensembles import init_data, random_div_free, single_mode, taylor_green
from .verification import EnsembleSpec, VerificationReport, calibrate, verify
