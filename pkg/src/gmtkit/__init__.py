"""gmtkit: dyadic Hausdorff content, Frostman measures, density-capped
decompositions, and divergence-equation experiments on atomic measures."""

from .content import (
    ConcentrationProfile,
    ContentResult,
    concentration_profile,
    density_levels,
    density_sup,
    dyadic_content,
)
from .decompose import (
    HahnResult,
    ScheduleStep,
    SeriesDecomposition,
    approx_sequence,
    calibrate_restriction,
    greedy_hahn,
    max_restriction,
    separate_pieces,
    series_decomposition,
)
from .divfield import (
    BumpSpec,
    ChargeReport,
    PerturbationResult,
    charge_test,
    density_profile_plus,
    gauss_flux,
    l1_perturbation,
    mollify_field,
    mollify_measure,
    newtonian_field,
    u_alpha_field,
    weak_div_residual,
)
from .dyadic import Box, DyadicCube, Region, leaf_index
from .fields import GridField, MollifierSpec
from .frostman import FrostmanResult, frostman_construct
from .gauges import PowerGauge, PowerLogGauge, TableGauge, eval_gauge, gauge_ratio
from .measures import (
    AtomicMeasure,
    SignedAtomicMeasure,
    WeightedRestriction,
    tv_distance,
)

__version__ = "0.1.0"
