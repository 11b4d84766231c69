"""specdyn: a numerical laboratory for spectral measures and dynamics.

Computes time-averaged quantum return probabilities of atomic spectral
measures in closed form, estimates correlation/generalized dimensions,
pointwise scaling exponents and uniform-Hoelder moduli at declared
finite scales, builds Jacobi-operator spectral measures (free, Sturmian,
limit-periodic approximants), and constructs explicit witness measures
whose return probability oscillates between slow and fast power decay.
"""

from .constructors import (
    OscillationPlan,
    SlowSchedule,
    oscillating_measure,
    realize_oscillation,
    slow_measure,
    smooth_state,
    splice_state,
)
from .dimensions import (
    ScalingEstimate,
    UahReport,
    correlation_integral,
    envelope_slopes,
    generalized_dimension,
    pointwise_exponents,
    uah_modulus,
)
from .dynamics import (
    LogSeries,
    autocorrelation,
    return_probability_avg,
    sample_W,
    wiener_limit,
)
from .errors import NumericalError, ResourceError, SpecdynError, ValidationError
from .measures import (
    AtomicMeasure,
    BallQuery,
    DensityOnInterval,
    ExplicitAtoms,
    Mixture,
    Restricted,
    SelfSimilar,
    cantor_spec,
    mix,
    refine,
    spec_from_dict,
    uniform_spec,
)
from .operators import (
    GOLDEN_ROTATION,
    JacobiOperator,
    LimitPeriodicParams,
    SturmianParams,
    free_operator,
    free_restricted_measure,
    free_spectral_measure,
    limit_periodic_potential,
    spectral_measure,
    sturmian_potential,
)

__version__ = "0.1.0"
