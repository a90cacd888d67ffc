"""Probabilistic comparison of the accuracy of two Lagrange finite elements."""

__version__ = "0.1.0"

from .distribution import (
    BernoulliSequence,
    Partition,
    SizeFamily,
    SuccessDistribution,
    at_least_one,
    at_least_one_structured,
    brute_force_distribution,
    cumulative_at_least,
    exact_distribution,
    family_success_probs,
    tail_bound_none,
)
from .errors import CapacityError, DomainError, FelprobError, MeshParseError
from .fitting import FitResult, fit_constants
from .law import (
    AccuracyLaw,
    ElementPair,
    ErrorConstants,
    accuracy_probability,
    critical_size,
    size_for_probability,
)
from .mesh import (
    LocalAnalysis,
    SimplexMesh,
    SimplexReport,
    diameter,
    local_analysis,
    mesh_size,
    parse_mesh,
    read_mesh,
    regularity_ratio,
)
from .montecarlo import TrialResult, UniformErrorModel, estimate_probability, simulate_family_counts
