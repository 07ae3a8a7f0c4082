"""Efficient unbiased sparsification of positive vectors."""

from .core import MarginalVector, Scheme, SparseSample, TargetVector, validate_target
from .divergences import KL, CustomSeparable, Divergence, SquaredEuclidean, WeightedSquared
from .estimator import UnbiasedSparsifier
from .exceptions import SparsifyError
from .heavy import HeavyPartition, heavy_threshold, partition
from .plan import SparsificationPlan
from .us_as import UsasPlan, signflip_sparsify, solve_lambda, usas_plan, usas_sample, usas_scheme
from .us_pi import uspi_marginals, uspi_plan, uspi_sample, uspi_scheme

__all__ = [
    "CustomSeparable",
    "Divergence",
    "HeavyPartition",
    "KL",
    "MarginalVector",
    "Scheme",
    "SparseSample",
    "SparsificationPlan",
    "SparsifyError",
    "SquaredEuclidean",
    "TargetVector",
    "UnbiasedSparsifier",
    "UsasPlan",
    "WeightedSquared",
    "heavy_threshold",
    "partition",
    "signflip_sparsify",
    "solve_lambda",
    "usas_plan",
    "usas_sample",
    "usas_scheme",
    "uspi_marginals",
    "uspi_plan",
    "uspi_sample",
    "uspi_scheme",
    "validate_target",
]
