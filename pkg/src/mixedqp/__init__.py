"""Numerical laboratory for mixed random-quasiperiodic linear cocycles."""

__version__ = "0.1.0"

from .cocycle import QpCocycle, compose, identity_cocycle, inverse, word_product
from .fiber import (
    Const,
    FiberMap,
    Inverse,
    Product,
    Schrodinger,
    Shear,
    Translate,
    TrigPoly,
    eval_fiber,
    eval_potential,
    sup_distance,
)
from .measures import (
    AtomicMeasure,
    GMetric,
    cocycle_measure,
    convolution_power,
    convolve,
    dirac,
    fourier_coeff,
    g_distance,
    pushforward_freq,
    real_measure,
    sample_atom,
    torus_measure,
    wasserstein1,
    wasserstein1_cocycle,
    wasserstein1_torus,
)
from .torus import FrequencyVector, TorusPoint, character, haar_sample, torus_dist, translate, wrap

__all__ = [
    "__version__",
    "AtomicMeasure",
    "Const",
    "FiberMap",
    "FrequencyVector",
    "GMetric",
    "Inverse",
    "Product",
    "QpCocycle",
    "Schrodinger",
    "Shear",
    "TorusPoint",
    "Translate",
    "TrigPoly",
    "character",
    "cocycle_measure",
    "compose",
    "convolution_power",
    "convolve",
    "dirac",
    "eval_fiber",
    "eval_potential",
    "fourier_coeff",
    "g_distance",
    "haar_sample",
    "identity_cocycle",
    "inverse",
    "pushforward_freq",
    "real_measure",
    "sample_atom",
    "sup_distance",
    "torus_dist",
    "torus_measure",
    "translate",
    "wasserstein1",
    "wasserstein1_cocycle",
    "wasserstein1_torus",
    "word_product",
    "wrap",
]
