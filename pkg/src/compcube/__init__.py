"""Compositional cubes: log-ratio coordinates for k-factorial compositional data.

The package is organised bottom-up:

``composition``
    Aitchison geometry on positive vectors (closure, perturbation, powering,
    inner product, norm, distance, geometric mean).
``sbp``
    Sequential binary partitions: parsing, steps and balance coefficients.
``cube``
    k-dimensional positive arrays, geometric marginals and the orthogonal
    decomposition into independent and interaction parts.
``coordinates``
    Orthonormal contrast matrices built from per-factor partitions, forward
    and inverse coordinate maps, group extraction and log-contrast
    re-expression.
``stats``
    Sample-level statistics on coordinates: means, SDs, percentile bootstrap
    intervals and PCA.
``cli``
    The ``compcube`` command line tool.
"""

from compcube.composition import (
    Composition,
    aitchison_dist,
    aitchison_inner,
    aitchison_norm,
    closure,
    geometric_mean,
    perturb,
    perturb_inv,
    power,
)
from compcube.coordinates import (
    ContrastMatrix,
    CoordinateKey,
    CoordinateSet,
    build_contrast_matrix,
    coords,
    group_coordinates,
    hadamard_normalized,
    inverse,
    lift_factor_vector,
    transform_logcontrasts,
)
from compcube.cube import (
    CubeError,
    DecompositionResult,
    KCube,
    decompose,
    from_long_records,
    full_interactive,
    geo_marginal,
    independence_part,
    interaction_part,
)
from compcube.sbp import (
    FactorSpec,
    Leaf,
    Node,
    SbpError,
    SbpStep,
    balance_coefficients,
    parse_sbp,
    sbp_steps,
    sign_matrix,
    vector_contrast_matrix,
)
from compcube.stats import (
    BootstrapCI,
    CoordinateMatrix,
    PcaResult,
    bootstrap_ci,
    coordinate_matrix,
    mean_sd,
    pca,
)

__version__ = "0.1.0"

__all__ = [
    "BootstrapCI",
    "Composition",
    "ContrastMatrix",
    "CoordinateKey",
    "CoordinateMatrix",
    "CoordinateSet",
    "CubeError",
    "DecompositionResult",
    "FactorSpec",
    "KCube",
    "Leaf",
    "Node",
    "PcaResult",
    "SbpError",
    "SbpStep",
    "aitchison_dist",
    "aitchison_inner",
    "aitchison_norm",
    "balance_coefficients",
    "bootstrap_ci",
    "build_contrast_matrix",
    "closure",
    "coordinate_matrix",
    "coords",
    "decompose",
    "from_long_records",
    "full_interactive",
    "geo_marginal",
    "geometric_mean",
    "group_coordinates",
    "hadamard_normalized",
    "independence_part",
    "interaction_part",
    "inverse",
    "lift_factor_vector",
    "mean_sd",
    "parse_sbp",
    "pca",
    "perturb",
    "perturb_inv",
    "power",
    "sbp_steps",
    "sign_matrix",
    "transform_logcontrasts",
    "vector_contrast_matrix",
]
