"""Aitchison geometry on strictly positive vectors.

All functions accept array-like input or :class:`Composition` objects and
return plain ``numpy`` arrays (closed to the requested constant) or floats.
Logarithms are natural throughout. Non-positive parts raise ``ValueError``;
there is no zero replacement.

Examples
--------
>>> import numpy as np
>>> closure([2, 2, 4])
array([0.25, 0.25, 0.5 ])
>>> perturb([1, 2, 4], [4, 2, 1])
array([0.33333333, 0.33333333, 0.33333333])
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

REL_TOL = 1e-10


def _as_parts(x, name="x") -> np.ndarray:
    if isinstance(x, Composition):
        return x.values
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < 2:
        raise ValueError(f"{name} needs at least 2 parts, got {arr.size}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        bad = int(np.flatnonzero(~(np.isfinite(arr) & (arr > 0)))[0])
        raise ValueError(f"{name} has a non-positive part at index {bad}: {arr[bad]!r}")
    return arr


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    a = _as_parts(x, "x")
    b = _as_parts(y, "y")
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} != {b.size}")
    return a, b


@dataclass(frozen=True, eq=False)
class Composition:
    """A positive vector standing for its equivalence class under scaling.

    Two compositions compare equal when their closures agree to a relative
    tolerance of ``1e-10``.
    """

    values: np.ndarray
    labels: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        arr = np.array(_as_parts(self.values, "values"), dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != arr.size:
                raise ValueError(f"{len(labels)} labels for {arr.size} parts")
            object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.values.size

    def closed(self, kappa: float = 1.0) -> "Composition":
        return Composition(closure(self.values, kappa), self.labels)

    def __eq__(self, other):
        if not isinstance(other, Composition):
            return NotImplemented
        if len(self) != len(other):
            return False
        return bool(np.allclose(closure(self.values), closure(other.values),
                                rtol=REL_TOL, atol=0.0))

    __hash__ = None


def closure(x, kappa: float = 1.0) -> np.ndarray:
    """Rescale ``x`` so its parts sum to ``kappa``."""
    if not kappa > 0:
        raise ValueError(f"closure constant must be positive, got {kappa!r}")
    arr = _as_parts(x)
    return kappa * arr / arr.sum()


def perturb(x, y) -> np.ndarray:
    """Componentwise product, closed to 1 (the Aitchison "addition")."""
    a, b = _pair(x, y)
    return closure(a * b)


def perturb_inv(x, y) -> np.ndarray:
    """``x`` perturbed by the inverse of ``y``."""
    a, b = _pair(x, y)
    return closure(a / b)


def power(x, alpha: float) -> np.ndarray:
    """Componentwise power ``x**alpha``, closed to 1."""
    arr = _as_parts(x)
    # powering in log space avoids overflow for large |alpha|
    logs = alpha * np.log(arr)
    return closure(np.exp(logs - logs.max()))


def clr(x) -> np.ndarray:
    logs = np.log(_as_parts(x))
    return logs - logs.mean()


def aitchison_inner(x, y) -> float:
    r"""Aitchison inner product.

    Evaluated through centred log-ratios, which equals the double sum
    :math:`\frac{1}{2D}\sum_i\sum_j \ln\frac{x_i}{x_j}\ln\frac{y_i}{y_j}`.
    """
    a, b = _pair(x, y)
    return float(np.dot(clr(a), clr(b)))


def aitchison_norm(x) -> float:
    return float(np.sqrt(max(aitchison_inner(x, x), 0.0)))


def aitchison_dist(x, y) -> float:
    a, b = _pair(x, y)
    return float(np.linalg.norm(clr(a) - clr(b)))


def geometric_mean(values: Sequence[float]) -> float:
    """``exp`` of the mean of logs; all values must be positive."""
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("geometric mean of an empty list")
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError("geometric mean needs strictly positive values")
    return float(np.exp(np.log(arr).mean()))
