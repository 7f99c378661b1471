"""Orthonormal log-ratio coordinates for k-factorial compositions.

Every factor contributes its partition steps lifted to the full cube
(:func:`lift_factor_vector`); each such vector is constant over the levels
of the other factors. Interactions between a subset of factors use the
normalized entrywise product of one lifted vector per member
(:func:`hadamard_normalized`). The rows are ordered by subset size, then
factor order, then step indices, and their count is ``D - 1`` where ``D`` is
the number of cells.

Coordinates are ``z = V @ log(vec(x))``. Each row is proportional to a
"mean contrast" pattern whose inner product with ``log(vec(x))`` is a plain
log-ratio of geometric means (a balance) or a log-odds ratio; the
proportionality constant is stored as ``ContrastMatrix.prefactors`` and
dividing by it gives the unnormalized coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Sequence

import numpy as np

from compcube.composition import closure
from compcube.cube import CubeError, KCube, subset_label
from compcube.sbp import FactorSpec, SbpStep, balance_coefficients


@dataclass(frozen=True, order=True)
class CoordinateKey:
    """Factor subset (as axis indices) and one 1-based step index per member."""

    axes: tuple[int, ...]
    steps: tuple[int, ...]

    def __post_init__(self):
        if not self.axes or len(self.axes) != len(self.steps):
            raise ValueError(f"malformed coordinate key {self.axes!r}/{self.steps!r}")

    def label(self, factors: Sequence[FactorSpec]) -> str:
        for a, s in zip(self.axes, self.steps):
            if not 1 <= s < factors[a].size:
                raise ValueError(f"step {s} out of range for factor {factors[a].name!r}")
        return f"{subset_label(factors, self.axes)}:{','.join(map(str, self.steps))}"


def _check_factors(factors) -> tuple[FactorSpec, ...]:
    factors = tuple(factors)
    if len(factors) < 2:
        raise ValueError(f"need at least 2 factors, got {len(factors)}")
    return factors


def _step(spec: FactorSpec, step) -> SbpStep:
    if isinstance(step, SbpStep):
        return step
    return spec.steps[int(step) - 1]


def _broadcast(values: np.ndarray, axis: int, shape: tuple[int, ...]) -> np.ndarray:
    view = [1] * len(shape)
    view[axis] = shape[axis]
    return np.broadcast_to(values.reshape(view), shape).ravel()


def lift_factor_vector(factors: Sequence[FactorSpec], axis: int, step) -> np.ndarray:
    """Balance coefficients of one factor's step, spread over the whole cube.

    ``step`` is an :class:`SbpStep` or its 1-based index.
    """
    factors = tuple(factors)
    shape = tuple(f.size for f in factors)
    spec = factors[axis]
    others = int(np.prod(shape)) // spec.size
    coef = balance_coefficients(_step(spec, step), spec.levels) / np.sqrt(others)
    return _broadcast(coef, axis, shape)


def hadamard_normalized(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Entrywise product rescaled to unit Euclidean norm."""
    vectors = [np.asarray(v, dtype=float) for v in vectors]
    if not vectors:
        raise ValueError("no vectors given")
    if any(v.shape != vectors[0].shape for v in vectors):
        raise ValueError("vectors differ in length")
    prod = np.prod(vectors, axis=0)
    norm = np.linalg.norm(prod)
    if norm == 0:
        raise ValueError("entrywise product is identically zero")
    return prod / norm


def _mean_contrast(factors, key: CoordinateKey) -> np.ndarray:
    # +1/p on plus levels, -1/q on minus levels, per factor; averaged over the rest
    shape = tuple(f.size for f in factors)
    out = np.ones(int(np.prod(shape)))
    for a, s in zip(key.axes, key.steps):
        st = factors[a].steps[s - 1]
        w = np.array([1 / st.p if lv in st.plus else -1 / st.q if lv in st.minus else 0.0
                      for lv in factors[a].levels])
        out = out * _broadcast(w, a, shape)
    rest = int(np.prod([shape[a] for a in range(len(shape)) if a not in key.axes]))
    return out / rest


@dataclass(frozen=True, eq=False)
class ContrastMatrix:
    """``(D-1) x D`` orthonormal log-contrast matrix with labelled rows."""

    factors: tuple[FactorSpec, ...]
    keys: tuple[CoordinateKey, ...]
    rows: np.ndarray
    prefactors: np.ndarray

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.size for f in self.factors)

    @property
    def labels(self) -> list[str]:
        return [k.label(self.factors) for k in self.keys]

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows.shape

    def __len__(self):
        return len(self.keys)

    def orthonormality_error(self) -> float:
        """Largest absolute entry of ``V V' - I``."""
        gram = self.rows @ self.rows.T
        return float(np.abs(gram - np.eye(len(self.keys))).max())

    def block(self, axes) -> np.ndarray:
        """Row indices belonging to the factor subset ``axes``."""
        axes = tuple(sorted(axes))
        return np.array([i for i, k in enumerate(self.keys) if k.axes == axes], dtype=int)

    def subsets(self) -> list[tuple[int, ...]]:
        seen = []
        for k in self.keys:
            if k.axes not in seen:
                seen.append(k.axes)
        return seen


def build_contrast_matrix(factors: Sequence[FactorSpec]) -> ContrastMatrix:
    factors = _check_factors(factors)
    k = len(factors)
    lifted = [[lift_factor_vector(factors, a, s) for s in factors[a].steps] for a in range(k)]
    keys, rows, pref = [], [], []
    for size in range(1, k + 1):
        for axes in combinations(range(k), size):
            for steps in product(*[range(1, factors[a].size) for a in axes]):
                key = CoordinateKey(axes, steps)
                vecs = [lifted[a][s - 1] for a, s in zip(axes, steps)]
                rows.append(vecs[0] if size == 1 else hadamard_normalized(vecs))
                keys.append(key)
                pref.append(1.0 / np.linalg.norm(_mean_contrast(factors, key)))
    rows = np.vstack(rows)
    rows.setflags(write=False)
    pref = np.array(pref)
    pref.setflags(write=False)
    return ContrastMatrix(factors, tuple(keys), rows, pref)


def resolve_groups(factors: Sequence[FactorSpec], spec) -> list[tuple[int, ...]]:
    """Turn a group selector into factor-index subsets.

    Accepts a subset label (``"rc"``), a factor name or symbol, ``"ind"``
    (all single factors), ``"int"`` (all subsets of two or more), or an
    iterable of factor names/symbols/indices naming one subset.
    """
    factors = tuple(factors)
    k = len(factors)
    all_subsets = [c for size in range(1, k + 1) for c in combinations(range(k), size)]
    if isinstance(spec, str):
        if spec == "ind":
            return [(a,) for a in range(k)]
        if spec == "int":
            return [s for s in all_subsets if len(s) > 1]
        for s in all_subsets:
            if subset_label(factors, s) == spec:
                return [s]
        for a, f in enumerate(factors):
            if spec in (f.name, f.symbol):
                return [(a,)]
        raise ValueError(f"unknown coordinate group {spec!r}")
    axes = []
    for item in spec:
        if isinstance(item, (int, np.integer)):
            if not 0 <= item < k:
                raise ValueError(f"factor index {item} out of range")
            axes.append(int(item))
            continue
        matches = [a for a, f in enumerate(factors) if item in (f.name, f.symbol)]
        if not matches:
            raise ValueError(f"unknown factor {item!r}")
        axes.append(matches[0])
    if not axes or len(set(axes)) != len(axes):
        raise ValueError(f"invalid factor subset {spec!r}")
    return [tuple(sorted(axes))]


@dataclass(frozen=True, eq=False)
class CoordinateSet:
    """Coordinate values keyed like the rows of the contrast matrix."""

    values: np.ndarray
    keys: tuple[CoordinateKey, ...]
    factors: tuple[FactorSpec, ...]
    normalized: bool = True
    obs_id: str | None = None

    @property
    def labels(self) -> list[str]:
        return [k.label(self.factors) for k in self.keys]

    def __len__(self):
        return len(self.keys)

    def __getitem__(self, label: str) -> float:
        try:
            return float(self.values[self.labels.index(label)])
        except ValueError:
            raise KeyError(label) from None

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.labels, map(float, self.values)))


def _check_design(cube: KCube, V: ContrastMatrix) -> None:
    if cube.shape != V.dims:
        raise CubeError(f"cube dims {cube.shape} do not match contrast matrix dims {V.dims}")
    for f, g in zip(cube.factors, V.factors):
        if f.levels != g.levels:
            raise CubeError(f"factor {f.name!r} levels {f.levels} differ from {g.levels}")


def coords(cube: KCube, V: ContrastMatrix, normalized: bool = True) -> CoordinateSet:
    """Coordinates ``V @ log(vec(cube))``; ``normalized=False`` divides each
    value by its row prefactor, giving raw mean log-ratios / log-odds ratios.
    """
    _check_design(cube, V)
    z = V.rows @ np.log(cube.vec())
    if not normalized:
        z = z / V.prefactors
    return CoordinateSet(z, V.keys, V.factors, normalized, cube.obs_id)


def inverse(z: CoordinateSet, V: ContrastMatrix, kappa: float = 1.0) -> KCube:
    """Cube (closed to ``kappa``) whose coordinates are ``z``."""
    if not z.normalized:
        raise ValueError("inverse needs normalized coordinates")
    if tuple(z.keys) != tuple(V.keys):
        raise ValueError(f"incomplete or misaligned coordinate set: {len(z)} of {len(V)} keys")
    logs = V.rows.T @ np.asarray(z.values, dtype=float)
    cells = closure(np.exp(logs - logs.max()), kappa)
    return KCube(V.factors, cells, z.obs_id)


def group_coordinates(z: CoordinateSet, subset) -> CoordinateSet:
    """Keep the coordinates of the selected group(s), zero elsewhere."""
    wanted = set(resolve_groups(z.factors, subset))
    mask = np.array([k.axes in wanted for k in z.keys])
    return CoordinateSet(np.where(mask, z.values, 0.0), z.keys, z.factors,
                         z.normalized, z.obs_id)


def transform_logcontrasts(T, V: ContrastMatrix, z: CoordinateSet) -> np.ndarray:
    """Re-express coordinates in another system of log-contrasts, ``T V' z``.

    Every row of ``T`` holds coefficients of the logged cells and must sum to
    zero.
    """
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if T.shape[1] != V.rows.shape[1]:
        raise ValueError(f"T has {T.shape[1]} columns, the cube has {V.rows.shape[1]} cells")
    sums = np.abs(T.sum(axis=1))
    if np.any(sums > 1e-10):
        row = int(np.argmax(sums > 1e-10))
        raise ValueError(f"row {row + 1} of T sums to {T[row].sum():.3g}, not zero")
    if not z.normalized:
        raise ValueError("transform needs normalized coordinates")
    return T @ (V.rows.T @ np.asarray(z.values, dtype=float))
