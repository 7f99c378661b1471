"""k-factorial compositional arrays and their orthogonal decomposition.

A :class:`KCube` stores its cells as an ``ndarray`` with one axis per
factor. The canonical vectorization is C order, i.e. the last factor varies
fastest: ``(x111, x112, ..., x11K, x121, ..., xIJK)`` for three factors.

The decomposition splits ``ln x`` into the sum of singleton geometric
marginals (the independence part) and one interaction part per factor
subset of size two or more. Interaction parts are built on the log scale
from geometric marginals by inclusion-exclusion over the non-empty subsets
of the interacting factors. For three factors this gives exactly::

    int_rc[i,j,k]  = g(x_ij.) / (g(x_i..) g(x_.j.))
    int_rcs[i,j,k] = x_ijk g(x_i..) g(x_.j.) g(x_..k) / (g(x_ij.) g(x_.jk) g(x_i.k))

and the parts telescope: their cellwise product is the original cube.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from compcube.composition import closure
from compcube.sbp import FactorSpec


class CubeError(ValueError):
    """Invalid cube data: missing, duplicated or non-positive cells."""


def _cell_label(levels: Sequence[str]) -> str:
    return "(" + ", ".join(levels) + ")"


@dataclass(frozen=True, eq=False)
class KCube:
    """Positive k-way array with factor metadata.

    ``data`` may be passed either shaped ``(L1, ..., Lk)`` or flat in
    canonical order.
    """

    factors: tuple[FactorSpec, ...]
    data: np.ndarray
    obs_id: str | None = None

    def __post_init__(self):
        factors = tuple(self.factors)
        if len(factors) < 2:
            raise CubeError(f"a cube needs at least 2 factors, got {len(factors)}")
        names = [f.name for f in factors]
        if len(set(names)) != len(names):
            raise CubeError(f"duplicated factor names: {names}")
        shape = tuple(f.size for f in factors)
        arr = np.array(self.data, dtype=float)
        if arr.size != int(np.prod(shape)):
            raise CubeError(f"data has {arr.size} cells, factors need {int(np.prod(shape))}")
        arr = arr.reshape(shape)
        bad = ~(np.isfinite(arr) & (arr > 0))
        if bad.any():
            idx = np.argwhere(bad)[0]
            lv = [factors[a].levels[i] for a, i in enumerate(idx)]
            raise CubeError(f"non-positive value {arr[tuple(idx)]!r} in cell {_cell_label(lv)}")
        arr.setflags(write=False)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def k(self) -> int:
        return len(self.factors)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    def vec(self) -> np.ndarray:
        return self.data.ravel()

    def closed(self, kappa: float = 1.0) -> "KCube":
        return self.with_data(closure(self.vec(), kappa).reshape(self.shape))

    def with_data(self, data) -> "KCube":
        return KCube(self.factors, data, self.obs_id)

    def cells(self):
        """Yield ``(level tuple, value)`` in canonical order."""
        for idx in np.ndindex(*self.shape):
            yield tuple(f.levels[i] for f, i in zip(self.factors, idx)), float(self.data[idx])

    def axis(self, factor) -> int:
        if isinstance(factor, (int, np.integer)):
            if not 0 <= factor < self.k:
                raise CubeError(f"factor index {factor} out of range")
            return int(factor)
        for a, f in enumerate(self.factors):
            if factor in (f.name, f.symbol):
                return a
        raise CubeError(f"unknown factor {factor!r}")

    def same_design(self, other: "KCube") -> bool:
        return self.factors == other.factors


def from_long_records(records: Iterable, factors: Sequence[FactorSpec], obs_id=None) -> KCube:
    """Assemble a cube from one ``(levels, value)`` record per cell.

    ``levels`` is either a mapping from factor name to level, or a sequence
    of levels in factor order.
    """
    factors = tuple(factors)
    shape = tuple(f.size for f in factors)
    index = [{lv: i for i, lv in enumerate(f.levels)} for f in factors]
    data = np.full(shape, np.nan)
    seen = np.zeros(shape, dtype=bool)
    for levels, value in records:
        if isinstance(levels, Mapping):
            try:
                levels = [levels[f.name] for f in factors]
            except KeyError as exc:
                raise CubeError(f"record lacks factor {exc.args[0]!r}") from None
        levels = [str(lv) for lv in levels]
        if len(levels) != len(factors):
            raise CubeError(f"record has {len(levels)} levels for {len(factors)} factors")
        try:
            idx = tuple(ix[lv] for ix, lv in zip(index, levels))
        except KeyError as exc:
            f = next(f for f, lv in zip(factors, levels) if lv not in f.levels)
            raise CubeError(f"unknown level {exc.args[0]!r} of factor {f.name!r} "
                            f"in cell {_cell_label(levels)}") from None
        if seen[idx]:
            raise CubeError(f"duplicate cell {_cell_label(levels)}")
        value = float(value)
        if not (np.isfinite(value) and value > 0):
            raise CubeError(f"non-positive value {value!r} in cell {_cell_label(levels)}")
        seen[idx] = True
        data[idx] = value
    if not seen.all():
        idx = np.argwhere(~seen)[0]
        lv = [factors[a].levels[i] for a, i in enumerate(idx)]
        raise CubeError(f"missing cell {_cell_label(lv)} ({int((~seen).sum())} missing in total)")
    return KCube(factors, data, obs_id)


def _log_marginal(logs: np.ndarray, keep_axes) -> np.ndarray:
    drop = tuple(a for a in range(logs.ndim) if a not in keep_axes)
    return logs.mean(axis=drop, keepdims=True) if drop else logs


def geo_marginal(cube: KCube, keep=()) -> np.ndarray:
    """Geometric means over all cells sharing the levels of the kept factors.

    The result has one axis per kept factor, in the cube's factor order; an
    empty ``keep`` gives the overall geometric mean as a 0-d array.
    """
    axes = sorted({cube.axis(f) for f in keep})
    logs = _log_marginal(np.log(cube.data), axes)
    return np.exp(logs).reshape([cube.shape[a] for a in axes])


def _subset_axes(cube: KCube, subset) -> tuple[int, ...]:
    axes = tuple(sorted({cube.axis(f) for f in subset}))
    if len(axes) != len(list(subset)):
        raise CubeError(f"repeated factor in {list(subset)!r}")
    return axes


def _log_interaction(logs: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    # inclusion-exclusion over non-empty T subset of axes; the empty T term is a
    # constant, dropping it keeps the decomposition exactly telescoping
    out = np.zeros_like(logs)
    for size in range(1, len(axes) + 1):
        sign = (-1) ** (len(axes) - size)
        for t in combinations(axes, size):
            out = out + sign * _log_marginal(logs, t)
    return out


def independence_part(cube: KCube) -> KCube:
    """Product of the single-factor geometric marginals."""
    logs = np.log(cube.data)
    out = np.zeros_like(logs)
    for a in range(cube.k):
        out = out + _log_marginal(logs, (a,))
    return cube.with_data(np.exp(out))


def full_interactive(cube: KCube) -> KCube:
    """``cube`` perturbed by the inverse of its independence part (unclosed)."""
    logs = np.log(cube.data)
    ind = np.log(independence_part(cube).data)
    return cube.with_data(np.exp(logs - ind))


def interaction_part(cube: KCube, subset) -> KCube:
    """Interaction cube of a factor subset with at least two members (unclosed)."""
    axes = _subset_axes(cube, subset)
    if len(axes) < 2:
        raise CubeError(f"an interaction needs at least 2 factors, got {list(subset)!r}")
    return cube.with_data(np.exp(_log_interaction(np.log(cube.data), axes)))


def subset_label(factors: Sequence[FactorSpec], axes: Sequence[int]) -> str:
    symbols = [factors[a].symbol for a in axes]
    sep = "" if all(len(s) == 1 for s in (f.symbol for f in factors)) else "*"
    return sep.join(symbols)


def interaction_subsets(k: int) -> list[tuple[int, ...]]:
    """Factor-index subsets of size >= 2, by size then factor order."""
    return [c for size in range(2, k + 1) for c in combinations(range(k), size)]


@dataclass(frozen=True)
class DecompositionResult:
    """Independence part plus one interaction cube per factor subset.

    ``parts`` maps a label (``"ind"``, ``"rc"``, ``"rcs"`` ...) to an
    unclosed :class:`KCube`; ``subsets`` maps the same labels to factor
    indices (the independence part maps to the empty tuple).
    """

    cube: KCube
    parts: dict
    subsets: dict

    def __getitem__(self, label) -> KCube:
        return self.parts[label]

    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)

    def labels(self) -> list[str]:
        return list(self.parts)

    def reconstruct(self) -> KCube:
        logs = sum(np.log(p.data) for p in self.parts.values())
        return self.cube.with_data(np.exp(logs))

    def closed(self, kappa: float = 1.0) -> dict:
        return {k: p.closed(kappa) for k, p in self.parts.items()}


def decompose(cube: KCube) -> DecompositionResult:
    logs = np.log(cube.data)
    parts = {"ind": independence_part(cube)}
    subsets = {"ind": ()}
    for axes in interaction_subsets(cube.k):
        label = subset_label(cube.factors, axes)
        parts[label] = cube.with_data(np.exp(_log_interaction(logs, axes)))
        subsets[label] = axes
    return DecompositionResult(cube, parts, subsets)
