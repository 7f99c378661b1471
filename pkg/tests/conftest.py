import numpy as np
import pytest

from compcube import FactorSpec, KCube, build_contrast_matrix
from compcube.sbp import Leaf, Node

# Employment in the Czech Republic, 2015 (thousands)
CZECH = {
    ("F", "FT"): (104.756, 1618.415, 317.031),
    ("F", "PT"): (17.128, 90.505, 56.355),
    ("M", "FT"): (169.851, 2127.849, 467.212),
    ("M", "PT"): (11.165, 22.759, 38.208),
}
AGES = ("15-24", "25-54", "55+")

CZECH_COORDS = {
    "r:1": 0.304, "c:1": 4.672, "s:1": -2.487, "s:2": 1.097,
    "rc:1,1": -0.965, "rs:1,1": -0.249, "rs:1,2": 0.391,
    "cs:1,1": -0.528, "cs:1,2": 1.128,
    "rcs:1,1,1": 0.124, "rcs:1,1,2": -0.310,
}


def employment_factors():
    return (
        FactorSpec("gender", ("F", "M"), "(F,M)", "r"),
        FactorSpec("contract", ("FT", "PT"), "(FT,PT)", "c"),
        FactorSpec("age", AGES, "(15-24,(25-54,55+))", "s"),
    )


def czech_array():
    return np.array([[CZECH[(g, c)] for c in ("FT", "PT")] for g in ("F", "M")])


@pytest.fixture
def factors():
    return employment_factors()


@pytest.fixture
def czech(factors):
    return KCube(factors, czech_array(), "CZ")


@pytest.fixture
def V(factors):
    return build_contrast_matrix(factors)


def random_tree(levels, rng):
    """Uniformly shuffled levels, split recursively at random points."""
    levels = list(levels)
    rng.shuffle(levels)

    def split(items):
        if len(items) == 1:
            return Leaf(items[0])
        cut = int(rng.integers(1, len(items)))
        return Node(split(items[:cut]), split(items[cut:]))

    return split(levels)


def random_factors(dims, rng, symbols="rcsuvw"):
    out = []
    for a, n in enumerate(dims):
        levels = tuple(f"{symbols[a]}{i + 1}" for i in range(n))
        out.append(FactorSpec(f"f{a}", levels, random_tree(levels, rng), symbols[a]))
    return tuple(out)


def random_cube(factors, rng, spread=2.0):
    shape = tuple(f.size for f in factors)
    return KCube(factors, np.exp(rng.normal(0, spread, size=shape)))
