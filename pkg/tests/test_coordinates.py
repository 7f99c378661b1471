import itertools
import math

import numpy as np
import numpy.testing as npt
import pytest

from compcube import (
    CoordinateKey,
    CubeError,
    FactorSpec,
    KCube,
    build_contrast_matrix,
    closure,
    coords,
    decompose,
    group_coordinates,
    hadamard_normalized,
    independence_part,
    interaction_part,
    inverse,
    lift_factor_vector,
    transform_logcontrasts,
)
from compcube.sbp import Leaf, Node

from conftest import CZECH_COORDS, random_cube, random_factors

S12, S8, S6 = math.sqrt(1 / 12), math.sqrt(1 / 8), math.sqrt(1 / 6)


def grouped_coordinate(cube, key):
    """Coordinate as Q * log of a ratio of geometric means of cell groups.

    Cells are grouped by their plus/minus membership in each step of the key;
    Q = sqrt(|all-plus group| * |all-minus group| / |cells involved|).
    """
    groups = {}
    for idx in itertools.product(*[range(n) for n in cube.shape]):
        signs = []
        for a, s in zip(key.axes, key.steps):
            st = cube.factors[a].steps[s - 1]
            lv = cube.factors[a].levels[idx[a]]
            signs.append(1 if lv in st.plus else -1 if lv in st.minus else 0)
        if 0 not in signs:
            groups.setdefault(tuple(signs), []).append(math.log(cube.data[idx]))
    n = len(key.axes)
    total = sum(len(v) for v in groups.values())
    Q = math.sqrt(len(groups[(1,) * n]) * len(groups[(-1,) * n]) / total)
    log_ratio = math.fsum(math.prod(sig) * math.fsum(v) / len(v) for sig, v in groups.items())
    return Q, Q * log_ratio


class TestGeneratingVectors:
    def test_main_effects(self, factors):
        npt.assert_allclose(lift_factor_vector(factors, 0, 1), S12 * np.repeat([1, -1], 6))
        npt.assert_allclose(lift_factor_vector(factors, 1, 1),
                            S12 * np.array([1, 1, 1, -1, -1, -1] * 2))
        npt.assert_allclose(lift_factor_vector(factors, 2, 1), S6 * np.array([1, -.5, -.5] * 4))
        npt.assert_allclose(lift_factor_vector(factors, 2, 2), S8 * np.array([0, 1, -1] * 4))

    def test_interactions(self, factors):
        r, c = lift_factor_vector(factors, 0, 1), lift_factor_vector(factors, 1, 1)
        s1, s2 = lift_factor_vector(factors, 2, 1), lift_factor_vector(factors, 2, 2)
        npt.assert_allclose(hadamard_normalized([r, c]),
                            S12 * np.array([1, 1, 1, -1, -1, -1, -1, -1, -1, 1, 1, 1]))
        npt.assert_allclose(hadamard_normalized([r, s1]),
                            S6 * np.array([1, -.5, -.5, 1, -.5, -.5, -1, .5, .5, -1, .5, .5]))
        npt.assert_allclose(hadamard_normalized([r, s2]),
                            S8 * np.array([0, 1, -1, 0, 1, -1, 0, -1, 1, 0, -1, 1]))
        npt.assert_allclose(hadamard_normalized([c, s1]),
                            S6 * np.array([1, -.5, -.5, -1, .5, .5, 1, -.5, -.5, -1, .5, .5]))
        npt.assert_allclose(hadamard_normalized([c, s2]),
                            S8 * np.array([0, 1, -1, 0, -1, 1, 0, 1, -1, 0, -1, 1]))
        npt.assert_allclose(hadamard_normalized([r, c, s1]),
                            S6 * np.array([1, -.5, -.5, -1, .5, .5, -1, .5, .5, 1, -.5, -.5]))
        npt.assert_allclose(hadamard_normalized([r, c, s2]),
                            S8 * np.array([0, 1, -1, 0, -1, 1, 0, -1, 1, 0, 1, -1]))

    def test_lifted_unit_zero_sum(self):
        rng = np.random.default_rng(0)
        fs = random_factors((4, 3, 3), rng)
        for a, f in enumerate(fs):
            for st in f.steps:
                v = lift_factor_vector(fs, a, st)
                assert np.linalg.norm(v) == pytest.approx(1, abs=1e-14)
                assert abs(v.sum()) < 1e-14

    def test_hadamard_of_sign_pattern(self):
        signs = np.array([1.0, -1.0, -1.0, 1.0])
        npt.assert_allclose(hadamard_normalized([signs, np.ones(4)]), signs / 2)

    def test_hadamard_errors(self):
        with pytest.raises(ValueError, match="zero"):
            hadamard_normalized([np.array([1.0, 0.0]), np.array([0.0, 1.0])])
        with pytest.raises(ValueError, match="length"):
            hadamard_normalized([np.ones(2), np.ones(3)])


class TestContrastMatrix:
    def test_layout(self, V):
        assert V.shape == (11, 12)
        assert V.labels == ["r:1", "c:1", "s:1", "s:2", "rc:1,1", "rs:1,1", "rs:1,2",
                            "cs:1,1", "cs:1,2", "rcs:1,1,1", "rcs:1,1,2"]
        assert V.keys[4] == CoordinateKey((0, 1), (1, 1))
        assert V.orthonormality_error() < 1e-12

    def test_prefactors(self, V):
        expected = [math.sqrt(3), math.sqrt(3), math.sqrt(8 / 3), math.sqrt(2), math.sqrt(3 / 4),
                    math.sqrt(2 / 3), math.sqrt(1 / 2), math.sqrt(2 / 3), math.sqrt(1 / 2),
                    math.sqrt(1 / 6), math.sqrt(1 / 8)]
        npt.assert_allclose(V.prefactors, expected, rtol=1e-12)

    @pytest.mark.parametrize("dims", [(2, 2), (3, 2, 2), (4, 3, 3), (2, 3, 2, 3)])
    def test_orthonormal(self, dims):
        rng = np.random.default_rng(sum(dims))
        V = build_contrast_matrix(random_factors(dims, rng))
        D = int(np.prod(dims))
        assert V.shape == (D - 1, D)
        assert V.orthonormality_error() < 1e-10
        assert np.abs(V.rows.sum(axis=1)).max() < 1e-12
        blocks = {axes: len(V.block(axes)) for axes in V.subsets()}
        assert blocks == {axes: int(np.prod([dims[a] - 1 for a in axes])) for axes in blocks}

    def test_row_order_deterministic(self, factors):
        a, b = build_contrast_matrix(factors), build_contrast_matrix(factors)
        assert a.rows.tobytes() == b.rows.tobytes()

    def test_non_single_char_symbols_joined(self):
        fs = (FactorSpec("sex", ("F", "M")), FactorSpec("age", ("y", "o")))
        assert build_contrast_matrix(fs).labels == ["sex:1", "age:1", "sex*age:1,1"]


class TestCoords:
    def test_czech_golden(self, czech, V):
        z = coords(czech, V).as_dict()
        for label, expected in CZECH_COORDS.items():
            assert z[label] == pytest.approx(expected, abs=0.002), label

    def test_unnormalized_readouts(self, czech, V):
        z = coords(czech, V, normalized=False)
        assert math.exp(z["r:1"]) == pytest.approx(1.19, abs=0.01)
        assert 14.5 <= math.exp(z["c:1"]) <= 15.5
        assert 1 / math.exp(z["s:1"]) == pytest.approx(4.6, abs=0.05)
        assert math.exp(z["s:2"]) == pytest.approx(2.0, abs=0.2)
        assert math.exp(z["rc:1,1"]) == pytest.approx(0.33, abs=0.01)
        assert z["rc:1,1"] == pytest.approx(-1.12, abs=0.01)

    def test_uniform_is_zero(self, factors, V):
        z = coords(KCube(factors, np.full(12, 5.0)), V)
        assert np.abs(z.values).max() < 1e-14

    def test_kappa_invariance(self, czech, V):
        z = coords(czech, V).values
        npt.assert_allclose(coords(czech.closed(100), V).values, z, atol=1e-12)
        npt.assert_allclose(coords(czech.closed(1), V).values, z, atol=1e-12)

    def test_agrees_with_geometric_mean_forms(self):
        rng = np.random.default_rng(11)
        for dims in [(2, 2, 3), (3, 4, 2), (3, 3, 3), (2, 3, 2, 2)]:
            cube = random_cube(random_factors(dims, rng), rng)
            V = build_contrast_matrix(cube.factors)
            z = coords(cube, V).values
            raw = coords(cube, V, normalized=False).values
            for i, key in enumerate(V.keys):
                Q, value = grouped_coordinate(cube, key)
                assert z[i] == pytest.approx(value, abs=1e-10)
                assert V.prefactors[i] == pytest.approx(Q, rel=1e-12)
                assert raw[i] == pytest.approx(value / Q, abs=1e-10)

    def test_dim_mismatch(self, V):
        rng = np.random.default_rng(1)
        with pytest.raises(CubeError, match="dims"):
            coords(random_cube(random_factors((3, 2, 3), rng), rng), V)

    def test_level_permutation_coherence(self):
        rng = np.random.default_rng(12)
        fs = random_factors((3, 4, 2), rng)
        cube = random_cube(fs, rng)
        z = coords(cube, build_contrast_matrix(fs)).as_dict()
        perm = rng.permutation(4)
        f1 = fs[1]
        permuted = FactorSpec(f1.name, tuple(f1.levels[p] for p in perm), f1.sbp, f1.symbol)
        fs2 = (fs[0], permuted, fs[2])
        cube2 = KCube(fs2, cube.data[:, perm, :])
        z2 = coords(cube2, build_contrast_matrix(fs2)).as_dict()
        assert z2.keys() == z.keys()
        for label in z:
            assert z2[label] == pytest.approx(z[label], abs=1e-12)


class TestTableCase:
    """Two factors: row balances, column balances and odds-ratio coordinates."""

    def test_against_table_formulas(self):
        rng = np.random.default_rng(13)
        for I, J in [(2, 2), (3, 4), (4, 3)]:
            fs = random_factors((I, J), rng)
            x = np.exp(rng.normal(size=(I, J)))
            V = build_contrast_matrix(fs)
            z = coords(KCube(fs, x), V).as_dict()
            g = lambda cells: math.exp(math.fsum(math.log(x[c]) for c in cells) / len(cells))
            rows, cols = fs
            for i, st in enumerate(rows.steps, start=1):
                s, t = st.p, st.q
                num = math.prod(g([(rows.levels.index(lv), j) for j in range(J)])
                                for lv in st.plus) ** (1 / s)
                den = math.prod(g([(rows.levels.index(lv), j) for j in range(J)])
                                for lv in st.minus) ** (1 / t)
                assert z[f"r:{i}"] == pytest.approx(
                    math.sqrt(s * t * J / (s + t)) * math.log(num / den), abs=1e-10)
            for j, st in enumerate(cols.steps, start=1):
                u, v = st.p, st.q
                num = math.prod(g([(i, cols.levels.index(lv)) for i in range(I)])
                                for lv in st.plus) ** (1 / u)
                den = math.prod(g([(i, cols.levels.index(lv)) for i in range(I)])
                                for lv in st.minus) ** (1 / v)
                assert z[f"c:{j}"] == pytest.approx(
                    math.sqrt(u * v * I / (u + v)) * math.log(num / den), abs=1e-10)
            for (i, rs), (j, cs) in itertools.product(enumerate(rows.steps, 1),
                                                      enumerate(cols.steps, 1)):
                def cells(rset, cset):
                    return [(rows.levels.index(a), cols.levels.index(b))
                            for a in rset for b in cset]
                A, B = cells(rs.plus, cs.plus), cells(rs.plus, cs.minus)
                C, D = cells(rs.minus, cs.plus), cells(rs.minus, cs.minus)
                n = len(A) + len(B) + len(C) + len(D)
                expected = math.sqrt(len(A) * len(D) / n) * math.log(g(A) * g(D) / (g(B) * g(C)))
                assert z[f"rc:{i},{j}"] == pytest.approx(expected, abs=1e-10)


class TestInverse:
    def test_zero_is_uniform(self, V):
        z = coords(KCube(V.factors, np.full(12, 2.0)), V)
        npt.assert_allclose(inverse(z, V).vec(), 1 / 12)

    def test_round_trip(self, czech, V):
        back = inverse(coords(czech, V), V, kappa=100)
        npt.assert_allclose(back.vec(), closure(czech.vec(), 100), rtol=1e-10)

    def test_single_main_effect(self, czech, V):
        z = coords(czech, V)
        only = group_coordinates(z, "r")
        cube = inverse(only, V)
        for i in range(2):
            npt.assert_allclose(cube.data[i], cube.data[i].flat[0], rtol=1e-12)

    def test_incomplete(self, czech, V):
        z = coords(czech, V)
        bad = type(z)(z.values[:-1], z.keys[:-1], z.factors)
        with pytest.raises(ValueError, match="incomplete"):
            inverse(bad, V)
        with pytest.raises(ValueError, match="normalized"):
            inverse(coords(czech, V, normalized=False), V)


class TestGroups:
    def test_partition_of_keys(self, czech, V):
        z = coords(czech, V)
        total = sum(group_coordinates(z, g).values for g in ["r", "c", "s", "rc", "rs", "cs", "rcs"])
        npt.assert_array_equal(total, z.values)

    def test_interaction_part_matches_group(self, czech, V):
        z = coords(czech, V)
        for label in ("rc", "rs", "cs", "rcs"):
            part = coords(interaction_part(czech, label), V)
            npt.assert_allclose(part.values, group_coordinates(z, label).values, atol=1e-10)

    def test_independence_matches_main_effects(self, czech, V):
        z = coords(czech, V)
        npt.assert_allclose(coords(independence_part(czech), V).values,
                            group_coordinates(z, "ind").values, atol=1e-10)

    def test_selectors(self, czech, V):
        z = coords(czech, V)
        a = group_coordinates(z, ["gender", "contract"]).values
        npt.assert_array_equal(a, group_coordinates(z, "rc").values)
        assert np.count_nonzero(group_coordinates(z, "int").values) == 7
        with pytest.raises(ValueError, match="unknown"):
            group_coordinates(z, "xy")

    def test_additivity_over_decomposition(self):
        rng = np.random.default_rng(14)
        for dims in [(2, 2, 3), (3, 3, 3), (2, 2, 2, 3)]:
            cube = random_cube(random_factors(dims, rng), rng)
            V = build_contrast_matrix(cube.factors)
            total = sum(coords(p, V).values for p in decompose(cube).parts.values())
            assert np.abs(total - coords(cube, V).values).max() < 1e-10


class TestTransform:
    def test_identity(self, czech, V):
        z = coords(czech, V)
        npt.assert_allclose(transform_logcontrasts(V.rows, V, z), z.values, atol=1e-12)

    def test_single_log_ratio(self, czech, V):
        T = np.zeros(12)
        T[0], T[1] = 1, -1
        x = czech.vec()
        assert transform_logcontrasts(T, V, coords(czech, V))[0] == pytest.approx(
            math.log(x[0] / x[1]), abs=1e-12)

    def test_clr(self, czech, V):
        T = np.eye(12) - 1 / 12
        x = czech.vec()
        gmean = math.exp(math.fsum(map(math.log, x)) / 12)
        npt.assert_allclose(transform_logcontrasts(T, V, coords(czech, V)),
                            [math.log(v / gmean) for v in x], atol=1e-12)

    def test_row_sum_validated(self, czech, V):
        with pytest.raises(ValueError, match="sums to"):
            transform_logcontrasts(np.ones((1, 12)), V, coords(czech, V))
        with pytest.raises(ValueError, match="columns"):
            transform_logcontrasts(np.zeros((1, 11)), V, coords(czech, V))


def test_two_level_tree_objects_work_as_sbp():
    f = FactorSpec("x", ("a", "b"), Node(Leaf("b"), Leaf("a")), "r")
    g = FactorSpec("y", ("c", "d"), "(c,d)", "c")
    V = build_contrast_matrix((f, g))
    npt.assert_allclose(V.rows[0], [-0.5, -0.5, 0.5, 0.5])
