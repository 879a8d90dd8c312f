import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covgap.constructors import (
    ConstructionSpec,
    Recipe,
    arcsin_covariance,
    gaussian_moment,
    hafnian,
    integer_bump,
    lognormal_cov,
    unit_diag_lift,
    unit_variogram_from_gaussian,
)
from covgap.core import ValidationError
from covgap.realizability import check_tensor_symmetry
from covgap.montecarlo import random_correlation


def _matchings(idx):
    if not idx:
        yield []
        return
    a, rest = idx[0], idx[1:]
    for j, b in enumerate(rest):
        for m in _matchings(rest[:j] + rest[j + 1:]):
            yield [(a, b)] + m


def test_arcsin_examples():
    C = np.array([[1, 0.8], [0.8, 1]])
    assert np.all(arcsin_covariance(C, 0).entries == 0)
    assert np.all(np.diag(arcsin_covariance(C, 1).entries) == 1)
    assert arcsin_covariance(C, 0.5).entries[0, 1] == pytest.approx(0.26197, abs=1e-5)
    assert arcsin_covariance(C, 0.5).entries[0, 1] == pytest.approx(2 / np.pi * np.arcsin(0.4), abs=1e-15)


def test_arcsin_rejects_non_correlation():
    with pytest.raises(ValidationError):
        arcsin_covariance([[2, 0], [0, 1]])
    with pytest.raises(ValidationError):
        arcsin_covariance([[1, 0.9, -0.9], [0.9, 1, 0.9], [-0.9, 0.9, 1]])
    with pytest.raises(ValidationError):
        arcsin_covariance(np.eye(2), a=1.5)


def test_arcsin_clamps_tiny_excess():
    C = np.array([[1, 1 + 5e-13], [1 + 5e-13, 1]])
    assert arcsin_covariance(C).entries[0, 1] == 1.0


def test_unit_diag_lift():
    out = unit_diag_lift([[0.5, 0.2], [0.2, 0.5]]).entries
    np.testing.assert_array_equal(out, [[1, 0.2], [0.2, 1]])
    assert np.array_equal(unit_diag_lift(out).entries, out)
    with pytest.raises(ValidationError):
        unit_diag_lift([[1, 1.5], [1.5, 1]])


def test_integer_bump():
    np.testing.assert_array_equal(integer_bump(np.zeros((2, 2)), 1).entries, np.eye(2))
    np.testing.assert_array_equal(integer_bump(np.ones((2, 2)), 1).entries, [[2, 1], [1, 2]])
    R = np.eye(2) / 3
    integer_bump(R, 0.7)
    with pytest.raises(ValidationError):
        integer_bump(R, 0.6)
    with pytest.raises(ValidationError):
        integer_bump(np.eye(2) * 0.2, 0.9)  # diagonal below 1/3 needs eps >= 1
    with pytest.raises(ValidationError):
        integer_bump([[1, 2], [2, 1]], 1)


def test_lognormal():
    np.testing.assert_array_equal(lognormal_cov(np.zeros((2, 2))).entries, np.ones((2, 2)))
    np.testing.assert_allclose(lognormal_cov(np.eye(2)).entries, [[np.e, 1], [1, np.e]])
    with pytest.raises(ValidationError):
        lognormal_cov([[1, 2], [2, 1]])


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_lognormal_positivity(seed):
    C = random_correlation(4, seed) * 0.8
    out = lognormal_cov(C).entries
    assert out.min() >= np.exp(-np.abs(C).max()) > 0


def test_hafnian_examples():
    assert hafnian([[5, 2], [2, 7]]) == 2
    assert hafnian(np.ones((4, 4))) == 3
    with pytest.raises(ValidationError):
        hafnian(np.ones((3, 3)))


def test_hafnian_four_by_four_expansion():
    rng = np.random.default_rng(0)
    for _ in range(20):
        S = rng.integers(-5, 6, size=(4, 4)).astype(float)
        S = S + S.T
        r = S
        assert hafnian(S) == r[0, 1] * r[2, 3] + r[0, 2] * r[1, 3] + r[0, 3] * r[1, 2]


def test_hafnian_matches_matching_enumeration():
    rng = np.random.default_rng(1)
    S = rng.integers(-3, 4, size=(6, 6)).astype(float)
    S = S + S.T
    ref = sum(np.prod([S[a, b] for a, b in m]) for m in _matchings(tuple(range(6))))
    assert hafnian(S) == ref
    assert len(list(_matchings(tuple(range(6))))) == 15


def test_hafnian_block_multiplicativity():
    rng = np.random.default_rng(2)
    for _ in range(20):
        a, b = 2 * int(rng.integers(1, 3)), 2 * int(rng.integers(1, 3))
        A = rng.integers(-3, 4, size=(a, a)).astype(float)
        B = rng.integers(-3, 4, size=(b, b)).astype(float)
        A, B = A + A.T, B + B.T
        M = np.zeros((a + b, a + b))
        M[:a, :a], M[a:, a:] = A, B
        assert hafnian(M) == hafnian(A) * hafnian(B)


def test_gaussian_moment_small_cases():
    R = random_correlation(3, 0) * 1.7
    np.testing.assert_allclose(gaussian_moment(2, R).entries, R)
    T = gaussian_moment(4, R).entries
    for k in range(3):
        assert T[k, k, k, k] == pytest.approx(3 * R[k, k] ** 2)


def test_gaussian_moment_matches_hafnian_of_submatrix():
    R = random_correlation(3, 1)
    T = gaussian_moment(4, R).entries
    for idx in itertools.product(range(3), repeat=4):
        assert T[idx] == pytest.approx(hafnian(R[np.ix_(idx, idx)]), abs=1e-12)


def test_gaussian_moment_order_six():
    R = random_correlation(2, 2)
    T = gaussian_moment(6, R).entries
    assert T[0, 0, 0, 0, 0, 0] == pytest.approx(15 * R[0, 0] ** 3)


@given(st.integers(1, 4), st.sampled_from([2, 4, 6]), st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_gaussian_moment_is_symmetric(n, q, seed):
    T = gaussian_moment(q, random_correlation(n, seed)).entries
    check_tensor_symmetry(T)


def test_gaussian_moment_limits():
    with pytest.raises(ValidationError):
        gaussian_moment(3, np.eye(2))
    with pytest.raises(ValidationError):
        gaussian_moment(10, np.eye(2))


def test_unit_variogram_examples():
    G = unit_variogram_from_gaussian([[1, 1], [1, 1]]).entries
    assert G[0, 1] == 0
    assert unit_variogram_from_gaussian(np.eye(2)).entries[0, 1] == 1
    assert unit_variogram_from_gaussian([[1, -1], [-1, 1]]).entries[0, 1] == 2


@given(st.integers(2, 6), st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_unit_process_identity(n, seed):
    C = random_correlation(n, seed)
    rho = arcsin_covariance(C, 1).entries
    g = unit_variogram_from_gaussian(C).entries
    np.testing.assert_allclose(rho, 1 - g, atol=1e-14)


def test_spec_json_roundtrip():
    spec = ConstructionSpec(Recipe.INTEGER_BUMP, {"eps": 1.0})
    again = ConstructionSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
    assert again == spec
    np.testing.assert_array_equal(again.apply(np.zeros((2, 2))).entries, np.eye(2))
    with pytest.raises(ValidationError):
        ConstructionSpec(Recipe.ARCSIN, {"a": 2})
