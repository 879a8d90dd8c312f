import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covgap.core import Codomain, CodomainKind, ValidationError
from covgap.realizability import (
    RealizabilityConfig,
    Status,
    check_covariance,
    check_moment,
    check_variogram,
    gap_inequality_search,
    hadamard_test_family,
    hull_membership,
    revalidate,
)
from oracles import brute_eta, brute_gamma, mcmillan_matrix

PM1 = Codomain.two_point(-1, 1)
FIXTURES = Path(__file__).parent / "fixtures"
FAST = RealizabilityConfig(random_tests=100)


def _check_cert_independently(v, M, values):
    c = v.certificate
    assert c is not None
    L = c.lam
    ip = float(np.sum(L * M))
    assert ip == pytest.approx(c.inner_product, abs=1e-9)
    if c.relation == "<":
        assert ip < brute_gamma(L, values) - 1e-9
    else:
        assert ip > brute_eta(L, values) + 1e-9


# --- covariance --------------------------------------------------------------


@pytest.mark.parametrize("c", [-1.0, -0.6, 0.0, 0.3, 1.0])
def test_two_by_two_correlations_are_unit_covariances(c):
    # explicit witness: P(z1 = z2) = (1 + c) / 2
    p_same = (1 + c) / 2
    R_witness = p_same * np.ones((2, 2)) + (1 - p_same) * np.array([[1, -1], [-1, 1]])
    R = np.array([[1, c], [c, 1]])
    np.testing.assert_allclose(R_witness, R)
    v = check_covariance(R, PM1)
    assert v.status is Status.REALIZABLE


def test_mixture_reproduces_matrix():
    R = np.array([[1, 0.2, -0.3], [0.2, 1, 0.1], [-0.3, 0.1, 1]])
    v = check_covariance(R, PM1)
    assert v.status is Status.REALIZABLE
    Z, p = v.details["mixture_support"], v.details["mixture_weights"]
    assert np.all(p >= 0) and p.sum() == pytest.approx(1)
    np.testing.assert_allclose(np.einsum("i,ik,il->kl", p, Z, Z), R, atol=1e-8)


def test_cosine_triangle_covariance_rejected():
    x = np.array([0.0, 0.1, 0.2])
    R = np.cos(x[:, None] - x[None, :])
    v = check_covariance(R, PM1)
    assert v.status is Status.NOT_REALIZABLE
    _check_cert_independently(v, R, (-1, 1))


def test_reals_and_integers():
    assert check_covariance(np.eye(2), Codomain.reals()).status is Status.REALIZABLE
    v = check_covariance([[1, 2], [2, 1]], Codomain.integers())
    assert v.status is Status.NOT_REALIZABLE
    assert v.certificate.inner_product < 0


def test_half_line():
    v = check_covariance([[2, 1], [1, 2]], Codomain.nonneg_reals())
    assert v.status is Status.REALIZABLE
    B = np.array(v.details["factor"])
    np.testing.assert_allclose(B @ B.T, [[2, 1], [1, 2]])
    v = check_covariance([[1, -0.5], [-0.5, 1]], Codomain.nonneg_reals())
    assert v.status is Status.NOT_REALIZABLE
    v = check_covariance([[1, 0.5], [0.5, 1]], Codomain(CodomainKind.NONPOS_REALS))
    assert v.status is Status.REALIZABLE


def test_half_line_fixture_rejected():
    R = np.array(json.loads((FIXTURES / "dnn_noncp5.json").read_text())["entries"])
    v = check_covariance(R, Codomain.nonneg_reals())
    assert v.status is Status.NOT_REALIZABLE
    assert v.certificate.family == "copositive_horn"


def test_interval():
    R = mcmillan_matrix()
    v = check_covariance(R, Codomain.interval(-1, 1))
    assert v.status is Status.NOT_REALIZABLE
    _check_cert_independently(v, R, (-1, 1))  # zero-diagonal certificate: box gap equals vertex gap
    assert np.all(np.diag(v.certificate.lam) == 0)
    assert check_covariance(np.eye(3) / 2, Codomain.interval(-1, 1)).status is Status.REALIZABLE
    assert check_covariance(np.eye(2) * 1.5, Codomain.interval(-1, 1)).status is Status.NOT_REALIZABLE


def test_nonzero_integers():
    Z0 = Codomain.nonzero_integers()
    v = check_covariance(np.eye(2) * 0.5, Z0)
    assert v.status is Status.NOT_REALIZABLE
    assert check_covariance(np.eye(3) * 2, Z0).status is Status.NECESSARY_PASSED
    # diag 1 forces |Z| = 1, so the sign-vector cut constraints apply
    v = check_covariance(np.array([[1, -0.9, -0.9], [-0.9, 1, -0.9], [-0.9, -0.9, 1]]), Z0)
    assert v.status is Status.NOT_REALIZABLE


def test_finite_sets():
    E = Codomain.finite([0, 1, 2])
    v = check_covariance(np.array([[1, 0.5], [0.5, 1]]), E)
    assert v.status is Status.REALIZABLE
    v = check_covariance(np.array([[5, 0], [0, 1]]), E)
    assert v.status is Status.NOT_REALIZABLE
    _check_cert_independently(v, np.array([[5, 0], [0, 1]]), (0, 1, 2))


def test_scaled_two_point_certificate_is_on_original_scale():
    R = mcmillan_matrix() * 4
    E = Codomain.two_point(-2, 2)
    v = check_covariance(R, E)
    assert v.status is Status.NOT_REALIZABLE
    assert revalidate(v.certificate, R, E)
    _check_cert_independently(v, R, (-2, 2))


def test_verdict_json():
    v = check_covariance(mcmillan_matrix(), PM1, FAST)
    d = json.loads(json.dumps(v.to_dict()))
    assert d["status"] == "NOT_REALIZABLE"
    assert set(d["certificate"]) >= {"lambda", "gap", "inner_product"}
    assert d["config"]["codomain"] == "{-1,1}"


def test_budget_degrades_with_note():
    cfg = RealizabilityConfig(hull_budget=2**4)
    v = check_covariance(np.eye(6), PM1, cfg)
    assert v.status is Status.NECESSARY_PASSED
    assert any("hull LP skipped" in n for n in v.notes)


@given(st.integers(2, 5), st.integers(0, 2**31 - 1),
       st.sampled_from([(-1.0, 1.0), (0.0, 1.0), (-1.0, 0.0, 1.0)]))
@settings(max_examples=60, deadline=None)
def test_rejections_revalidate(n, seed, values):
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1, 1, size=(n, n))
    R = A @ A.T / n
    E = Codomain.finite(values)
    v = check_covariance(R, E, FAST)
    if v.status is Status.NOT_REALIZABLE:
        assert revalidate(v.certificate, R, E)
        _check_cert_independently(v, R, values)
    else:
        # every finite case here fits the hull LP, so the answer is decided
        assert v.status is Status.REALIZABLE


@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
@settings(max_examples=40, deadline=None)
def test_consistency_between_pm1_and_01(n, seed):
    # (1 + R) / 4 on {0,1} is the image of R on {-1,1} under z -> (1 + z) / 2 with zero means
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1, 1, size=(n, n))
    R = A @ A.T
    d = np.sqrt(np.diag(R))
    R = R / d[:, None] / d[None, :]
    R = 0.3 * R + 0.7 * np.where(rng.uniform(size=(n, n)) < 0.5, 1.0, -1.0)
    R = (np.triu(R, 1) + np.triu(R, 1).T) + np.eye(n)
    a = check_covariance(R, PM1, FAST).status
    b = check_covariance((1 + R) / 4, Codomain.two_point(0, 1), FAST).status
    assert a is b


# --- variogram ---------------------------------------------------------------


def test_variogram_examples():
    x = np.array([0.0, 1.0, 2.0])
    assert check_variogram(np.abs(x[:, None] - x[None, :]), Codomain.reals()).status is Status.REALIZABLE
    x = np.array([0.0, 0.1, 0.2])
    G = 1 - np.cos(x[:, None] - x[None, :])
    v = check_variogram(G, PM1)
    assert v.status is Status.NOT_REALIZABLE
    _check_cert_independently(v, G, (-1, 1))
    for E in (PM1, Codomain.finite([3]), Codomain.interval(0, 1), Codomain.reals()):
        assert check_variogram(np.zeros((3, 3)), E).status is Status.REALIZABLE


def test_variogram_triangle_arithmetic():
    x = np.array([0.0, 0.1, 0.2])
    g = lambda a, b: 1 - np.cos(a - b)  # noqa: E731
    lhs = 2 * (g(x[0], x[2]) - g(x[0], x[1]) - g(x[1], x[2]))
    assert lhs == pytest.approx(2 * ((1 - np.cos(0.2)) - 2 * (1 - np.cos(0.1))))
    assert lhs > 0


def test_variogram_not_cnd_rejected_on_reals():
    v = check_variogram([[0, -1], [-1, 0]], Codomain.reals())
    assert v.status is Status.NOT_REALIZABLE
    assert abs(v.certificate.lam.sum()) < 1e-9  # rank-one zero-sum test, lam lam^T sums to zero
    assert v.certificate.inner_product > 0


def test_variogram_two_point_range_and_scaling():
    assert check_variogram([[0, 3], [3, 0]], PM1).status is Status.NOT_REALIZABLE
    assert check_variogram([[0, 2], [2, 0]], PM1).status is Status.REALIZABLE
    # {0,1}: increments are (b-a)^2/4 times those of {-1,1}
    v = check_variogram([[0, 0.5], [0.5, 0]], Codomain.two_point(0, 1))
    assert v.status is Status.REALIZABLE
    v = check_variogram([[0, 0.6], [0.6, 0]], Codomain.two_point(0, 1))
    assert v.status is Status.NOT_REALIZABLE
    _check_cert_independently(v, np.array([[0, 0.6], [0.6, 0]]), (0, 1))


def test_variogram_finite_set():
    E = Codomain.finite([0, 1, 3])
    G = np.array([[0, 4.5], [4.5, 0]])
    assert check_variogram(G, E).status is Status.REALIZABLE
    v = check_variogram(G * 1.1, E)
    assert v.status is Status.NOT_REALIZABLE
    _check_cert_independently(v, G * 1.1, (0, 1, 3))


def test_variogram_mixture_support_on_original_values():
    v = check_variogram([[0, 0.25], [0.25, 0]], Codomain.two_point(2, 3))
    assert v.status is Status.REALIZABLE
    assert set(np.unique(v.details["mixture_support"])) <= {2.0, 3.0}


# --- moments -----------------------------------------------------------------


def test_moment_examples():
    assert check_moment(np.ones((2,) * 4), PM1).status is Status.NECESSARY_PASSED
    with pytest.raises(ValidationError) as e:
        check_moment(np.array([[[0, 1], [0, 0]], [[0, 0], [0, 0]]], dtype=float), PM1)
    assert e.value.code == "SYMMETRY"
    T = np.ones((2,) * 4) * 2  # E[Z^4] = 2 impossible on {-1,1}
    v = check_moment(T, PM1)
    assert v.status is Status.NOT_REALIZABLE
    assert revalidate(v.certificate, T, PM1)


# --- test families -----------------------------------------------------------


def test_hadamard_diagonal_pairs():
    for n in range(1, 9):
        for t in hadamard_test_family(n):
            if t.u == t.v:
                assert t.bound == n % 2


def test_hadamard_n4_brute_force():
    fam = hadamard_test_family(4)
    assert len(fam) == 16
    for t in fam:
        assert brute_gamma(t.matrix, (-1, 1)) == t.bound


def test_hadamard_n1():
    (t,) = hadamard_test_family(1)
    assert t.matrix.shape == (1, 1) and t.bound == brute_gamma(t.matrix, (-1, 1)) == 1


def test_hadamard_range():
    with pytest.raises(ValidationError):
        hadamard_test_family(17)


def test_gap_search_examples():
    assert gap_inequality_search(np.eye(4), PM1, FAST) is None
    assert gap_inequality_search(np.ones((2, 2)), PM1, FAST) is None
    c = gap_inequality_search(mcmillan_matrix(), PM1, FAST)
    assert c is not None
    assert revalidate(c, mcmillan_matrix(), PM1)


def test_gap_search_is_deterministic():
    M = mcmillan_matrix()
    a = gap_inequality_search(M, PM1, seed=3)
    b = gap_inequality_search(M, PM1, seed=3)
    assert np.array_equal(a.lam, b.lam)


def test_hull_membership_identity():
    res = hull_membership(np.eye(3), (-1.0, 1.0))
    assert res.member
    res = hull_membership(mcmillan_matrix(), (-1.0, 1.0))
    assert res.member is False and res.lam is not None


def test_mixture_is_a_distribution_on_sign_vectors():
    R = np.array([[1, 0.5, 0.5], [0.5, 1, 0.5], [0.5, 0.5, 1]])
    v = check_covariance(R, PM1)
    for z in v.details["mixture_support"]:
        assert set(np.abs(z)) == {1.0}
    assert np.all(v.details["mixture_weights"] > 0)
