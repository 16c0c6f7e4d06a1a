import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import fractional_matrix_power, sqrtm

from conftest import I2, SX, SY, SZ
from uncert.errors import DomainMismatchError, NotPSDError, NumericalError
from uncert.instances import random_hermitian, random_psd
from uncert.linalg import (
    DEFAULT_TOL,
    Tolerance,
    anticommutator,
    as_matrix,
    commutator,
    eig_hermitian,
    geometric_mean,
    hermitize,
    imaginary_part,
    is_psd,
    lambda_min,
    loewner_geq,
    matrix_abs,
    matrix_power,
    matrix_sqrt,
    opnorm,
    real_part,
    schur_positivity_check,
    schur_routes,
    spectrum_interval,
)


def denman_beavers_sqrt(a, iters=60):
    """Independent square root by the Denman-Beavers iteration (test oracle only)."""
    y = np.array(a, dtype=complex)
    z = np.eye(a.shape[0], dtype=complex)
    for _ in range(iters):
        y, z = 0.5 * (y + np.linalg.inv(z)), 0.5 * (z + np.linalg.inv(y))
    return y


seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=1, max_value=6)


# -- hermitize / eigen -------------------------------------------------------


def test_hermitize_examples():
    assert np.array_equal(hermitize(np.diag([1.0, 2.0])), np.diag([1.0, 2.0]).astype(complex))
    assert np.allclose(hermitize([[0, 1], [0, 0]]), [[0, 0.5], [0.5, 0]])
    assert np.allclose(hermitize([[1, 1j], [0, 1]]), [[1, 0.5j], [-0.5j, 1]])


def test_hermitize_rejects_non_square():
    with pytest.raises(DomainMismatchError):
        hermitize(np.ones((2, 3)))


def test_as_matrix_rejects_non_finite():
    with pytest.raises(ValueError):
        as_matrix([[np.nan, 0], [0, 1]])


def test_eig_hermitian_examples():
    assert np.allclose(eig_hermitian(np.eye(3)).eigenvalues, [1, 1, 1])
    assert np.allclose(eig_hermitian(SZ).eigenvalues, [-1, 1])
    # characteristic polynomial of sigma_x: l^2 - 1
    assert np.allclose(eig_hermitian(SX).eigenvalues, [-1, 1])


@given(seeds, dims)
def test_eig_reconstruction_and_order(seed, n):
    h = random_hermitian(n, seed)
    w, v = eig_hermitian(h)
    assert np.all(np.diff(w) >= 0)
    err = np.linalg.norm(v @ np.diag(w) @ v.conj().T - h)
    assert err <= 1e-10 * (1 + np.linalg.norm(h))
    assert np.allclose(v.conj().T @ v, np.eye(n), atol=1e-12)


def test_spectrum_interval_examples():
    assert spectrum_interval(SZ) == pytest.approx((-1, 1))
    assert spectrum_interval(np.eye(4)) == pytest.approx((1, 1))
    assert spectrum_interval(SX) == pytest.approx((-1, 1))
    assert lambda_min(np.diag([3.0, -2.0, 5.0])) == pytest.approx(-2.0)


def test_opnorm_matches_largest_singular_value(rng):
    for n in (1, 2, 5):
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        assert opnorm(g) == pytest.approx(np.linalg.svd(g, compute_uv=False)[0], rel=1e-12)


# -- matrix functions ----------------------------------------------------------


def test_matrix_power_examples():
    assert np.allclose(matrix_power(np.diag([4.0, 9.0]), 0.5), np.diag([2.0, 3.0]))
    # support-projection convention for the zero eigenvalue
    assert np.allclose(matrix_power(np.diag([0.5, 0.5, 0.0]), 0.0), np.diag([1.0, 1.0, 0.0]))
    p = random_psd(4, 3)
    assert np.allclose(matrix_power(p, 1.0), p, atol=1e-12)


def test_matrix_power_errors():
    with pytest.raises(NotPSDError):
        matrix_power(np.diag([1.0, -1.0]), 0.5)
    with pytest.raises(NotPSDError):
        matrix_power(np.diag([1.0, 0.0]), -0.5)


def test_matrix_power_clamps_tiny_negative_eigenvalues():
    out = matrix_power(np.diag([1.0, -1e-14]), 0.5)
    assert np.allclose(out, np.diag([1.0, 0.0]))


def test_matrix_power_result_is_cached_and_read_only():
    p = random_psd(3, 5, shift=0.1)
    a = matrix_power(p, 0.3)
    assert matrix_power(p.copy(), 0.3) is a
    with pytest.raises(ValueError):
        a[0, 0] = 0


def test_matrix_power_matches_scipy_fractional_power():
    for seed in range(20):
        p = random_psd(4, seed, shift=0.05)
        for alpha in (0.1, 0.5, 0.9, -0.5, 2.0):
            assert np.allclose(matrix_power(p, alpha), fractional_matrix_power(p, alpha), atol=1e-9)


@given(seeds, st.integers(min_value=2, max_value=8))
def test_sqrt_matches_denman_beavers(seed, n):
    p = random_psd(n, seed, shift=0.1)
    s = matrix_sqrt(p)
    assert np.allclose(s, denman_beavers_sqrt(p), atol=1e-8 * max(opnorm(p), 1.0))
    assert np.allclose(matrix_power(s, 2.0), p, atol=1e-8 * max(opnorm(p), 1.0))


@given(seeds, st.integers(min_value=2, max_value=6), st.sampled_from([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]))
def test_complementary_powers_multiply_back(seed, n, alpha):
    p = random_psd(n, seed, shift=0.1)
    prod = matrix_power(p, alpha) @ matrix_power(p, 1 - alpha)
    assert np.allclose(prod, p, atol=1e-9 * max(opnorm(p), 1.0))


def test_matrix_abs_examples():
    assert np.allclose(matrix_abs(np.diag([-3.0, 2.0])), np.diag([3.0, 2.0]))
    assert np.allclose(matrix_abs(1j * SZ), I2)
    assert np.allclose(matrix_abs(np.zeros((2, 2))), 0)


def test_matrix_abs_matches_polar_factor(rng):
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert np.allclose(matrix_abs(g), sqrtm(g.conj().T @ g), atol=1e-10)


# -- geometric mean ----------------------------------------------------------


def test_geometric_mean_examples():
    assert np.allclose(geometric_mean(np.diag([4.0]), np.diag([9.0])), [[6.0]])
    a = random_psd(3, 1, shift=0.2)
    assert np.allclose(geometric_mean(a, a), a, atol=1e-10)
    b = random_psd(3, 2)
    assert np.allclose(geometric_mean(np.eye(3), b), matrix_sqrt(b), atol=1e-10)


@given(seeds, st.integers(min_value=1, max_value=6))
def test_geometric_mean_symmetry_and_riccati(seed, n):
    a = random_psd(n, seed, shift=0.1)
    b = random_psd(n, seed + 1, shift=0.1)
    g = geometric_mean(a, b)
    scale = max(opnorm(a), opnorm(b), 1.0)
    assert np.allclose(g, geometric_mean(b, a), atol=1e-8 * scale)
    # G is the unique positive solution of G A^{-1} G = B
    assert np.allclose(g @ np.linalg.solve(a, g), b, atol=1e-8 * scale ** 2)
    assert is_psd(g)


@given(seeds, st.integers(min_value=1, max_value=5))
def test_geometric_mean_maximality_certificate(seed, n):
    a = random_psd(n, seed, shift=0.1)
    b = random_psd(n, seed + 7, shift=0.1)
    assert schur_positivity_check(a, geometric_mean(a, b), b)


def test_geometric_mean_regularizes_singular_first_argument():
    g, meta = geometric_mean(np.diag([1.0, 0.0]), np.eye(2), info=True)
    assert meta["regularized"] and meta["epsilon"] == pytest.approx(1e-10)
    assert np.allclose(g, np.diag([1.0, 0.0]), atol=1e-4)


def test_geometric_mean_errors():
    with pytest.raises(NotPSDError):
        geometric_mean(np.eye(2), np.diag([1.0, -1.0]))
    with pytest.raises(NotPSDError):
        geometric_mean(np.diag([1.0, -1.0]), np.eye(2))
    with pytest.raises(DomainMismatchError):
        geometric_mean(np.eye(2), np.eye(3))


# -- order, Schur complements -------------------------------------------------


def test_loewner_geq_examples():
    assert loewner_geq(2 * np.eye(2), np.eye(2)) == pytest.approx(1.0)
    assert loewner_geq(np.diag([1.0, 3.0]), np.diag([2.0, 1.0])) == pytest.approx(-1.0)
    a = random_hermitian(3, 0)
    assert loewner_geq(a, a) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DomainMismatchError):
        loewner_geq(np.eye(2), np.eye(3))


def test_schur_examples():
    one = lambda x: np.array([[x]], dtype=float)  # noqa: E731
    assert schur_positivity_check(one(2), one(1), one(1)) is True
    assert schur_positivity_check(one(1), one(2), one(1)) is False
    assert schur_positivity_check(np.eye(2), np.zeros((2, 2)), np.zeros((2, 2))) is True


def test_schur_errors():
    with pytest.raises(NotPSDError):
        schur_positivity_check(np.diag([1.0, 0.0]), np.zeros((2, 1)), np.eye(1))
    with pytest.raises(DomainMismatchError):
        schur_routes(np.eye(2), np.zeros((3, 1)), np.eye(1))


def test_schur_reports_disagreement_as_numerical_error(monkeypatch):
    import uncert.linalg as la

    fake = la.SchurRoutes(schur=1.0, block=-1.0, shifted=-1.0, bound=1e-10)
    monkeypatch.setattr(la, "schur_routes", lambda a, x, b, tol=DEFAULT_TOL: fake)
    with pytest.raises(NumericalError):
        la.schur_positivity_check(np.eye(1), np.eye(1), np.eye(1))


def test_schur_routes_agree_in_sign(rng):
    for _ in range(200):
        n, m = rng.integers(1, 5, size=2)
        a = random_psd(int(n), rng, shift=0.1)
        x = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
        b = random_hermitian(int(m), rng) + x.conj().T @ np.linalg.solve(a, x)
        r = schur_routes(a, x, b)
        assert np.sign(r.schur) == np.sign(r.block)
        assert r.schur_psd == r.block_psd


def test_schur_routes_agree_at_the_tolerance_edge():
    # S = -t with M = L^* diag(a, S) L strongly sheared: the raw block eigenvalue
    # is far smaller than |S|, the shifted block still tracks the Schur verdict
    a = np.array([[1e-2]])
    x = np.array([[1.0]])
    for t in (5e-9, 2e-8, 5e-8, 1e-6):
        b = x.T @ np.linalg.solve(a, x) - t
        r = schur_routes(a, x, b)
        assert abs(r.block) < abs(r.schur)
        assert r.schur_psd == r.block_psd == (t <= r.bound)


def test_tolerance_validation_and_bound():
    assert Tolerance().bound(1.0) == pytest.approx(1e-10 + 1e-8)
    assert Tolerance(rel=0.0, abs=1e-3).bound(1e6) == pytest.approx(1e-3)
    with pytest.raises(ValueError):
        Tolerance(rel=-1.0)
    with pytest.raises(ValueError):
        Tolerance(abs=float("inf"))
    assert Tolerance.from_dict(Tolerance(1e-6, 1e-9).to_dict()) == Tolerance(1e-6, 1e-9)


# -- commutators and parts ------------------------------------------------------


def test_commutator_examples():
    assert np.allclose(commutator(SX, SY), 2j * SZ)
    a = random_hermitian(3, 4)
    assert np.allclose(commutator(a, a), 0)
    assert np.allclose(commutator(a, np.eye(3)), 0)
    assert np.allclose(anticommutator(SX, SY), 0)
    with pytest.raises(DomainMismatchError):
        commutator(np.eye(2), np.eye(3))


@given(seeds, st.integers(min_value=1, max_value=6))
def test_commutator_of_hermitians_is_skew(seed, n):
    a, b = random_hermitian(n, seed), random_hermitian(n, seed + 1)
    c = commutator(a, b)
    assert np.allclose(c.conj().T, -c, atol=1e-13)


def test_real_and_imaginary_parts():
    assert np.allclose(real_part(1j * SZ), 0)
    assert np.allclose(imaginary_part(1j * SZ), SZ)
    h = random_hermitian(3, 9)
    assert np.allclose(real_part(h), h)


@given(seeds, st.integers(min_value=1, max_value=5))
def test_parts_reconstitute(seed, n):
    g = np.random.default_rng(seed).standard_normal((n, n, 2)) @ np.array([1, 1j])
    assert np.allclose(real_part(g) + 1j * imaginary_part(g), g, atol=1e-14)
