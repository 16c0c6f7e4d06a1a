import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import I2, SX, SY, SZ, qubit_state, skew_closed_form
from uncert import verifiers as vf
from uncert.algebra import (
    BlockAlgebra,
    PositiveAssignment,
    center_expectation,
    scaled_block_trace,
    usual_trace,
)
from uncert.errors import NumericalError, SchemaError, UnsupportedMapError
from uncert.instances import InstanceSpec, generate_instance, random_hermitian, random_psd
from uncert.linalg import Tolerance
from uncert.registry import THEOREMS, get_theorem, run_verifier, supports, theorem_ids

M2 = BlockAlgebra((2,))
TR = usual_trace(M2)
CE = center_expectation(M2)
RHO = qubit_state(0.75)
I_HALF = 1 - 2 * np.sqrt(0.1875)
TRIVIAL_OUTER = PositiveAssignment(BlockAlgebra((1,)), np.ones((1, 1, 1)))


def classical_schrodinger_margin(rho, a, b):
    """Scalar Schrodinger margin computed from scratch with plain traces."""
    t = lambda x: np.trace(x)  # noqa: E731
    ea, eb = t(rho @ a), t(rho @ b)
    va = (t(rho @ a @ a) - ea ** 2).real
    vb = (t(rho @ b @ b) - eb ** 2).real
    cov = t(rho @ a @ b) - ea * eb
    comm = t(rho @ (a @ b - b @ a))
    return va * vb - cov.real ** 2 - abs(comm) ** 2 / 4


# -- classical relations -------------------------------------------------------


def test_heisenberg_pauli():
    r = vf.verify_heisenberg_classical(RHO, SX, SY)
    assert r.lhs == pytest.approx(1.0) and r.rhs == pytest.approx(0.25)
    assert r.margin == pytest.approx(0.75) and r.outcome == "pass"
    assert vf.verify_heisenberg_classical(RHO, SX, SX).rhs == pytest.approx(0)
    assert vf.verify_heisenberg_classical(I2 / 2, SX, SY).rhs == pytest.approx(0)


def test_classical_non_density_is_unmet():
    r = vf.verify_heisenberg_classical(np.diag([0.7, 0.7]), SX, SY)
    assert r.outcome == "unmet" and r.hypothesis("density").status == vf.UNMET
    r = vf.verify_schrodinger_classical(RHO, SX, SX + 1j * SY)
    assert r.hypothesis("B_selfadjoint").status == vf.UNMET


def test_schrodinger_classical_pauli_and_equality():
    r = vf.verify_schrodinger_classical(RHO, SX, SY)
    assert r.metadata["re_cov"] == pytest.approx(0, abs=1e-15)
    assert r.margin == pytest.approx(0.75)
    a = random_hermitian(2, 1)
    assert vf.verify_schrodinger_classical(RHO, a, a).margin == pytest.approx(0, abs=1e-12)


@given(st.integers(0, 2**31), st.integers(2, 4))
def test_schrodinger_classical_matches_direct_formula(seed, n):
    rng = np.random.default_rng(seed)
    rho = random_psd(n, rng)
    rho /= np.trace(rho).real
    a, b = random_hermitian(n, rng), random_hermitian(n, rng)
    r = vf.verify_schrodinger_classical(rho, a, b)
    assert r.margin == pytest.approx(classical_schrodinger_margin(rho, a, b), abs=1e-12)
    assert r.passed


# -- commutative range -----------------------------------------------------------


def test_commutative_range_usual_trace_reduces_to_classical():
    rng = np.random.default_rng(3)
    phi = usual_trace(BlockAlgebra((3,)))
    for _ in range(20):
        rho = random_psd(3, rng)
        rho /= np.trace(rho).real
        a, b = random_hermitian(3, rng), random_hermitian(3, rng)
        m1 = vf.verify_schrodinger_commutative_range(phi, rho, a, b).margin
        m2 = vf.verify_schrodinger_classical(rho, a, b).margin
        assert m1 == pytest.approx(m2, abs=1e-10)


def test_commutative_range_uses_primed_covariance():
    # tr(rho) = 2: V'(sx) = tr(rho sx^2) - tr(rho sx)^2 / 2 = 2
    rho = np.diag([1.5, 0.5])
    r = vf.verify_schrodinger_commutative_range(TR, rho, SX, SY)
    # V'V' = 4, Re Cov' = 0, |tr(rho [sx, sy])|^2 / 4 = |2i|^2 / 4 = 1
    assert r.margin == pytest.approx(3.0)


def test_commutative_range_blockwise_decomposition():
    alg = BlockAlgebra((2, 2))
    phi = scaled_block_trace(alg, [[1.0, 0.0], [0.0, 1.0]])
    rng = np.random.default_rng(5)
    blocks = [random_psd(2, rng, shift=0.1) for _ in range(2)]
    a_blocks = [random_hermitian(2, rng) for _ in range(2)]
    b_blocks = [random_hermitian(2, rng) for _ in range(2)]
    r = vf.verify_schrodinger_commutative_range(phi, alg.from_blocks(blocks), alg.from_blocks(a_blocks),
                                                alg.from_blocks(b_blocks))
    per_block = []
    for rho, a, b in zip(blocks, a_blocks, b_blocks):
        t = np.trace(rho).real
        # V' V' - (Re Cov')^2 - |.|^2/4 for a scalar trace with tr(rho) = t
        va = np.trace(rho @ a @ a).real - np.trace(rho @ a).real ** 2 / t
        vb = np.trace(rho @ b @ b).real - np.trace(rho @ b).real ** 2 / t
        cov = np.trace(rho @ a @ b) - np.trace(rho @ a) * np.trace(rho @ b) / t
        comm = np.trace(rho @ (a @ b - b @ a))
        per_block.append(va * vb - cov.real ** 2 - abs(comm) ** 2 / 4)
    assert r.margin == pytest.approx(min(per_block), abs=1e-12)


def test_commutative_range_equality_and_unmet_cases():
    a = random_hermitian(2, 2)
    assert vf.verify_schrodinger_commutative_range(TR, RHO, a, a).margin == pytest.approx(0, abs=1e-12)
    r = vf.verify_schrodinger_commutative_range(TR, np.zeros((2, 2)), SX, SY)
    assert r.outcome == "unmet" and r.metadata["evaluated"] is False
    inst = generate_instance(InstanceSpec(block_dims=(2, 1, 1), map_kind="composite", k=3, seed=1), 0)
    r = run_verifier("schrodinger_commutative_range", inst)
    assert r.hypothesis("commutative_range").status == vf.UNMET


def test_commutative_range_unital_variant():
    phi = center_expectation(BlockAlgebra((2, 3)))
    a = phi.domain.project(random_hermitian(5, 0))
    b = phi.domain.project(random_hermitian(5, 1))
    r = vf.verify_schrodinger_commutative_range(phi, np.eye(5), a, b, unital_variant=True)
    assert r.hypothesis("unital").status == vf.MET and r.hypothesis("tracial") is None
    assert r.outcome == "pass"


def test_conditional_expectation_schrodinger_qubit():
    # E(X) = tr(X)/2 I, rho = diag(1.5, 0.5): V = I, Cov = i/2 I, E(rho [sx, sy]) = i I
    r = vf.verify_conditional_expectation_schrodinger(CE, np.diag([1.5, 0.5]), SX, SY)
    assert r.margin == pytest.approx(0.75)
    assert np.allclose(r.lhs, I2) and np.allclose(r.rhs, 0.25 * I2)
    a = random_hermitian(2, 4)
    assert vf.verify_conditional_expectation_schrodinger(CE, np.diag([1.5, 0.5]), a, a).margin == pytest.approx(0, abs=1e-12)
    assert vf.verify_conditional_expectation_schrodinger(CE, RHO, SX, SY).outcome == "unmet"


def test_conditional_expectation_rejects_other_maps():
    inst = generate_instance(InstanceSpec(block_dims=(2, 3), map_kind="scaled-block-trace", k=2), 0)
    with pytest.raises(UnsupportedMapError):
        vf.verify_conditional_expectation_schrodinger(inst.phi, inst.rho, inst.a, inst.b)


# -- main uncertainty relation --------------------------------------------------------


def test_uncertainty_main_reduces_to_heisenberg():
    r = vf.verify_uncertainty_main(TR, TRIVIAL_OUTER, RHO, SX, SY, "relaxed")
    # V # V = 1 and |tr(rho [sx, sy])| / 2 = 1/2 with K = 1
    assert r.metadata["kantorovich"] == pytest.approx(1.0)
    assert r.margin == pytest.approx(0.5)
    assert np.asarray(r.lhs)[0, 0].real ** 2 - np.asarray(r.rhs)[0, 0].real ** 2 == pytest.approx(0.75)
    assert r.outcome == "pass"


def test_uncertainty_main_strict_mode_is_unmet():
    r = vf.verify_uncertainty_main(TR, TRIVIAL_OUTER, RHO, SX, SY, "strict")
    h = r.hypothesis("spectral_hypothesis")
    assert r.outcome == "unmet" and h.status == vf.UNMET
    assert "traceless commutator" in h.detail
    assert "final" not in r.metadata["stages"]
    assert r.metadata["m"] < 0 < r.metadata["M"]


def test_uncertainty_main_equal_operators_pass():
    a = random_hermitian(2, 5)
    r = vf.verify_uncertainty_main(TR, TRIVIAL_OUTER, RHO, a, a, "relaxed")
    assert r.outcome == "pass" and r.metadata["kantorovich"] == 1.0
    with pytest.raises(ValueError):
        vf.verify_uncertainty_main(TR, TRIVIAL_OUTER, RHO, a, a, "loose")


def test_uncertainty_main_stages_on_random_composites():
    for t in range(30):
        inst = generate_instance(InstanceSpec(block_dims=(2, 3), map_kind="composite", k=2, seed=11), t)
        r = run_verifier("uncertainty_main", inst)
        st_ = r.metadata["stages"]
        assert set(st_) >= {"commutative_range", "push_through", "mean_bound"}
        assert all(v >= -r.metadata["bound"] for v in st_.values())
        assert r.outcome in ("pass", "unmet")


# -- Kadison family -------------------------------------------------------------------


def test_kadison_scalar_operator():
    r = vf.verify_kadison_family(CE, 2.0 * I2)
    assert r.metadata["stages"]["kadison"] == pytest.approx(0, abs=1e-12)
    assert r.metadata["stages"]["reverse"] == pytest.approx(0, abs=1e-12)
    r = vf.verify_kadison_family(CE, 2.0 * I2, m=1.0, big_m=3.0)
    k = 4 / 3
    assert r.metadata["stages"]["reverse"] == pytest.approx((k - 1) * 4)


def test_kadison_center_expectation_reverse_margin():
    r = vf.verify_kadison_family(CE, np.diag([1.0, 3.0]), m=1.0, big_m=3.0)
    assert r.metadata["stages"]["reverse"] == pytest.approx(1 / 3)
    assert r.metadata["reverse_operator"] == "A"
    assert r.outcome == "pass"


def test_kadison_indefinite_operator_uses_absolute_value():
    a = np.diag([-2.0, 1.0])
    r = vf.verify_kadison_family(CE, a)
    # Phi(A^2) - Phi(A)^2 = 5/2 - 1/4
    assert r.metadata["stages"]["kadison"] == pytest.approx(2.25)
    assert r.metadata["reverse_operator"] == "|A|"
    assert "abs_bound" in r.metadata["stages"]
    assert r.outcome == "pass"


def test_kadison_non_unital_is_unmet():
    phi = scaled_block_trace(M2, [[1.0]])
    assert vf.verify_kadison_family(phi, np.diag([1.0, 3.0])).hypothesis("unital").status == vf.UNMET


# -- skew information family ----------------------------------------------------------


def test_skew_nonneg_values():
    r = vf.verify_skew_nonneg(TR, RHO, SX, 0.5)
    assert r.margin == pytest.approx(I_HALF, abs=1e-12)
    assert vf.verify_skew_nonneg(TR, RHO, I2, 0.5).margin == pytest.approx(0, abs=1e-15)
    assert vf.verify_skew_nonneg(TR, RHO, random_hermitian(2, 1), 1.0).margin == pytest.approx(0, abs=1e-12)


def test_alpha_convexity_values():
    assert vf.verify_alpha_convexity(TR, RHO, SX, 0.3, 0.3).margin == pytest.approx(0, abs=1e-15)
    r = vf.verify_alpha_convexity(TR, RHO, SX, 0.0, 1.0)
    assert r.margin == pytest.approx(2 - 4 * np.sqrt(0.1875), abs=1e-12)
    assert r.margin == pytest.approx(0.2679, abs=1e-4)


def test_skew_monotone_values():
    assert vf.verify_skew_monotone_half(TR, RHO, SX, 0.5).margin == pytest.approx(0, abs=1e-15)
    r = vf.verify_skew_monotone_half(TR, RHO, SX, 0.25)
    assert r.margin == pytest.approx(skew_closed_form(0.75, 0.5) - skew_closed_form(0.75, 0.25), abs=1e-12)
    assert r.margin == pytest.approx(0.0330, abs=1e-3)
    r = vf.verify_skew_monotone_half(TR, RHO, SX, 1.0)
    assert r.margin == pytest.approx(I_HALF, abs=1e-12)


def test_skew_sum_values():
    a = random_hermitian(2, 3)
    r = vf.verify_skew_sum_nonneg(TR, RHO, a, 0.3)
    assert r.margin == pytest.approx(2 * vf.verify_skew_nonneg(TR, RHO, a, 0.3).margin, abs=1e-12)
    e12 = np.array([[0, 1], [0, 0]], dtype=complex)
    p, q = 0.75, 0.25
    r = vf.verify_skew_sum_nonneg(TR, RHO, e12, 0.5)
    assert r.margin == pytest.approx(p + q - 2 * np.sqrt(p * q), abs=1e-12)
    assert r.metadata["route_gap"] <= 1e-12
    assert vf.verify_skew_sum_nonneg(TR, RHO, np.zeros((2, 2)), 0.5).margin == 0


def test_corr_cauchy_schwarz_qubit():
    rho = np.diag([1.5, 0.5])
    for alpha in (0.25, 0.5):
        r = vf.verify_corr_cauchy_schwarz(CE, rho, SX, SY, alpha)
        r1, r2 = 1.5 ** (1 - alpha), 0.5 ** (1 - alpha)
        d1, d2 = 1.5 ** alpha, 0.5 ** alpha
        skew = (2 - (r1 * d2 + r2 * d1)) / 2
        assert r.margin == pytest.approx(skew ** 2, abs=1e-12)
    a = random_hermitian(2, 6)
    assert vf.verify_corr_cauchy_schwarz(CE, rho, a, a, 0.3).margin == pytest.approx(0, abs=1e-12)


def test_skew_le_variance_and_synthetic_falsehood():
    r = vf.verify_skew_le_variance(TR, RHO, SX)
    assert r.margin == pytest.approx(1 - I_HALF, abs=1e-12)
    assert vf.verify_skew_le_variance(TR, RHO, I2).margin == pytest.approx(0, abs=1e-15)
    s = vf.verify_synthetic_variance_le_skew(TR, RHO, SX)
    assert s.margin == pytest.approx(-(1 - I_HALF), abs=1e-12) and s.outcome == "fail"


@pytest.mark.parametrize("p", [0.6, 0.75, 0.9])
def test_luo_refined_saturates_on_qubit(p):
    r = vf.verify_luo_refined(TR, qubit_state(p), SX, SY)
    assert abs(r.margin) <= 1e-9
    assert np.asarray(r.rhs)[0, 0].real == pytest.approx((2 * p - 1) ** 2)
    assert r.outcome == "pass"
    assert r.metadata["refinement_margin"] >= 0


def test_luo_refined_equal_operators_and_bad_density():
    a = random_hermitian(2, 1)
    assert vf.verify_luo_refined(TR, RHO, a, a).outcome == "pass"
    r = vf.verify_luo_refined(CE, np.diag([3.0, -1.0]), SX, SY)
    assert r.outcome == "unmet"


def test_mean_subadditive_values():
    r = vf.verify_mean_subadditive(CE, np.diag([1.0, 4.0]), np.diag([4.0, 1.0]))
    assert r.margin == pytest.approx(0.5)
    a = random_psd(2, 3, shift=0.1)
    assert vf.verify_mean_subadditive(CE, a, a).margin == pytest.approx(0, abs=1e-12)
    r = vf.verify_mean_subadditive(CE, np.diag([1.0, 0.0]), I2)
    assert r.outcome == "unmet" and r.metadata["evaluated"] is False


def test_ij_identities():
    r = vf.verify_ij_identities(TR, RHO, SX)
    assert r.metadata["defect_i"] <= 1e-10 and r.metadata["defect_j"] <= 1e-10
    assert np.asarray(r.lhs)[0, 0].real == pytest.approx(I_HALF)
    r = vf.verify_ij_identities(TR, RHO, I2)
    assert opnorm_of(r.lhs) <= 1e-12 and opnorm_of(r.rhs) <= 1e-12
    inst = generate_instance(InstanceSpec(block_dims=(2, 3), seed=2), 0)
    assert run_verifier("ij_identities", inst).passed


def opnorm_of(x):
    return float(np.linalg.norm(np.asarray(x), 2))


# -- reports and registry --------------------------------------------------------------


def test_report_json_round_trip():
    inst = generate_instance(InstanceSpec(block_dims=(2, 3), map_kind="composite", k=2), 1)
    for tid in theorem_ids(include_synthetic=True):
        if not supports(tid, inst.phi):
            continue
        r = run_verifier(tid, inst)
        back = vf.VerifierReport.from_json(json.loads(json.dumps(r.to_json())))
        assert back.to_json() == json.loads(json.dumps(r.to_json()))
        assert back.outcome == r.outcome and back.margin == r.margin


def test_report_schema_errors():
    with pytest.raises(SchemaError):
        vf.VerifierReport.from_json({"schema": "nope"})
    d = vf.verify_heisenberg_classical(RHO, SX, SY).to_json()
    del d["margin"]
    with pytest.raises(SchemaError):
        vf.VerifierReport.from_json(d)


def test_non_finite_margin_is_numerical_error():
    with pytest.raises(NumericalError):
        vf._finish("x", [], None, None, float("nan"), 1.0, Tolerance())


def test_registry_lookup():
    assert "synthetic_variance_le_skew" not in theorem_ids()
    assert len(theorem_ids(include_synthetic=True)) == len(THEOREMS)
    with pytest.raises(Exception):
        get_theorem("bogus")
    inst = generate_instance(InstanceSpec(block_dims=(2, 3), map_kind="composite", k=2), 0)
    with pytest.raises(UnsupportedMapError):
        run_verifier("luo_refined", inst)
    with pytest.raises(UnsupportedMapError):
        run_verifier("heisenberg_classical", inst)


def test_tolerance_controls_verdict():
    tight = Tolerance(rel=0.0, abs=0.0)
    r = vf.verify_synthetic_variance_le_skew(TR, RHO, I2, tight)
    assert r.margin == pytest.approx(0, abs=1e-15)
    loose = Tolerance(rel=0.0, abs=1.0)
    assert vf.verify_synthetic_variance_le_skew(TR, RHO, SX, loose).passed


def test_sigma_z_is_diagonal_fixture():
    assert np.allclose(SZ, np.diag([1, -1]))


@pytest.mark.parametrize("tid", ["skew_nonneg", "alpha_convexity", "skew_monotone_half", "skew_sum_nonneg",
                                 "corr_cauchy_schwarz", "skew_le_variance", "luo_refined", "ij_identities",
                                 "synthetic_variance_le_skew"])
def test_indefinite_rho_is_reported_not_raised(tid):
    inst = generate_instance(InstanceSpec(block_dims=(2,)), 0)
    inst = inst.replace(rho=np.diag([3.0, -1.0]).astype(complex))
    r = run_verifier(tid, inst)
    assert r.outcome == "unmet" and r.metadata["evaluated"] is False
