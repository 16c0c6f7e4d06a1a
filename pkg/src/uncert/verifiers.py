"""One verifier per inequality: check hypotheses, evaluate both sides, report a margin.

Operator inequalities ``LHS >= RHS`` report ``margin = lambda_min(LHS - RHS)``;
scalar ones report ``LHS - RHS``. A report passes when every hypothesis is
``met`` and ``margin >= -tolerance.bound(scale)`` with
``scale = max(||LHS||, ||RHS||, 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import quantities as qt
from .algebra import CENTER_EXPECTATION, PositiveAssignment, TracialMap
from .errors import NotPSDError, NumericalError, SchemaError, UnsupportedMapError
from .io import matrix_from_json, matrix_to_json
from .linalg import (
    DEFAULT_TOL,
    Tolerance,
    as_matrix,
    commutator,
    eig_hermitian,
    geometric_mean,
    hermitize,
    is_hermitian,
    lambda_min,
    matrix_abs,
    matrix_power,
    opnorm,
    spectrum_interval,
)

__all__ = [
    "MET",
    "UNMET",
    "REGULARIZED",
    "HypothesisCheck",
    "VerifierReport",
    "verify_heisenberg_classical",
    "verify_schrodinger_classical",
    "verify_schrodinger_commutative_range",
    "verify_conditional_expectation_schrodinger",
    "verify_uncertainty_main",
    "verify_kadison_family",
    "verify_skew_nonneg",
    "verify_alpha_convexity",
    "verify_skew_monotone_half",
    "verify_skew_sum_nonneg",
    "verify_corr_cauchy_schwarz",
    "verify_skew_le_variance",
    "verify_luo_refined",
    "verify_mean_subadditive",
    "verify_ij_identities",
    "verify_synthetic_variance_le_skew",
]

MET = "met"
UNMET = "unmet"
REGULARIZED = "regularized"

REPORT_SCHEMA = "uncert.report/1"


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    status: str
    detail: str = ""

    def to_json(self) -> dict:
        return {"name": self.name, "status": self.status, "detail": self.detail}


def _value_to_json(v):
    if v is None:
        return None
    if isinstance(v, (float, int)):
        return float(v)
    return matrix_to_json(v)


def _value_from_json(v):
    if v is None:
        return None
    if isinstance(v, (float, int)):
        return float(v)
    return matrix_from_json(v)


@dataclass(frozen=True, eq=False)
class VerifierReport:
    theorem: str
    hypotheses: tuple
    lhs: object
    rhs: object
    margin: float
    passed: bool
    tolerance: Tolerance
    mode: str = "standard"
    metadata: dict = field(default_factory=dict)

    @property
    def hypotheses_met(self) -> bool:
        return all(h.status == MET for h in self.hypotheses)

    @property
    def outcome(self) -> str:
        """``"pass"``, ``"fail"`` (hypotheses met, margin too negative) or ``"unmet"``."""
        if not self.hypotheses_met:
            return "unmet"
        return "pass" if self.passed else "fail"

    def hypothesis(self, name: str) -> HypothesisCheck | None:
        for h in self.hypotheses:
            if h.name == name:
                return h
        return None

    def to_json(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "theorem": self.theorem,
            "hypotheses": [h.to_json() for h in self.hypotheses],
            "margin": float(self.margin),
            "pass": bool(self.passed),
            "mode": self.mode,
            "tolerance": self.tolerance.to_dict(),
            "metadata": dict(self.metadata),
            "lhs": _value_to_json(self.lhs),
            "rhs": _value_to_json(self.rhs),
        }

    @classmethod
    def from_json(cls, d) -> "VerifierReport":
        if not isinstance(d, dict) or d.get("schema") != REPORT_SCHEMA:
            raise SchemaError(f"not an {REPORT_SCHEMA} document")
        try:
            return cls(
                theorem=d["theorem"],
                hypotheses=tuple(HypothesisCheck(h["name"], h["status"], h.get("detail", "")) for h in d["hypotheses"]),
                lhs=_value_from_json(d.get("lhs")),
                rhs=_value_from_json(d.get("rhs")),
                margin=float(d["margin"]),
                passed=bool(d["pass"]),
                tolerance=Tolerance.from_dict(d["tolerance"]),
                mode=d.get("mode", "standard"),
                metadata=dict(d.get("metadata", {})),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed report: {exc}") from exc


# -- helpers -----------------------------------------------------------------


def _finish(theorem, hyps, lhs, rhs, margin, scale, tol, mode="standard", **meta) -> VerifierReport:
    margin = float(margin)
    if not np.isfinite(margin):
        raise NumericalError(f"{theorem}: non-finite margin")
    bound = tol.bound(scale)
    meta["scale"] = float(max(scale, 1.0))
    meta["bound"] = float(bound)
    hyps = tuple(hyps)
    ok = all(h.status == MET for h in hyps) and margin >= -bound
    return VerifierReport(theorem, hyps, lhs, rhs, margin, bool(ok), tol, mode, meta)


def _skip_if_indefinite(theorem, hyps, rho, tol):
    """Unevaluated hypothesis-unmet report when ``rho`` has no real powers."""
    lm = lambda_min(hermitize(rho))
    if lm >= -tol.bound(opnorm(rho)):
        return None
    if all(h.status == MET for h in hyps):
        hyps = list(hyps) + [HypothesisCheck("rho_positive", UNMET, f"lambda_min={lm:.3e}")]
    return _finish(theorem, hyps, None, None, 0.0, 1.0, tol, evaluated=False)


def _op_margin(lhs, rhs):
    return lambda_min(lhs - rhs), max(opnorm(lhs), opnorm(rhs), 1.0)


def _check(name, ok, detail="") -> HypothesisCheck:
    return HypothesisCheck(name, MET if ok else UNMET, detail)


def _h_selfadjoint(name, x):
    return _check(f"{name}_selfadjoint", is_hermitian(x))


def _h_positive_element(name, x, tol):
    lm = lambda_min(hermitize(x))
    return _check(f"{name}_positive", lm >= -tol.bound(opnorm(x)), f"lambda_min={lm:.3e}")


def _h_tracial(phi: TracialMap):
    # every built-in map is a combination of block traces
    return HypothesisCheck("tracial", MET, f"{phi.kind}: block-trace map")


def _h_positive_map(phi: TracialMap):
    ok, detail = phi.positivity_certificate
    return _check("positive", ok, detail)


def _h_two_positive(phi: TracialMap):
    ok, detail = phi.positivity_certificate
    if ok:
        detail = "factors through a commutative algebra, hence completely positive"
    return _check("two_positive", ok, detail)


def _h_unital(phi: TracialMap, tol):
    d = phi.unital_defect
    return _check("unital", d <= tol.bound(1.0), f"||phi(I) - I|| = {d:.3e}")


def _h_phi_density(phi: TracialMap, rho, tol, name="phi_density"):
    # several verifiers share one (phi, rho) pair, so remember the verdict on the map
    memo = phi.__dict__.setdefault("_density_memo", {})
    key = (rho.tobytes(), rho.shape[0], tol.rel, tol.abs)
    hit = memo.get(key)
    if hit is None:
        lm = lambda_min(rho)
        out = phi(rho)
        defect = opnorm(out - phi.codomain.identity())
        ok = lm >= -tol.bound(opnorm(rho)) and defect <= tol.bound(opnorm(out))
        hit = (ok, f"lambda_min(rho)={lm:.3e}, ||phi(rho) - I||={defect:.3e}")
        if len(memo) > 16:
            memo.clear()
        memo[key] = hit
    return _check(name, *hit)


def _h_commutative_range(phi: TracialMap):
    if phi.codomain.is_commutative:
        return HypothesisCheck("commutative_range", MET, "codomain is commutative")
    d = phi.range_defect
    return _check("commutative_range", d <= 1e-10, f"largest relative commutator of range generators {d:.3e}")


def supports_conditional_expectation(phi: TracialMap) -> bool:
    return phi.kind == CENTER_EXPECTATION or phi.has_scalar_range


def _h_conditional_expectation(phi: TracialMap):
    if phi.kind == CENTER_EXPECTATION:
        return HypothesisCheck("conditional_expectation", MET, "trace onto the center")
    if phi.has_scalar_range:
        return HypothesisCheck("conditional_expectation", MET, "scalar-valued tracial functional (bimodule over C)")
    raise UnsupportedMapError(
        f"{phi.kind} map with codomain {phi.codomain.block_dims} is not a center-valued conditional expectation"
    )


def _embed(phi: TracialMap, y):
    """Codomain value as an element of the domain (center-valued maps only)."""
    if phi.codomain.dim == 1:
        return y[0, 0] * phi.domain.identity()
    return y


def _tr(x) -> complex:
    return complex(np.trace(x))


# -- classical relations ----------------------------------------------------


def _classical_parts(rho, a, b, tol):
    rho, a, b = as_matrix(rho), as_matrix(a), as_matrix(b)
    tr_rho = _tr(rho).real
    lm = lambda_min(hermitize(rho))
    hyps = [
        _check("density", abs(tr_rho - 1.0) <= tol.bound(1.0) and lm >= -tol.bound(1.0),
               f"tr(rho)={tr_rho:.12g}, lambda_min={lm:.3e}"),
        _h_selfadjoint("A", a),
        _h_selfadjoint("B", b),
    ]
    ea, eb = _tr(rho @ a), _tr(rho @ b)
    va = (_tr(rho @ a @ a) - ea * ea).real
    vb = (_tr(rho @ b @ b) - eb * eb).real
    cov = _tr(rho @ a @ b) - ea * eb
    comm = _tr(rho @ commutator(a, b))
    return hyps, va, vb, cov, comm


def verify_heisenberg_classical(rho, a, b, tol: Tolerance = DEFAULT_TOL) -> VerifierReport:
    """``V(A) V(B) >= |Tr(rho [A, B])|^2 / 4`` for a density matrix."""
    hyps, va, vb, _, comm = _classical_parts(rho, a, b, tol)
    lhs = va * vb
    rhs = 0.25 * abs(comm) ** 2
    return _finish("heisenberg_classical", hyps, lhs, rhs, lhs - rhs, max(abs(lhs), rhs), tol,
                   variance_a=va, variance_b=vb)


def verify_schrodinger_classical(rho, a, b, tol: Tolerance = DEFAULT_TOL) -> VerifierReport:
    """``V(A) V(B) - |Re Cov(A, B)|^2 >= |Tr(rho [A, B])|^2 / 4``."""
    hyps, va, vb, cov, comm = _classical_parts(rho, a, b, tol)
    lhs = va * vb
    rhs = cov.real ** 2 + 0.25 * abs(comm) ** 2
    return _finish("schrodinger_classical", hyps, lhs, rhs, lhs - rhs, max(abs(lhs), rhs), tol,
                   variance_a=va, variance_b=vb, re_cov=cov.real)


# -- tracial-map variance relations ------------------------------------------


def _schrodinger_operator(va, vb, cov, comm):
    re = 0.5 * (cov + cov.conj().T)
    p1 = va @ vb
    p2 = vb @ va
    lhs = hermitize(0.5 * (p1 + p2) - re @ re)
    rhs = hermitize(0.25 * comm.conj().T @ comm)
    return lhs, rhs, opnorm(p1 - p2)


def verify_schrodinger_commutative_range(phi: TracialMap, rho, a, b, tol: Tolerance = DEFAULT_TOL,
                                         *, unital_variant: bool = False) -> VerifierReport:
    """``V'(A) V'(B) - |Re Cov'(A, B)|^2 >= |phi(rho [A, B])|^2 / 4`` for commutative-range ``phi``.

    With ``unital_variant=True`` and ``rho = I`` the traciality hypothesis is
    replaced by unitality.
    """
    rho, a, b = as_matrix(rho), as_matrix(a), as_matrix(b)
    hyps = []
    if unital_variant and opnorm(rho - np.eye(rho.shape[0])) <= tol.bound(1.0):
        hyps.append(_h_unital(phi, tol))
    else:
        hyps.append(_h_tracial(phi))
    hyps += [_h_positive_map(phi), _h_commutative_range(phi), _h_positive_element("rho", rho, tol),
             _h_selfadjoint("A", a), _h_selfadjoint("B", b)]
    p = hermitize(phi(rho))
    lo, _ = spectrum_interval(p)
    if lo <= tol.bound(opnorm(p)):
        hyps.append(HypothesisCheck("phi_rho_definite", UNMET, f"lambda_min(phi(rho))={lo:.3e}"))
        return _finish("schrodinger_commutative_range", hyps, None, None, 0.0, 1.0, tol, evaluated=False)
    hyps.append(HypothesisCheck("phi_rho_definite", MET, f"lambda_min(phi(rho))={lo:.3e}"))
    p_inv = qt._phi_rho_inverse(phi, rho, tol)
    va = hermitize(qt._cov_prime(phi, rho, a, a, tol, p_inv))
    vb = hermitize(qt._cov_prime(phi, rho, b, b, tol, p_inv))
    cov = qt._cov_prime(phi, rho, a, b, tol, p_inv)
    comm = phi(rho @ commutator(a, b))
    lhs, rhs, dev = _schrodinger_operator(va, vb, cov, comm)
    margin, scale = _op_margin(lhs, rhs)
    return _finish("schrodinger_commutative_range", hyps, lhs, rhs, margin, scale, tol,
                   ordering_deviation=dev)


def verify_conditional_expectation_schrodinger(e: TracialMap, rho, a, b, tol: Tolerance = DEFAULT_TOL) -> VerifierReport:
    """``V(A) V(B) - |Re Cov(A, B)|^2 >= |E(rho [A, B])|^2 / 4`` for a tracial conditional expectation."""
    rho, a, b = as_matrix(rho), as_matrix(a), as_matrix(b)
    hyps = [_h_conditional_expectation(e), _h_phi_density(e, rho, tol, "e_density"),
            _h_selfadjoint("A", a), _h_selfadjoint("B", b)]
    va = hermitize(qt._cov(e, rho, a, a))
    vb = hermitize(qt._cov(e, rho, b, b))
    cov = qt._cov(e, rho, a, b)
    comm = e(rho @ commutator(a, b))
    lhs, rhs, dev = _schrodinger_operator(va, vb, cov, comm)
    margin, scale = _op_margin(lhs, rhs)
    return _finish("conditional_expectation_schrodinger", hyps, lhs, rhs, margin, scale, tol,
                   ordering_deviation=dev)


def verify_uncertainty_main(phi1: TracialMap, phi2: PositiveAssignment, rho, a, b, mode: str = "relaxed",
                            tol: Tolerance = DEFAULT_TOL) -> VerifierReport:
    """Noncommutative Heisenberg relation ``V(A) # V(B) >= |Phi(rho [A, B])| / (2 sqrt(K))``, ``Phi = phi2 o phi1``.

    Stages, each with its own margin in ``metadata["stages"]``:

    * ``commutative_range``: ``V'(A) # V'(B) >= |phi1(rho [A, B])| / 2`` entrywise in ``C^k``;
    * ``push_through``: the block matrices
      ``[[phi2(y_X^2 / y_rho), Phi(rho X)], [Phi(rho X), Phi(rho)]]`` are PSD for ``X = A, B``;
    * ``mean_bound``: ``V(A) # V(B) >= phi2(|phi1(rho [A, B])|) / 2``;
    * ``final``: the Kantorovich-weighted bound.

    ``mode="strict"`` reads ``(m, M)`` from ``sp(-i rho^{1/2} [A, B] rho^{1/2})``;
    that spectrum is never inside ``(0, inf)`` for matrices (the commutator is
    traceless and congruence preserves inertia), so the final stage is skipped
    and the report is hypothesis-unmet. ``mode="relaxed"`` reads ``(m, M)``
    from ``sp(|phi1(rho [A, B])|)``.
    """
    if mode not in ("strict", "relaxed"):
        raise ValueError(f"mode must be 'strict' or 'relaxed', got {mode!r}")
    rho, a, b = as_matrix(rho), as_matrix(a), as_matrix(b)
    alg = phi1.domain
    cod = phi2.codomain
    hyps = [
        _h_tracial(phi1),
        _check("phi1_positive", bool(np.all(phi1.coeffs >= 0)), "nonnegative block-trace coefficients"),
        _check("phi2_positive", all(lambda_min(q) >= -tol.bound(opnorm(q)) for q in phi2.targets)),
    ]
    q_sum_defect = opnorm(phi2.targets.sum(axis=0) - np.eye(cod.dim))
    hyps.append(_check("phi2_unital", q_sum_defect <= tol.bound(1.0), f"||sum Q_j - I|| = {q_sum_defect:.3e}"))

    def inner(x):
        return phi1.weights(x)

    def outer(y):
        return phi2(y)

    y_rho = inner(rho).real
    big_rho = outer(y_rho)
    dens_defect = opnorm(big_rho - np.eye(cod.dim))
    lm_rho = lambda_min(hermitize(rho))
    hyps.append(_check("phi_density", lm_rho >= -tol.bound(opnorm(rho)) and dens_defect <= tol.bound(1.0),
                       f"lambda_min(rho)={lm_rho:.3e}, ||Phi(rho) - I||={dens_defect:.3e}"))
    hyps += [_h_selfadjoint("A", a), _h_selfadjoint("B", b)]
    rho_def = bool(np.all(y_rho > tol.bound(float(np.max(np.abs(y_rho), initial=1.0)))))
    hyps.append(_check("phi1_rho_definite", rho_def, f"min phi1(rho) = {float(np.min(y_rho)):.3e}"))

    comm = commutator(a, b)
    y_c = inner(rho @ comm)  # purely imaginary
    abs_c = np.abs(y_c)
    stages = {}
    scales = []

    # (i) commutative-range stage
    if rho_def:
        y_a, y_a2 = inner(rho @ a).real, inner(rho @ a @ a).real
        y_b, y_b2 = inner(rho @ b).real, inner(rho @ b @ b).real
        va1 = y_a2 - y_a ** 2 / y_rho
        vb1 = y_b2 - y_b ** 2 / y_rho
        gm1 = np.sqrt(np.maximum(va1, 0.0) * np.maximum(vb1, 0.0))
        s1 = gm1 - 0.5 * abs_c
        stages["commutative_range"] = float(np.min(s1))
        scales.append(max(float(np.max(gm1)), float(np.max(0.5 * abs_c)), 1.0))

        # (ii) push-through blocks
        worst = np.inf
        for y_x in (y_a, y_b):
            top = outer(y_x ** 2 / y_rho)
            off = outer(y_x)
            n = top.shape[0]
            blk = np.empty((2 * n, 2 * n), dtype=np.complex128)
            blk[:n, :n] = top
            blk[:n, n:] = off
            blk[n:, :n] = off.conj().T
            blk[n:, n:] = big_rho
            worst = min(worst, lambda_min(blk))
            scales.append(max(opnorm(top), opnorm(big_rho), 1.0))
        stages["push_through"] = float(worst)

    # variance-side quantities in the codomain of Phi
    def big(x):
        return outer(inner(x))

    big_a, big_b = big(rho @ a), big(rho @ b)
    v_a = hermitize(big(rho @ a @ a) - big_a @ big_a)
    v_b = hermitize(big(rho @ b @ b) - big_b @ big_b)
    meta = {}
    try:
        gm, gm_meta = geometric_mean(v_a, v_b, tol, info=True)
    except NotPSDError as exc:
        raise NumericalError(f"variance is not PSD: {exc}") from exc
    meta["variance_mean_regularized"] = gm_meta["regularized"]
    mean_rhs = 0.5 * outer(abs_c)
    m_iv, sc_iv = _op_margin(gm, mean_rhs)
    stages["mean_bound"] = m_iv
    scales.append(sc_iv)

    big_c = outer(y_c)
    abs_big_c = matrix_abs(big_c)
    rhs = None
    k_const = None
    if mode == "strict":
        hyps.append(HypothesisCheck("phi1_unital", MET if np.allclose(phi1.coeffs @ np.asarray(alg.block_dims, float), 1.0, atol=tol.bound(1.0)) else UNMET))
        s = matrix_power(rho, 0.5, tol)
        op = hermitize(-1j * s @ comm @ s)
        lo, hi = spectrum_interval(op)
        ok = lo > tol.bound(max(abs(lo), abs(hi), 1.0))
        detail = (f"sp(-i rho^1/2 [A,B] rho^1/2) in [{lo:.3e}, {hi:.3e}]"
                  + ("" if ok else "; traceless commutator: a finite-dimensional commutator has no positive-definite congruent image"))
        hyps.append(_check("spectral_hypothesis", ok, detail))
        if ok:
            k_const = qt.kantorovich(lo, hi)
        meta["m"], meta["M"] = lo, hi
    else:
        c_scale = max(float(np.max(abs_c, initial=0.0)), 1.0)
        if float(np.max(abs_c, initial=0.0)) <= tol.bound(c_scale):
            # RHS vanishes for every K
            hyps.append(HypothesisCheck("spectral_hypothesis_relaxed", MET, "zero commutator image: right-hand side is 0"))
            k_const = 1.0
            meta["m"], meta["M"] = 0.0, 0.0
        else:
            lo, hi = float(np.min(abs_c)), float(np.max(abs_c))
            ok = lo > tol.bound(c_scale)
            hyps.append(_check("spectral_hypothesis_relaxed", ok,
                               f"sp(|phi1(rho [A,B])|) in [{lo:.3e}, {hi:.3e}]"
                               + ("" if ok else "; degenerate commutator image")))
            if ok:
                k_const = qt.kantorovich(lo, hi)
            meta["m"], meta["M"] = lo, hi
    if k_const is not None:
        rhs = abs_big_c / (2.0 * np.sqrt(k_const))
        m_fin, sc_fin = _op_margin(gm, rhs)
        stages["final"] = m_fin
        scales.append(sc_fin)
        meta["kantorovich"] = k_const
    meta["stages"] = stages
    # the push-through blocks are singular by construction, so their margin
    # only matters when it is violated
    scale = max(scales)
    margin = min(stages.values())
    if "final" in stages and margin >= -tol.bound(scale):
        margin = stages["final"]
    return _finish("uncertainty_main", hyps, gm, rhs, margin, scale, tol, mode, **meta)


def verify_kadison_family(phi: TracialMap, a, m: float | None = None, big_m: float | None = None,
                          tol: Tolerance = DEFAULT_TOL) -> VerifierReport:
    """Kadison's inequality, its Kantorovich reverse and the ``|Phi(A)|`` bound.

    Margins (``metadata["stages"]``):
    ``kadison = lambda_min(Phi(A^*A) - Phi(A)^*Phi(A))``,
    ``reverse = lambda_min(K Phi(P)^2 - Phi(P^2))`` where ``P = A`` when
    ``0 < mI <= A <= MI`` and ``P = |A|`` otherwise (``|A|`` always has its
    spectrum in ``[m, M]`` under the two-sided hypothesis), and
    ``abs_bound = lambda_min(sqrt(K) Phi(|A|) - |Phi(A)|)``.
    ``m``/``M`` default to the extreme singular values of ``A``.
    """
    a = as_matrix(a)
    herm = is_hermitian(a)
    if herm:
        eig = eig_hermitian(a).eigenvalues
        sv = np.abs(eig)
    else:
        sv = np.linalg.svd(a, compute_uv=False)
    if m is None:
        m = float(sv.min())
    if big_m is None:
        big_m = float(sv.max())
    m, big_m = float(m), float(big_m)
    hyps = [_h_unital(phi, tol), _h_two_positive(phi)]
    stages = {}
    scales = []
    meta = {"m": m, "M": big_m}

    phi_a = phi(a)
    lhs_k = phi(a.conj().T @ a)
    rhs_k = phi_a.conj().T @ phi_a
    mk, sk = _op_margin(lhs_k, rhs_k)
    stages["kadison"] = mk
    scales.append(sk)

    slack = tol.bound(max(big_m, 1.0))
    k_const = qt.kantorovich(m, big_m) if 0 < m <= big_m else None
    normal = herm or opnorm(a @ a.conj().T - a.conj().T @ a) <= tol.bound(opnorm(a) ** 2)
    if normal:
        if not herm:
            eig = np.linalg.eigvals(a)
        in_two_sided = bool(np.all((np.abs(eig) >= m - slack) & (np.abs(eig) <= big_m + slack)))
    else:
        in_two_sided = False
    abs_ok = k_const is not None and bool(np.all((sv >= m - slack) & (sv <= big_m + slack)))
    abs_a = matrix_abs(a)

    direct = herm and k_const is not None and eig[0] >= m - slack and eig[-1] <= big_m + slack
    if direct:
        p, which = hermitize(a), "A"
    elif abs_ok:
        p, which = abs_a, "|A|"
    else:
        p = None
    hyps.append(_check("reverse_spectrum", p is not None,
                       f"0 < mI <= {which} <= MI" if p is not None else "no positive operator with spectrum in [m, M]"))
    if p is not None:
        fp = hermitize(phi(p))
        lhs_r = k_const * fp @ fp
        rhs_r = phi(p @ p)
        mr, sr = _op_margin(lhs_r, rhs_r)
        stages["reverse"] = mr
        scales.append(sr)
        meta["reverse_operator"] = which
    hyps.append(_check("two_sided_spectrum", in_two_sided and k_const is not None,
                       "sp(A) in [m, M] u [-M, -m]" if in_two_sided else "spectral hypothesis fails or A is not normal"))
    if in_two_sided and k_const is not None:
        lhs_a = np.sqrt(k_const) * phi(abs_a)
        rhs_a = matrix_abs(phi_a)
        ma, sa = _op_margin(lhs_a, rhs_a)
        stages["abs_bound"] = ma
        scales.append(sa)
    if k_const is not None:
        meta["kantorovich"] = k_const
    meta["stages"] = stages
    return _finish("kadison_family", hyps, lhs_k, rhs_k, min(stages.values()), max(scales), tol, **meta)


# -- skew information ---------------------------------------------------------


def _skew_hyps(phi, rho, a, tol):
    return [_h_tracial(phi), _h_positive_map(phi), _h_positive_element("rho", rho, tol), _h_selfadjoint("A", a)]


def verify_skew_nonneg(phi: TracialMap, rho, a, alpha: float, tol: Tolerance = DEFAULT_TOL) -> VerifierReport:
    """``I^alpha(A) >= 0`` for self-adjoint ``A`` and positive ``rho``."""
    alpha = qt.check_alpha(alpha)
    rho, a = as_matrix(rho), as_matrix(a)
    hyps = _skew_hyps(phi, rho, a, tol)
    skip = _skip_if_indefinite("skew_nonneg", hyps, rho, tol)
    if skip is not None:
        return skip
    i = hermitize(qt._corr(phi, rho, a, a, alpha, tol))
    zero = np.zeros_like(i)
    margin, scale = _op_margin(i, zero)
    return _finish("skew_nonneg", hyps, i, zero, margin, scale, tol, alpha=alpha)


def verify_alpha_convexity(phi: TracialMap, rho, a, alpha: float, beta: float,
                           tol: Tolerance = DEFAULT_TOL) -> VerifierReport:
    """Midpoint convexity of ``alpha -> phi(rho^alpha A rho^{1-alpha} A)``."""
    alpha, beta = qt.check_alpha(alpha), qt.check_alpha(beta)
    rho, a = as_matrix(rho), as_matrix(a)
    hyps = _skew_hyps(phi, rho, a, tol)
    skip = _skip_if_indefinite("alpha_convexity", hyps, rho, tol)
    if skip is not None:
        return skip
    mid = 0.5 * (alpha + beta)
    fa = qt.alpha_overlap(phi, rho, a, alpha, tol)
    fb = qt.alpha_overlap(phi, rho, a, beta, tol)
    fm = qt.alpha_overlap(phi, rho, a, mid, tol)
    lhs = fa + fb
    rhs = 2.0 * fm
    margin, scale = _op_margin(lhs, rhs)
    return _finish("alpha_convexity", hyps, lhs, rhs, margin, scale, tol, alpha=alpha, beta=beta)


def verify_skew_monotone_half(phi: TracialMap, rho, a, alpha: float, tol: Tolerance = DEFAULT_TOL) -> VerifierReport:
    """``I^alpha(A) <= I^{1/2}(A)``."""
    alpha = qt.check_alpha(alpha)
    rho, a = as_matrix(rho), as_matrix(a)
    hyps = _skew_hyps(phi, rho, a, tol)
    skip = _skip_if_indefinite("skew_monotone_half", hyps, rho, tol)
    if skip is not None:
        return skip
    half = hermitize(qt._corr(phi, rho, a, a, 0.5, tol))
    ia = hermitize(qt._corr(phi, rho, a, a, alpha, tol))
    margin, scale = _op_margin(half, ia)
    return _finish("skew_monotone_half", hyps, half, ia, margin, scale, tol, alpha=alpha)


def _dilated_skew(phi: TracialMap, rho, a, alpha, tol):
    """``I^alpha`` of ``[[0, A^*], [A, 0]]`` under ``X -> phi(X_11 + X_22)/2`` with state ``rho + rho``."""
    d = rho.shape[0]
    z = np.zeros_like(rho)
    at = np.block([[z, a.conj().T], [a, z]])
    rt = np.block([[rho, z], [z, rho]])
    # powers of rho + rho are the direct sums of the powers of rho
    p1, p2 = matrix_power(rho, 1.0 - alpha, tol), matrix_power(rho, alpha, tol)
    r1 = np.block([[p1, z], [z, p1]])
    r2 = np.block([[p2, z], [z, p2]])

    def phi_t(x):
        return 0.5 * phi(x[:d, :d] + x[d:, d:])

    return phi_t(rt @ at @ at) - phi_t(r1 @ at @ r2 @ at)


def verify_skew_sum_nonneg(phi: TracialMap, rho, a, alpha: float, tol: Tolerance = DEFAULT_TOL) -> VerifierReport:
    """``I^alpha(A) + I^alpha(A^*) >= 0`` for arbitrary ``A``, cross-checked by the 2x2 dilation."""
    alpha = qt.check_alpha(alpha)
    rho, a = as_matrix(rho), as_matrix(a)
    hyps = [_h_tracial(phi), _h_positive_map(phi), _h_positive_element("rho", rho, tol)]
    skip = _skip_if_indefinite("skew_sum_nonneg", hyps, rho, tol)
    if skip is not None:
        return skip
    ad = a.conj().T
    pw = qt._powers(rho, alpha, tol)
    direct = hermitize(qt._corr(phi, rho, a, a, alpha, tol, pw) + qt._corr(phi, rho, ad, ad, alpha, tol, pw))
    dilated = hermitize(2.0 * _dilated_skew(phi, rho, a, alpha, tol))
    gap = opnorm(direct - dilated)
    scale = max(opnorm(direct), 1.0)
    if gap > tol.bound(scale):
        raise NumericalError(f"skew_sum_nonneg: direct and dilation routes differ by {gap:.3e}")
    zero = np.zeros_like(direct)
    margin, scale = _op_margin(direct, zero)
    return _finish("skew_sum_nonneg", hyps, direct, zero, margin, scale, tol, alpha=alpha, route_gap=gap,
                   dilation_margin=lambda_min(dilated))


def verify_corr_cauchy_schwarz(e: TracialMap, rho, a, b, alpha: float, tol: Tolerance = DEFAULT_TOL) -> VerifierReport:
    """``|Re Corr^alpha(A, B)|^2 <= I^alpha(A) I^alpha(B)`` for a tracial conditional expectation."""
    alpha = qt.check_alpha(alpha)
    rho, a, b = as_matrix(rho), as_matrix(a), as_matrix(b)
    hyps = [_h_conditional_expectation(e), _h_phi_density(e, rho, tol, "e_density"),
            _h_selfadjoint("A", a), _h_selfadjoint("B", b)]
    skip = _skip_if_indefinite("corr_cauchy_schwarz", hyps, rho, tol)
    if skip is not None:
        return skip
    pw = qt._powers(rho, alpha, tol)
    ia = hermitize(qt._corr(e, rho, a, a, alpha, tol, pw))
    ib = hermitize(qt._corr(e, rho, b, b, alpha, tol, pw))
    corr = qt._corr(e, rho, a, b, alpha, tol, pw)
    re = 0.5 * (corr + corr.conj().T)
    lhs = hermitize(0.5 * (ia @ ib + ib @ ia))
    rhs = hermitize(re @ re)
    margin, scale = _op_margin(lhs, rhs)
    return _finish("corr_cauchy_schwarz", hyps, lhs, rhs, margin, scale, tol, alpha=alpha,
                   ordering_deviation=opnorm(ia @ ib - ib @ ia))


def verify_skew_le_variance(phi: TracialMap, rho, a, tol: Tolerance = DEFAULT_TOL) -> VerifierReport:
    """``I(A) <= V(A)`` for a 2-positive tracial map and a phi-density."""
    rho, a = as_matrix(rho), as_matrix(a)
    hyps = [_h_tracial(phi), _h_two_positive(phi), _h_phi_density(phi, rho, tol), _h_selfadjoint("A", a)]
    skip = _skip_if_indefinite("skew_le_variance", hyps, rho, tol)
    if skip is not None:
        return skip
    v = hermitize(qt._cov(phi, rho, a, a))
    i = hermitize(qt._corr(phi, rho, a, a, 0.5, tol))
    margin, scale = _op_margin(v, i)
    return _finish("skew_le_variance", hyps, v, i, margin, scale, tol)


def _ij(e, rho, a, tol):
    v = hermitize(qt._cov(e, rho, a, a))
    i = hermitize(qt._corr(e, rho, a, a, 0.5, tol))
    return v, i, hermitize(2.0 * v - i)


def verify_luo_refined(e: TracialMap, rho, a, b, tol: Tolerance = DEFAULT_TOL) -> VerifierReport:
    """``U(A) U(B) >= |E(rho [A, B])|^2 / 4`` with ``U = I # J``, ``J = 2V - I``.

    ``metadata["refinement_margin"]`` is ``lambda_min(V(A)V(B) - U(A)U(B))``.
    """
    rho, a, b = as_matrix(rho), as_matrix(a), as_matrix(b)
    hyps = [_h_conditional_expectation(e), _h_phi_density(e, rho, tol, "e_density"),
            _h_selfadjoint("A", a), _h_selfadjoint("B", b)]
    skip = _skip_if_indefinite("luo_refined", hyps, rho, tol)
    if skip is not None:
        return skip
    va, ia, ja = _ij(e, rho, a, tol)
    vb, ib, jb = _ij(e, rho, b, tol)
    try:
        ua, meta_a = qt._u_from(ia, ja, tol)
        ub, meta_b = qt._u_from(ib, jb, tol)
    except NotPSDError as exc:
        # only possible when rho is not an E-density
        hyps.append(HypothesisCheck("skew_definite", UNMET, f"U undefined: {exc}"))
        return _finish("luo_refined", hyps, None, None, 0.0, 1.0, tol, evaluated=False)
    reg = meta_a["regularized"] or meta_b["regularized"]
    hyps.append(HypothesisCheck("skew_definite", REGULARIZED if reg else MET,
                                f"U(A) via {meta_a['order']}, U(B) via {meta_b['order']}"))
    lhs = hermitize(0.5 * (ua @ ub + ub @ ua))
    c = e(rho @ commutator(a, b))
    rhs = hermitize(0.25 * c.conj().T @ c)
    margin, scale = _op_margin(lhs, rhs)
    vv = hermitize(0.5 * (va @ vb + vb @ va))
    refinement = lambda_min(vv - lhs)
    return _finish("luo_refined", hyps, lhs, rhs, margin, scale, tol,
                   refinement_margin=refinement, variance_margin=lambda_min(vv - rhs))


def verify_mean_subadditive(phi: TracialMap, a, b, tol: Tolerance = DEFAULT_TOL) -> VerifierReport:
    """``phi(A # B) <= phi(A) # phi(B)`` for positive definite ``A, B`` and unital positive ``phi``."""
    a, b = hermitize(a), hermitize(b)
    hyps = [_h_unital(phi, tol), _h_positive_map(phi)]
    for name, x in (("A", a), ("B", b)):
        lo, _ = spectrum_interval(x)
        hyps.append(_check(f"{name}_definite", lo > tol.bound(opnorm(x)), f"lambda_min={lo:.3e}"))
    if not all(h.status == MET for h in hyps[2:]):
        return _finish("mean_subadditive", hyps, None, None, 0.0, 1.0, tol, evaluated=False)
    lhs, meta = geometric_mean(hermitize(phi(a)), hermitize(phi(b)), tol, info=True)
    rhs = phi(geometric_mean(a, b, tol))
    margin, scale = _op_margin(lhs, rhs)
    return _finish("mean_subadditive", hyps, lhs, rhs, margin, scale, tol, regularized=meta["regularized"])


def verify_ij_identities(e: TracialMap, rho, a, tol: Tolerance = DEFAULT_TOL) -> VerifierReport:
    """``I(A) = E((i[rho^1/2, A0])^2)/2`` and ``J(A) = E({rho^1/2, A0}^2)/2``, ``A0 = A - E(rho A)``.

    Equalities: ``margin = -max(defect_I, defect_J)``.
    """
    rho, a = as_matrix(rho), as_matrix(a)
    hyps = [_h_conditional_expectation(e), _h_phi_density(e, rho, tol, "e_density"), _h_selfadjoint("A", a)]
    skip = _skip_if_indefinite("ij_identities", hyps, rho, tol)
    if skip is not None:
        return skip
    _, i, j = _ij(e, rho, a, tol)
    a0 = a - _embed(e, e(rho @ a))
    s = matrix_power(rho, 0.5, tol)
    cm = 1j * (s @ a0 - a0 @ s)
    ac = s @ a0 + a0 @ s
    i2 = hermitize(0.5 * e(cm @ cm))
    j2 = hermitize(0.5 * e(ac @ ac))
    d_i = opnorm(i - i2)
    d_j = opnorm(j - j2)
    scale = max(opnorm(i), opnorm(j), 1.0)
    return _finish("ij_identities", hyps, i, i2, -max(d_i, d_j), scale, tol, defect_i=d_i, defect_j=d_j)


def verify_synthetic_variance_le_skew(phi: TracialMap, rho, a, tol: Tolerance = DEFAULT_TOL) -> VerifierReport:
    """Deliberately false ``V(A) <= I(A)``; used to test counterexample search."""
    rho, a = as_matrix(rho), as_matrix(a)
    hyps = [_h_phi_density(phi, rho, tol), _h_selfadjoint("A", a)]
    skip = _skip_if_indefinite("synthetic_variance_le_skew", hyps, rho, tol)
    if skip is not None:
        return skip
    v = hermitize(qt._cov(phi, rho, a, a))
    i = hermitize(qt._corr(phi, rho, a, a, 0.5, tol))
    margin, scale = _op_margin(i, v)
    return _finish("synthetic_variance_le_skew", hyps, i, v, margin, scale, tol)


VerifierFn = Callable[..., VerifierReport]
