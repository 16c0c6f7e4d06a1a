"""Theorem identifiers and how each verifier consumes a random :class:`Instance`."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from . import verifiers as vf
from .algebra import USUAL_TRACE, TracialMap
from .errors import ConfigError, UnsupportedMapError
from .instances import Instance
from .linalg import DEFAULT_TOL, Tolerance

__all__ = ["Theorem", "THEOREMS", "theorem_ids", "get_theorem", "run_verifier", "supports"]


@dataclass(frozen=True)
class Theorem:
    id: str
    run: Callable[[Instance, Tolerance, str], vf.VerifierReport]
    supports: Callable[[TracialMap], bool]
    summary: str
    hypotheses: tuple = ()
    synthetic: bool = False


def _any(phi):
    return True


def _usual(phi):
    return phi.kind == USUAL_TRACE


_ce = vf.supports_conditional_expectation


def _main(inst, tol, mode):
    inner, outer = inst.phi.factorize()
    return vf.verify_uncertainty_main(inner, outer, inst.rho, inst.a, inst.b, mode, tol)


def _kadison(inst, tol, mode):
    # alternate between an indefinite and a positive definite operator
    a = inst.pos_a if inst.trial % 2 else inst.a
    return vf.verify_kadison_family(inst.phi, a, tol=tol)


_ENTRIES = [
    Theorem("heisenberg_classical",
            lambda i, t, m: vf.verify_heisenberg_classical(i.rho, i.a, i.b, t), _usual,
            "V(A)V(B) >= |Tr(rho[A,B])|^2/4", ("density", "A_selfadjoint", "B_selfadjoint")),
    Theorem("schrodinger_classical",
            lambda i, t, m: vf.verify_schrodinger_classical(i.rho, i.a, i.b, t), _usual,
            "V(A)V(B) - (Re Cov)^2 >= |Tr(rho[A,B])|^2/4", ("density", "A_selfadjoint", "B_selfadjoint")),
    # rho only needs to be positive here; use a generic positive operator
    Theorem("schrodinger_commutative_range",
            lambda i, t, m: vf.verify_schrodinger_commutative_range(i.phi, i.pos_a, i.a, i.b, t), _any,
            "V'(A)V'(B) - |Re Cov'|^2 >= |phi(rho[A,B])|^2/4 for commutative range",
            ("tracial", "positive", "commutative_range", "phi_rho_definite")),
    Theorem("conditional_expectation_schrodinger",
            lambda i, t, m: vf.verify_conditional_expectation_schrodinger(i.phi, i.rho, i.a, i.b, t), _ce,
            "Schrodinger relation for a tracial conditional expectation", ("conditional_expectation", "e_density")),
    Theorem("uncertainty_main", _main, _any,
            "V(A) # V(B) >= |Phi(rho[A,B])| / (2 sqrt K)", ("phi_density", "spectral_hypothesis")),
    Theorem("kadison_family", _kadison, _any,
            "Kadison, reverse Kadison and |Phi(A)| bounds", ("unital", "two_positive", "reverse_spectrum")),
    Theorem("skew_nonneg",
            lambda i, t, m: vf.verify_skew_nonneg(i.phi, i.rho, i.a, i.alpha, t), _any,
            "I^alpha(A) >= 0", ("tracial", "positive")),
    Theorem("alpha_convexity",
            lambda i, t, m: vf.verify_alpha_convexity(i.phi, i.rho, i.a, i.alpha, i.beta, t), _any,
            "alpha -> phi(rho^alpha A rho^(1-alpha) A) is midpoint convex", ("tracial", "positive")),
    Theorem("skew_monotone_half",
            lambda i, t, m: vf.verify_skew_monotone_half(i.phi, i.rho, i.a, i.alpha, t), _any,
            "I^alpha(A) <= I^(1/2)(A)", ("tracial", "positive")),
    Theorem("skew_sum_nonneg",
            lambda i, t, m: vf.verify_skew_sum_nonneg(i.phi, i.rho, i.c, i.alpha, t), _any,
            "I^alpha(A) + I^alpha(A*) >= 0", ("tracial", "positive")),
    Theorem("corr_cauchy_schwarz",
            lambda i, t, m: vf.verify_corr_cauchy_schwarz(i.phi, i.rho, i.a, i.b, i.alpha, t), _ce,
            "|Re Corr^alpha(A,B)|^2 <= I^alpha(A) I^alpha(B)", ("conditional_expectation", "e_density")),
    Theorem("skew_le_variance",
            lambda i, t, m: vf.verify_skew_le_variance(i.phi, i.rho, i.a, t), _any,
            "I(A) <= V(A)", ("tracial", "two_positive", "phi_density")),
    Theorem("luo_refined",
            lambda i, t, m: vf.verify_luo_refined(i.phi, i.rho, i.a, i.b, t), _ce,
            "U(A)U(B) >= |E(rho[A,B])|^2/4", ("conditional_expectation", "e_density", "skew_definite")),
    Theorem("mean_subadditive",
            lambda i, t, m: vf.verify_mean_subadditive(i.phi, i.pos_a, i.pos_b, t), _any,
            "phi(A # B) <= phi(A) # phi(B)", ("unital", "positive")),
    Theorem("ij_identities",
            lambda i, t, m: vf.verify_ij_identities(i.phi, i.rho, i.a, t), _ce,
            "I and J as conditional expectations of squared (anti)commutators", ("conditional_expectation", "e_density")),
    Theorem("synthetic_variance_le_skew",
            lambda i, t, m: vf.verify_synthetic_variance_le_skew(i.phi, i.rho, i.a, t), _any,
            "deliberately false V(A) <= I(A)", ("phi_density",), synthetic=True),
]

THEOREMS = {t.id: t for t in _ENTRIES}


def theorem_ids(include_synthetic: bool = False) -> list[str]:
    return [t.id for t in _ENTRIES if include_synthetic or not t.synthetic]


def get_theorem(theorem_id: str) -> Theorem:
    try:
        return THEOREMS[theorem_id]
    except KeyError:
        raise ConfigError(f"unknown theorem {theorem_id!r}; choose from {', '.join(THEOREMS)}") from None


def supports(theorem_id: str, phi: TracialMap) -> bool:
    return get_theorem(theorem_id).supports(phi)


def run_verifier(theorem_id: str, inst: Instance, tol: Tolerance = DEFAULT_TOL, mode: str = "relaxed") -> vf.VerifierReport:
    """Run one verifier on one instance; raises UnsupportedMapError for inapplicable map kinds."""
    th = get_theorem(theorem_id)
    if not th.supports(inst.phi):
        raise UnsupportedMapError(f"{theorem_id} does not apply to {inst.phi.kind} maps with codomain "
                                  f"{inst.phi.codomain.block_dims}")
    return th.run(inst, tol, mode)
