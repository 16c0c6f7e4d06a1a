"""Finite-dimensional C*-algebras and tracial positive linear maps on them.

A :class:`BlockAlgebra` is a direct sum ``M_{n_1} + ... + M_{n_b}``. Its
elements are stored as dense block-diagonal ``D x D`` matrices
(``D = sum n_i``) so that matrix functions and products act blockwise for
free.

Every built-in :class:`TracialMap` has the form

    X  ->  sum_j ( sum_i coeffs[j, i] * tr(X_i) ) * Q_j

i.e. a nonnegative combination of block traces (``inner``, with a
commutative range) followed by a positive assignment ``e_j -> Q_j``
(``outer``). The four kinds differ only in how ``coeffs`` and ``Q`` are
chosen, and :meth:`TracialMap.factorize` returns the two factors directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import nnls

from .errors import DomainMismatchError, InfeasibleDensityError, NotPSDError
from . import _accel
from .linalg import DEFAULT_TOL, Tolerance, as_matrix, hermitize, lambda_min, opnorm

__all__ = [
    "BlockAlgebra",
    "AlgebraElement",
    "PositiveAssignment",
    "TracialMap",
    "MAP_KINDS",
    "usual_trace",
    "scaled_block_trace",
    "center_expectation",
    "composite",
    "apply",
    "check_tracial",
    "check_positive_unital",
    "range_commutator_defect",
    "make_phi_density",
    "is_phi_density",
    "conjugate_map",
]

USUAL_TRACE = "usual-trace"
SCALED_BLOCK_TRACE = "scaled-block-trace"
CENTER_EXPECTATION = "center-expectation"
COMPOSITE = "composite"
MAP_KINDS = (USUAL_TRACE, SCALED_BLOCK_TRACE, CENTER_EXPECTATION, COMPOSITE)


@dataclass(frozen=True)
class BlockAlgebra:
    block_dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.block_dims)
        if not dims:
            raise ValueError("a block algebra needs at least one block")
        if any(d < 1 for d in dims):
            raise ValueError(f"block dimensions must be positive, got {dims}")
        object.__setattr__(self, "block_dims", dims)

    @property
    def dim(self) -> int:
        return sum(self.block_dims)

    @property
    def num_blocks(self) -> int:
        return len(self.block_dims)

    @cached_property
    def offsets(self) -> tuple:
        out = [0]
        for d in self.block_dims:
            out.append(out[-1] + d)
        return tuple(out)

    @cached_property
    def slices(self) -> tuple:
        o = self.offsets
        return tuple(slice(o[i], o[i + 1]) for i in range(self.num_blocks))

    @cached_property
    def block_mask(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim), dtype=bool)
        for s in self.slices:
            m[s, s] = True
        return m

    @cached_property
    def bounds(self) -> np.ndarray:
        """Block boundaries ``[0, n_1, n_1 + n_2, ..., dim]`` as int64."""
        return np.concatenate([[0], np.cumsum(self.block_dims)]).astype(np.int64)

    @cached_property
    def trace_matrix(self) -> np.ndarray:
        """``(num_blocks, dim)`` 0/1 matrix mapping the diagonal to block traces."""
        t = np.zeros((self.num_blocks, self.dim))
        for i, s in enumerate(self.slices):
            t[i, s] = 1.0
        return t

    @property
    def is_commutative(self) -> bool:
        return all(d == 1 for d in self.block_dims)

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=np.complex128)

    def block_traces(self, x) -> np.ndarray:
        return self.trace_matrix @ np.diagonal(x)

    def project(self, x) -> np.ndarray:
        """Zero every entry outside the diagonal blocks."""
        return np.where(self.block_mask, x, 0.0)

    def off_block_norm(self, x) -> float:
        return float(np.max(np.abs(np.where(self.block_mask, 0.0, x)), initial=0.0))

    def from_blocks(self, blocks) -> np.ndarray:
        blocks = list(blocks)
        if len(blocks) != self.num_blocks:
            raise DomainMismatchError(f"expected {self.num_blocks} blocks, got {len(blocks)}")
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for s, d, blk in zip(self.slices, self.block_dims, blocks):
            blk = np.asarray(blk)
            if blk.shape != (d, d):
                raise DomainMismatchError(f"block of shape {blk.shape} where {(d, d)} expected")
            out[s, s] = blk
        if not np.isfinite(out).all():
            raise ValueError("block has non-finite entries")
        return out

    def blocks(self, x) -> list:
        return [np.array(x[s, s]) for s in self.slices]

    def check_element(self, x, atol: float = 1e-12) -> np.ndarray:
        x = as_matrix(x)
        if x.shape != (self.dim, self.dim):
            raise DomainMismatchError(f"matrix of shape {x.shape} is not in {self}")
        if self.off_block_norm(x) > atol * (1.0 + float(np.max(np.abs(x), initial=0.0))):
            raise DomainMismatchError("matrix has entries outside the diagonal blocks")
        return x

    def to_json(self) -> list:
        return list(self.block_dims)


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    algebra: BlockAlgebra
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", self.algebra.check_element(self.matrix))

    @classmethod
    def from_blocks(cls, algebra: BlockAlgebra, blocks) -> "AlgebraElement":
        return cls(algebra, algebra.from_blocks(blocks))

    @property
    def blocks(self) -> list:
        return self.algebra.blocks(self.matrix)

    def __eq__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self.algebra == other.algebra and np.array_equal(self.matrix, other.matrix)

    def __repr__(self):
        return f"AlgebraElement(blocks={self.algebra.block_dims})"


def _as_element_matrix(x, algebra: BlockAlgebra) -> np.ndarray:
    if isinstance(x, AlgebraElement):
        if x.algebra != algebra:
            raise DomainMismatchError(f"element of {x.algebra} passed to a map on {algebra}")
        return x.matrix
    x = as_matrix(x)
    if x.shape != (algebra.dim, algebra.dim):
        raise DomainMismatchError(f"matrix of shape {x.shape} is not in {algebra}")
    return x


@dataclass(frozen=True, eq=False)
class PositiveAssignment:
    """A positive map ``C^k -> codomain`` given by ``e_j -> Q_j``."""

    codomain: BlockAlgebra
    targets: np.ndarray
    unital: bool = True

    def __post_init__(self):
        q = np.asarray(self.targets, dtype=np.complex128)
        d = self.codomain.dim
        if q.ndim != 3 or q.shape[1:] != (d, d):
            raise DomainMismatchError(f"targets must have shape (k, {d}, {d}), got {q.shape}")
        q = np.stack([self.codomain.check_element(hermitize(t)) for t in q])
        for j, t in enumerate(q):
            lm = lambda_min(t)
            if lm < -DEFAULT_TOL.bound(opnorm(t)):
                raise NotPSDError(f"target Q_{j} is not PSD (lambda_min={lm:.3e})")
        if self.unital:
            defect = opnorm(q.sum(axis=0) - np.eye(d))
            if defect > 1e-10:
                raise ValueError(f"targets flagged unital but sum(Q_j) - I has norm {defect:.3e}")
        object.__setattr__(self, "targets", q)

    @classmethod
    def _trusted(cls, codomain, targets, unital):
        out = cls.__new__(cls)
        object.__setattr__(out, "codomain", codomain)
        object.__setattr__(out, "targets", targets)
        object.__setattr__(out, "unital", bool(unital))
        return out

    @property
    def k(self) -> int:
        return self.targets.shape[0]

    def __call__(self, y) -> np.ndarray:
        d = self.codomain.dim
        return (np.asarray(y, dtype=np.complex128) @ self.targets.reshape(self.k, d * d)).reshape(d, d)


@dataclass(frozen=True, eq=False)
class TracialMap:
    """``X -> sum_j (coeffs @ blocktraces(U^* X U))_j * Q_j``.

    Use the constructors :func:`usual_trace`, :func:`scaled_block_trace`,
    :func:`center_expectation` and :func:`composite` rather than building
    one by hand.
    """

    kind: str
    domain: BlockAlgebra
    codomain: BlockAlgebra
    coeffs: np.ndarray
    targets: np.ndarray
    unital: bool = False
    unitary: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in MAP_KINDS:
            raise ValueError(f"unknown map kind {self.kind!r}")
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.ndim != 2 or c.shape[1] != self.domain.num_blocks:
            raise DomainMismatchError(f"coeffs must have shape (k, {self.domain.num_blocks}), got {c.shape}")
        q = np.asarray(self.targets, dtype=np.complex128)
        if q.shape != (c.shape[0], self.codomain.dim, self.codomain.dim):
            raise DomainMismatchError(f"targets shape {q.shape} does not match coeffs {c.shape}")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "targets", q)
        # composite operator sum_j coeffs[j, i] Q_j applied to tr(X_i)
        object.__setattr__(self, "_stack", np.ascontiguousarray(np.tensordot(c.T, q, axes=1)).reshape(c.shape[1], -1))
        if self.unitary is not None:
            object.__setattr__(self, "unitary", as_matrix(self.unitary))

    @property
    def k(self) -> int:
        return self.coeffs.shape[0]

    def __call__(self, x) -> np.ndarray:
        """Apply to a dense domain matrix; returns a dense codomain matrix."""
        if self.unitary is not None:
            u = self.unitary
            x = u.conj().T @ x @ u
        return _accel.block_apply(np.ascontiguousarray(x, dtype=np.complex128), self.domain.bounds,
                                  self._stack, self.codomain.dim)

    def weights(self, x) -> np.ndarray:
        """``coeffs @ blocktraces(U^* X U)``, so that ``self(x) = sum_j weights[j] Q_j``."""
        if self.unitary is not None:
            u = self.unitary
            x = u.conj().T @ x @ u
        return self.coeffs @ (self.domain.trace_matrix @ x.diagonal())

    # -- structure -------------------------------------------------------

    @cached_property
    def positivity_certificate(self) -> tuple[bool, str]:
        """Structural positivity: nonnegative coefficients and PSD targets."""
        if np.any(self.coeffs < 0):
            return False, f"negative block-trace coefficient {self.coeffs.min():.3e}"
        for j, q in enumerate(self.targets):
            lm = lambda_min(q)
            if lm < -DEFAULT_TOL.bound(opnorm(q)):
                return False, f"target Q_{j} has lambda_min={lm:.3e}"
        return True, "nonnegative combination of block traces with PSD targets"

    @cached_property
    def unital_defect(self) -> float:
        return opnorm(self(self.domain.identity()) - self.codomain.identity())

    @cached_property
    def range_defect(self) -> float:
        """Largest relative commutator among the generators of the range.

        The range is spanned by ``R_i = sum_j coeffs[j, i] Q_j``, one per
        domain block, so it is commutative exactly when this is ~0.
        """
        if self.codomain.is_commutative:
            return 0.0
        n = self.codomain.dim
        gens = [r.reshape(n, n) for r in self._stack]
        worst = 0.0
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                x, y = gens[i], gens[j]
                denom = opnorm(x) * opnorm(y)
                if denom > 0:
                    worst = max(worst, opnorm(x @ y - y @ x) / denom)
        return worst

    @property
    def has_scalar_range(self) -> bool:
        return self.codomain.dim == 1

    def factorize(self) -> tuple["TracialMap", PositiveAssignment]:
        """``(inner, outer)`` with ``self = outer o inner`` and ``inner`` commutative-valued."""
        return self._factors

    @cached_property
    def _factors(self):
        inner = scaled_block_trace(self.domain, self.coeffs, validate=False)
        if self.unitary is not None:
            inner = conjugate_map(inner, self.unitary)
        unital = opnorm(self.targets.sum(axis=0) - np.eye(self.codomain.dim)) <= 1e-10
        return inner, PositiveAssignment._trusted(self.codomain, self.targets, unital)

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        from .io import matrix_to_json

        d = {
            "kind": self.kind,
            "domain_blocks": list(self.domain.block_dims),
            "codomain_blocks": list(self.codomain.block_dims),
            "coeffs": self.coeffs.tolist(),
            "targets": [matrix_to_json(q) for q in self.targets],
            "unital": bool(self.unital),
        }
        if self.unitary is not None:
            d["unitary"] = [matrix_to_json(b) for b in self.domain.blocks(self.unitary)]
        return d

    @classmethod
    def from_json(cls, d) -> "TracialMap":
        from .io import matrix_from_json

        dom = BlockAlgebra(tuple(d["domain_blocks"]))
        kind = d["kind"]
        if kind == USUAL_TRACE:
            phi = usual_trace(dom)
        elif kind == CENTER_EXPECTATION:
            phi = center_expectation(dom)
        elif kind == SCALED_BLOCK_TRACE:
            phi = scaled_block_trace(dom, d["coeffs"], unital=bool(d.get("unital", False)), validate=False)
        elif kind == COMPOSITE:
            cod = BlockAlgebra(tuple(d["codomain_blocks"]))
            q = np.stack([matrix_from_json(m) for m in d["targets"]])
            inner = scaled_block_trace(dom, d["coeffs"], validate=False)
            outer = PositiveAssignment(cod, q, unital=False)
            phi = composite(inner, outer)
        else:
            raise ValueError(f"unknown map kind {kind!r}")
        if "unitary" in d and d["unitary"] is not None:
            u = [matrix_from_json(m) for m in d["unitary"]]
            phi = conjugate_map(phi, u)
        return phi


def usual_trace(domain: BlockAlgebra) -> TracialMap:
    """The trace ``X -> sum_i tr(X_i)`` with scalar codomain."""
    domain = BlockAlgebra(tuple(domain.block_dims))
    cod = BlockAlgebra((1,))
    return TracialMap(
        USUAL_TRACE, domain, cod,
        np.ones((1, domain.num_blocks)), np.ones((1, 1, 1)),
        unital=domain.dim == 1,
    )


def scaled_block_trace(domain: BlockAlgebra, coeffs, *, unital: bool = False, validate: bool = True) -> TracialMap:
    """``X -> diag_j(sum_i coeffs[j, i] tr(X_i))`` into the diagonal algebra ``C^k``.

    With ``unital=True`` every row must satisfy ``sum_i coeffs[j, i] n_i = 1``.
    ``validate=False`` skips the nonnegativity check (test-only maps).
    """
    c = np.atleast_2d(np.asarray(coeffs, dtype=np.float64))
    if c.shape[1] != domain.num_blocks:
        raise DomainMismatchError(f"coeffs must have {domain.num_blocks} columns, got {c.shape}")
    if validate and np.any(c < 0):
        raise ValueError("block-trace coefficients must be nonnegative")
    n = np.asarray(domain.block_dims, dtype=np.float64)
    if unital and not np.allclose(c @ n, 1.0, rtol=0, atol=1e-12):
        raise ValueError(f"coefficients are not unital: rows give {c @ n}")
    k = c.shape[0]
    q = np.zeros((k, k, k), dtype=np.complex128)
    q[np.arange(k), np.arange(k), np.arange(k)] = 1.0
    return TracialMap(SCALED_BLOCK_TRACE, domain, BlockAlgebra((1,) * k), c, q, unital=bool(np.allclose(c @ n, 1.0, rtol=0, atol=1e-12)))


def center_expectation(domain: BlockAlgebra) -> TracialMap:
    """``X -> sum_i (tr(X_i)/n_i) I_{n_i}``, the trace onto the center."""
    b = domain.num_blocks
    n = np.asarray(domain.block_dims, dtype=np.float64)
    q = np.zeros((b, domain.dim, domain.dim), dtype=np.complex128)
    for i, s in enumerate(domain.slices):
        q[i, s, s] = np.eye(domain.block_dims[i])
    return TracialMap(CENTER_EXPECTATION, domain, domain, np.diag(1.0 / n), q, unital=True)


def composite(inner: TracialMap, outer: PositiveAssignment) -> TracialMap:
    """``outer o inner`` for a block-trace ``inner`` and a positive assignment ``outer``."""
    if inner.kind not in (SCALED_BLOCK_TRACE, USUAL_TRACE):
        raise ValueError("inner map of a composite must be a scaled block trace")
    if inner.k != outer.k:
        raise DomainMismatchError(f"inner map has {inner.k} outputs, assignment has {outer.k} targets")
    n = np.asarray(inner.domain.block_dims, dtype=np.float64)
    inner_unital = np.allclose(inner.coeffs @ n, 1.0, rtol=0, atol=1e-12)
    outer_unital = opnorm(outer.targets.sum(axis=0) - np.eye(outer.codomain.dim)) <= 1e-10
    return TracialMap(
        COMPOSITE, inner.domain, outer.codomain, inner.coeffs, outer.targets,
        unital=bool(inner_unital and outer_unital),
    )


def apply(phi: TracialMap, x) -> AlgebraElement:
    """Evaluate ``phi`` on an element of its domain."""
    m = _as_element_matrix(x, phi.domain)
    return AlgebraElement(phi.codomain, phi(m))


def _random_domain_matrix(algebra: BlockAlgebra, rng) -> np.ndarray:
    d = algebra.dim
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return algebra.project(g)


def check_tracial(phi: TracialMap, trials: int, seed: int = 0) -> float:
    """Largest ``||phi(XY) - phi(YX)||_2`` over random pairs ``X, Y``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = _random_domain_matrix(phi.domain, rng)
        y = _random_domain_matrix(phi.domain, rng)
        worst = max(worst, opnorm(phi(x @ y) - phi(y @ x)))
    return worst


def check_positive_unital(phi: TracialMap, trials: int, seed: int = 0, tol: Tolerance = DEFAULT_TOL):
    """``(positivity_ok, unital_defect)`` from sampled PSD inputs.

    The first inputs are rank-one projections inside each block, so a
    negative coefficient on any block is always exposed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    alg = phi.domain
    samples = []
    for s in alg.slices:
        v = np.zeros(alg.dim, dtype=np.complex128)
        v[s.start] = 1.0
        samples.append(np.outer(v, v.conj()))
    ok = True
    for t in range(trials + len(samples)):
        if t < len(samples):
            p = samples[t]
        else:
            g = _random_domain_matrix(alg, rng)
            p = g @ g.conj().T
        out = phi(p)
        out = 0.5 * (out + out.conj().T)
        if lambda_min(out) < -tol.bound(opnorm(out)):
            ok = False
            break
    defect = opnorm(phi(alg.identity()) - phi.codomain.identity())
    return ok, defect


def range_commutator_defect(phi: TracialMap, samples: int = 3, seed: int = 0) -> float:
    """Sampled ``max ||phi(X)phi(Y) - phi(Y)phi(X)||`` relative to ``||phi(X)|| ||phi(Y)||``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = phi(_random_domain_matrix(phi.domain, rng))
        y = phi(_random_domain_matrix(phi.domain, rng))
        denom = max(opnorm(x) * opnorm(y), 1e-300)
        worst = max(worst, opnorm(x @ y - y @ x) / denom)
    return worst


def _density_system(phi: TracialMap):
    """Real linear system ``M t = v`` for block traces ``t`` with ``phi(rho) = I``."""
    stack = phi._stack  # (b, Dc*Dc)
    b = stack.shape[0]
    m = stack.reshape(b, -1).T
    v = phi.codomain.identity().reshape(-1)
    return np.vstack([m.real, m.imag]), np.concatenate([v.real, v.imag])


def _feasible_traces(phi: TracialMap, t0: np.ndarray):
    """Nonnegative block traces near ``t0`` solving the density constraints.

    Tries, in order: rescaling ``t0`` (exact whenever the constraints have
    rank one), alternating projections between the affine solution set and
    the orthant, and finally NNLS, which also certifies infeasibility.
    """
    m, v = _density_system(phi)
    mt = m @ t0
    denom = float(mt @ mt)
    t = t0 * (float(mt @ v) / denom) if denom > 0 else t0.copy()
    if t.min() >= 0 and float(np.linalg.norm(m @ t - v)) <= 1e-12:
        return t
    pinv = np.linalg.pinv(m)
    for _ in range(200):
        t = t + pinv @ (v - m @ t)
        if t.min() >= 0:
            if float(np.linalg.norm(m @ t - v)) <= 1e-10:
                return np.maximum(t, 0.0)
        t = np.maximum(t, 0.0)
    t_nn, _ = nnls(m, v)
    res = float(np.linalg.norm(m @ t_nn - v))
    if res > 1e-9:
        raise InfeasibleDensityError(
            f"no nonnegative block traces give phi(rho) = I (residual {res:.3e})", residual=res
        )
    return t_nn


def make_phi_density(phi: TracialMap, seed=0, *, start=None) -> AlgebraElement:
    """A positive ``rho`` with ``phi(rho) = I``.

    A random positive definite candidate is drawn per block (or ``start`` is
    used), its block traces are moved onto the affine set ``phi(rho) = I``
    inside the nonnegative orthant, and each block is rescaled accordingly.
    Raises :class:`InfeasibleDensityError` when no nonnegative solution exists.
    """
    alg = phi.domain
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if start is None:
        g = _random_domain_matrix(alg, rng)
        rho0 = g @ g.conj().T + 1e-3 * np.eye(alg.dim)
    else:
        rho0 = hermitize(_as_element_matrix(start, alg))
    t0 = alg.block_traces(rho0).real
    if np.any(t0 <= 0):
        raise ValueError("starting element must have positive block traces")
    t = _feasible_traces(phi, t0)
    scale = np.repeat(t / t0, alg.block_dims)
    rho = rho0 * np.sqrt(np.outer(scale, scale))
    rho = alg.project(0.5 * (rho + rho.conj().T))
    defect = opnorm(phi(rho) - phi.codomain.identity())
    if defect > 1e-9:
        raise InfeasibleDensityError(f"density construction left ||phi(rho) - I|| = {defect:.3e}", residual=defect)
    return AlgebraElement(alg, rho)


def is_phi_density(phi: TracialMap, rho, tol: Tolerance = DEFAULT_TOL) -> bool:
    m = hermitize(_as_element_matrix(rho, phi.domain))
    if lambda_min(m) < -tol.bound(opnorm(m)):
        return False
    out = phi(m)
    return opnorm(out - phi.codomain.identity()) <= tol.bound(opnorm(out))


def conjugate_map(phi: TracialMap, u) -> TracialMap:
    """The map ``X -> phi(U^* X U)`` for a blockwise unitary ``U``."""
    alg = phi.domain
    if isinstance(u, (list, tuple)):
        u = alg.from_blocks(u)
    u = alg.check_element(u)
    if opnorm(u.conj().T @ u - np.eye(alg.dim)) > 1e-10:
        raise ValueError("conjugating matrix is not unitary")
    total = u if phi.unitary is None else u @ phi.unitary
    return TracialMap(phi.kind, phi.domain, phi.codomain, phi.coeffs, phi.targets, unital=phi.unital, unitary=total)
