"""Seeded random matrices, maps and verification instances.

Reproducibility contract
------------------------
Every generator accepts either an integer seed or a ``numpy.random.Generator``.
Integer seeds are turned into ``Generator(Philox(key=seed))`` -- Philox is a
counter-based bit generator, so the integer stream for a given key is the same
on every platform. Trial ``t`` of a campaign with seed ``s`` draws from the key
``mix_seed(s, t)``, where ``mix_seed`` is the SplitMix64 finalizer applied to
``s + (t + 1) * 0x9E3779B97F4A7C15 (mod 2**64)``. Trials therefore do not
depend on execution order or on how many workers run them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .algebra import (
    CENTER_EXPECTATION,
    COMPOSITE,
    MAP_KINDS,
    SCALED_BLOCK_TRACE,
    USUAL_TRACE,
    BlockAlgebra,
    PositiveAssignment,
    TracialMap,
    center_expectation,
    composite,
    conjugate_map,
    make_phi_density,
    scaled_block_trace,
    usual_trace,
)
from .errors import ConfigError, SchemaError
from .io import element_from_json, element_to_json
from .linalg import hermitize, matrix_power

__all__ = [
    "DEFAULT_ALPHA_GRID",
    "mix_seed",
    "make_rng",
    "random_hermitian",
    "random_ginibre",
    "random_psd",
    "random_density",
    "random_unitary",
    "random_block_unitary",
    "random_tracial_map",
    "random_phi_density",
    "InstanceSpec",
    "Instance",
    "generate_instance",
]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

_INV_SQRT2 = 1.0 / np.sqrt(2.0)

DEFAULT_ALPHA_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


def _splitmix64(z: int) -> int:
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix_seed(seed: int, trial: int) -> int:
    """Derived 64-bit seed for trial ``trial`` of a run seeded with ``seed``."""
    return _splitmix64((int(seed) + (int(trial) + 1) * _GOLDEN) & _MASK64)


def make_rng(seed) -> np.random.Generator:
    """Philox generator keyed by ``seed``; ``None`` draws a fresh key from the OS."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        return np.random.Generator(np.random.Philox())
    return np.random.Generator(np.random.Philox(key=int(seed) & _MASK64))


def random_ginibre(dim: int, seed=None) -> np.ndarray:
    """Matrix of independent standard complex Gaussians (``E|g|^2 = 1``)."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = make_rng(seed)
    g = rng.standard_normal((2, dim, dim))
    return (g[0] + 1j * g[1]) * _INV_SQRT2


def random_hermitian(dim: int, seed=None) -> np.ndarray:
    """GUE-style sample ``(G + G^*)/2``."""
    g = random_ginibre(dim, seed)
    return np.ascontiguousarray(0.5 * (g + g.conj().T))


def random_psd(dim: int, seed=None, shift: float = 0.0) -> np.ndarray:
    """Wishart sample ``G G^* + shift*I``."""
    g = random_ginibre(dim, seed)
    w = g @ g.conj().T
    w[np.diag_indices(dim)] += shift
    return hermitize(w)


def random_density(dim: int, seed=None) -> np.ndarray:
    """``W / tr(W)`` with ``W = G G^*``."""
    w = random_psd(dim, seed)
    return hermitize(w / np.trace(w).real)


def random_unitary(dim: int, seed=None) -> np.ndarray:
    """Haar-distributed unitary: QR of a Ginibre matrix with the phases of ``diag(R)`` removed."""
    g = random_ginibre(dim, seed)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return np.ascontiguousarray(q * (d / np.abs(d)))


def random_block_unitary(algebra: BlockAlgebra, seed=None) -> np.ndarray:
    rng = make_rng(seed)
    return algebra.from_blocks([random_unitary(n, rng) for n in algebra.block_dims])


def _random_element(algebra: BlockAlgebra, rng, sampler) -> np.ndarray:
    return algebra.from_blocks([sampler(n, rng) for n in algebra.block_dims])


def random_tracial_map(domain: BlockAlgebra, kind: str, k: int = 1, seed=None, codomain_dims=(2,)) -> TracialMap:
    """A random unital (where the kind allows it) tracial positive map.

    ``scaled-block-trace`` rows are exponential weights normalised so that
    ``sum_i coeffs[j, i] n_i = 1``. ``composite`` pairs such an inner map with
    targets ``Q_j <- S^{-1/2} Q_j S^{-1/2}`` (``S = sum Q_j``) on a codomain
    with blocks ``codomain_dims``, then conjugates by a random block unitary.
    ``usual-trace`` and ``center-expectation`` carry no randomness.
    """
    rng = make_rng(seed)
    if kind in (USUAL_TRACE, CENTER_EXPECTATION):
        return _fixed_map(kind, domain)
    if kind not in (SCALED_BLOCK_TRACE, COMPOSITE):
        raise ConfigError(f"unknown map kind {kind!r}; choose from {MAP_KINDS}")
    if k < 1:
        raise ConfigError("k must be >= 1")
    n = np.asarray(domain.block_dims, dtype=np.float64)
    w = rng.exponential(size=(k, domain.num_blocks)) + 0.05
    coeffs = w / (w @ n)[:, None]
    inner = scaled_block_trace(domain, coeffs, unital=True)
    if kind == SCALED_BLOCK_TRACE:
        return inner
    cod = BlockAlgebra(tuple(codomain_dims))
    qs = np.stack([_random_element(cod, rng, lambda d, r: random_psd(d, r, shift=0.05)) for _ in range(k)])
    s_mhalf = matrix_power(qs.sum(axis=0), -0.5)
    qs = np.stack([hermitize(s_mhalf @ q @ s_mhalf) for q in qs])
    phi = composite(inner, PositiveAssignment(cod, qs, unital=True))
    return conjugate_map(phi, random_block_unitary(domain, rng))


@lru_cache(maxsize=64)
def _fixed_map(kind: str, domain: BlockAlgebra) -> TracialMap:
    # deterministic kinds are shared across trials so their cached
    # structural certificates are computed once
    return usual_trace(domain) if kind == USUAL_TRACE else center_expectation(domain)


def random_phi_density(phi: TracialMap, seed=None) -> np.ndarray:
    """Random phi-density from a Wishart starting point in each block."""
    rng = make_rng(seed)
    start = _random_element(phi.domain, rng, lambda d, r: random_psd(d, r, shift=1e-3))
    return make_phi_density(phi, rng, start=start).matrix


@dataclass(frozen=True)
class InstanceSpec:
    block_dims: tuple = (2,)
    map_kind: str = CENTER_EXPECTATION
    alpha_grid: tuple = DEFAULT_ALPHA_GRID
    trials: int = 100
    seed: int = 0
    k: int = 1
    codomain_dims: tuple = (2,)

    def __post_init__(self):
        object.__setattr__(self, "block_dims", tuple(int(d) for d in self.block_dims))
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        object.__setattr__(self, "codomain_dims", tuple(int(d) for d in self.codomain_dims))
        if int(self.trials) < 1:
            raise ConfigError("trials must be >= 1")
        if not self.block_dims or any(d < 1 for d in self.block_dims):
            raise ConfigError(f"block dimensions must be positive, got {self.block_dims}")
        if self.map_kind not in MAP_KINDS:
            raise ConfigError(f"unknown map kind {self.map_kind!r}; choose from {MAP_KINDS}")
        if not self.alpha_grid or any(not 0.0 <= a <= 1.0 for a in self.alpha_grid):
            raise ConfigError("alpha grid must be a nonempty subset of [0, 1]")
        if int(self.k) < 1:
            raise ConfigError("k must be >= 1")
        if not 0 <= int(self.seed) <= _MASK64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @cached_property
    def algebra(self) -> BlockAlgebra:
        return BlockAlgebra(self.block_dims)

    def to_json(self) -> dict:
        return {
            "block_dims": list(self.block_dims),
            "map_kind": self.map_kind,
            "alpha_grid": list(self.alpha_grid),
            "trials": int(self.trials),
            "seed": int(self.seed),
            "k": int(self.k),
            "codomain_dims": list(self.codomain_dims),
        }

    @classmethod
    def from_json(cls, d) -> "InstanceSpec":
        try:
            return cls(
                block_dims=tuple(d["block_dims"]),
                map_kind=d.get("map_kind", CENTER_EXPECTATION),
                alpha_grid=tuple(d.get("alpha_grid", DEFAULT_ALPHA_GRID)),
                trials=int(d.get("trials", 100)),
                seed=int(d.get("seed", 0)),
                k=int(d.get("k", 1)),
                codomain_dims=tuple(d.get("codomain_dims", (2,))),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed instance spec: {exc}") from exc


@dataclass(frozen=True, eq=False)
class Instance:
    """Everything one verification trial needs.

    ``a`` and ``b`` are self-adjoint, ``c`` is a generic (non-normal) operator,
    ``pos_a`` and ``pos_b`` are positive definite, ``rho`` is a phi-density.
    """

    phi: TracialMap
    rho: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    pos_a: np.ndarray
    pos_b: np.ndarray
    alpha: float
    beta: float
    seed: int = 0
    trial: int = -1
    extra: dict = field(default_factory=dict)

    @property
    def algebra(self) -> BlockAlgebra:
        return self.phi.domain

    def replace(self, **changes) -> "Instance":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(changes)
        return Instance(**d)

    def to_json(self) -> dict:
        alg = self.algebra
        return {
            "schema": "uncert.instance/1",
            "seed": int(self.seed),
            "trial": int(self.trial),
            "alpha": float(self.alpha),
            "beta": float(self.beta),
            "map": self.phi.to_json(),
            "rho": element_to_json(alg, self.rho),
            "a": element_to_json(alg, self.a),
            "b": element_to_json(alg, self.b),
            "c": element_to_json(alg, self.c),
            "pos_a": element_to_json(alg, self.pos_a),
            "pos_b": element_to_json(alg, self.pos_b),
            "extra": dict(self.extra),
        }

    @classmethod
    def from_json(cls, d) -> "Instance":
        if not isinstance(d, dict) or d.get("schema") != "uncert.instance/1":
            raise SchemaError("not an uncert.instance/1 document")
        try:
            phi = TracialMap.from_json(d["map"])
            alg = phi.domain
            els = {k: element_from_json(d[k], alg) for k in ("rho", "a", "b", "c", "pos_a", "pos_b")}
            return cls(
                phi=phi,
                alpha=float(d["alpha"]),
                beta=float(d["beta"]),
                seed=int(d.get("seed", 0)),
                trial=int(d.get("trial", -1)),
                extra=dict(d.get("extra", {})),
                **els,
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(f"malformed instance: {exc}") from exc


def generate_instance(spec: InstanceSpec, trial: int) -> Instance:
    """The instance for trial ``trial``; a pure function of ``(spec, trial)``."""
    seed = mix_seed(spec.seed, trial)
    rng = make_rng(seed)
    alg = spec.algebra
    phi = random_tracial_map(alg, spec.map_kind, spec.k, rng, spec.codomain_dims)
    rho = random_phi_density(phi, rng)
    a = _random_element(alg, rng, random_hermitian)
    b = _random_element(alg, rng, random_hermitian)
    c = _random_element(alg, rng, random_ginibre)
    pos_a = _random_element(alg, rng, lambda d, r: random_psd(d, r, shift=0.05))
    pos_b = _random_element(alg, rng, lambda d, r: random_psd(d, r, shift=0.05))
    grid = spec.alpha_grid
    alpha = grid[trial % len(grid)]
    beta = grid[(3 * trial + 1) % len(grid)]
    return Instance(phi, rho, a, b, c, pos_a, pos_b, alpha, beta, seed, trial)
