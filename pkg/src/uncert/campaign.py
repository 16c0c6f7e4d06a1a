"""Seeded verification campaigns, counterexample search and replay.

A campaign draws one instance per trial from an :class:`InstanceSpec` and runs
every requested verifier on it. Trials are independent (each has its own
derived seed), so they can be split over worker processes; the merge is
order-independent and ties on the minimum margin go to the lowest trial, which
makes the report identical for any ``UNCERT_THREADS``.
"""

from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, _accel
from .errors import ConfigError, SchemaError, UnsupportedMapError
from .instances import (
    Instance,
    InstanceSpec,
    generate_instance,
    make_rng,
    mix_seed,
    random_psd,
    random_tracial_map,
)
from .io import dump_json, load_json
from .linalg import DEFAULT_TOL, Tolerance
from .registry import get_theorem, run_verifier, theorem_ids
from .verifiers import MET, VerifierReport

__all__ = [
    "CampaignConfig",
    "TheoremSummary",
    "CampaignReport",
    "SearchReport",
    "run_campaign",
    "counterexample_search",
    "replay",
    "thread_count",
    "SEARCH_DROPS",
]

CAMPAIGN_SCHEMA = "uncert.campaign/1"
SEARCH_SCHEMA = "uncert.search/1"
MODES = ("strict", "relaxed")


def thread_count(default: int | None = None) -> int:
    """Worker count from ``UNCERT_THREADS`` (falls back to the CPU count)."""
    raw = os.environ.get("UNCERT_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"UNCERT_THREADS must be an integer, got {raw!r}") from None
        return max(n, 1)
    return default if default is not None else (os.cpu_count() or 1)


@dataclass(frozen=True)
class CampaignConfig:
    theorems: tuple
    spec: InstanceSpec
    tolerance: Tolerance = DEFAULT_TOL
    mode: str = "relaxed"
    output_path: str | None = None

    def __post_init__(self):
        ths = (self.theorems,) if isinstance(self.theorems, str) else tuple(self.theorems)
        object.__setattr__(self, "theorems", ths)
        if not ths:
            raise ConfigError("a campaign needs at least one theorem")
        for t in ths:
            get_theorem(t)
        if len(set(ths)) != len(ths):
            raise ConfigError("duplicate theorem ids in campaign")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not isinstance(self.spec, InstanceSpec):
            raise ConfigError("spec must be an InstanceSpec")
        if not (self.tolerance.rel >= 0 and self.tolerance.abs >= 0):
            raise ConfigError("tolerances must be nonnegative")
        # the map kind decides applicability; probe with a representative map
        probe = random_tracial_map(self.spec.algebra, self.spec.map_kind, self.spec.k, 0, self.spec.codomain_dims)
        bad = [t for t in ths if not get_theorem(t).supports(probe)]
        if bad:
            raise ConfigError(f"{', '.join(bad)} not applicable to {self.spec.map_kind} maps "
                              f"(k={self.spec.k}, codomain {list(self.spec.codomain_dims)})")

    @classmethod
    def for_all(cls, spec: InstanceSpec, **kw) -> "CampaignConfig":
        """Every non-synthetic theorem applicable to ``spec``'s map kind."""
        probe = random_tracial_map(spec.algebra, spec.map_kind, spec.k, 0, spec.codomain_dims)
        ths = tuple(t for t in theorem_ids() if get_theorem(t).supports(probe))
        return cls(ths, spec, **kw)

    def to_json(self) -> dict:
        return {
            "theorems": list(self.theorems),
            "spec": self.spec.to_json(),
            "tolerance": self.tolerance.to_dict(),
            "mode": self.mode,
            "output_path": self.output_path,
        }

    @classmethod
    def from_json(cls, d) -> "CampaignConfig":
        if not isinstance(d, dict):
            raise ConfigError("campaign config must be a JSON object")
        try:
            spec = InstanceSpec.from_json(d["spec"])
            theorems = d["theorems"]
            if theorems == "all":
                return cls.for_all(spec, tolerance=Tolerance.from_dict(d.get("tolerance", {})),
                                   mode=d.get("mode", "relaxed"), output_path=d.get("output_path"))
            return cls(
                theorems=tuple(theorems),
                spec=spec,
                tolerance=Tolerance.from_dict(d.get("tolerance", {})),
                mode=d.get("mode", "relaxed"),
                output_path=d.get("output_path"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed campaign config: {exc}") from exc


@dataclass
class TheoremSummary:
    theorem: str
    trials: int = 0
    passes: int = 0
    failures: int = 0
    unmet: int = 0
    min_margin: float | None = None
    argmin_trial: int | None = None
    argmin_seed: int | None = None
    first_failure_trial: int | None = None

    def add(self, report: VerifierReport, trial: int, seed: int) -> None:
        self.trials += 1
        outcome = report.outcome
        if outcome == "unmet":
            self.unmet += 1
            return
        if outcome == "pass":
            self.passes += 1
        else:
            self.failures += 1
            if self.first_failure_trial is None or trial < self.first_failure_trial:
                self.first_failure_trial = trial
        self._offer(report.margin, trial, seed)

    def _offer(self, margin, trial, seed):
        if margin is None:
            return
        if (self.min_margin is None or margin < self.min_margin
                or (margin == self.min_margin and trial < self.argmin_trial)):
            self.min_margin, self.argmin_trial, self.argmin_seed = float(margin), trial, seed

    def merge(self, other: "TheoremSummary") -> None:
        self.trials += other.trials
        self.passes += other.passes
        self.failures += other.failures
        self.unmet += other.unmet
        if other.first_failure_trial is not None and (
                self.first_failure_trial is None or other.first_failure_trial < self.first_failure_trial):
            self.first_failure_trial = other.first_failure_trial
        self._offer(other.min_margin, other.argmin_trial, other.argmin_seed)

    def to_json(self) -> dict:
        return {
            "theorem": self.theorem,
            "trials": self.trials,
            "passes": self.passes,
            "failures": self.failures,
            "unmet": self.unmet,
            "min_margin": self.min_margin,
            "argmin_trial": self.argmin_trial,
            "argmin_seed": self.argmin_seed,
            "first_failure_trial": self.first_failure_trial,
        }

    @classmethod
    def from_json(cls, d) -> "TheoremSummary":
        return cls(**{k: d.get(k) for k in cls.__dataclass_fields__})


@dataclass
class CampaignReport:
    config: CampaignConfig
    summaries: dict
    wall_time: float = 0.0
    version: str = __version__
    backend: str = _accel.BACKEND
    threads: int = 1
    artifacts: dict = field(default_factory=dict)

    @property
    def failures(self) -> int:
        return sum(s.failures for s in self.summaries.values())

    @property
    def exit_code(self) -> int:
        return 1 if self.failures else 0

    def to_json(self) -> dict:
        return {
            "schema": CAMPAIGN_SCHEMA,
            "version": self.version,
            "backend": self.backend,
            "threads": self.threads,
            "wall_time": self.wall_time,
            "config": self.config.to_json(),
            "theorems": [self.summaries[t].to_json() for t in self.config.theorems],
            "artifacts": dict(self.artifacts),
        }

    @classmethod
    def from_json(cls, d) -> "CampaignReport":
        if not isinstance(d, dict) or d.get("schema") != CAMPAIGN_SCHEMA:
            raise SchemaError(f"not an {CAMPAIGN_SCHEMA} document")
        try:
            cfg = CampaignConfig.from_json(d["config"])
            sums = {s["theorem"]: TheoremSummary.from_json(s) for s in d["theorems"]}
            return cls(cfg, sums, float(d["wall_time"]), d["version"], d.get("backend", ""),
                       int(d.get("threads", 1)), dict(d.get("artifacts", {})))
        except (KeyError, TypeError, ConfigError) as exc:
            raise SchemaError(f"malformed campaign report: {exc}") from exc

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["theorem", "trials", "passes", "failures", "unmet", "min_margin", "argmin_trial", "argmin_seed"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for t in self.config.theorems:
            row = self.summaries[t].to_json()
            w.writerow(["" if row[c] is None else row[c] for c in cols])
        return buf.getvalue()


# -- running -----------------------------------------------------------------


def _run_chunk(config: CampaignConfig, start: int, stop: int) -> dict:
    sums = {t: TheoremSummary(t) for t in config.theorems}
    for trial in range(start, stop):
        inst = generate_instance(config.spec, trial)
        for t in config.theorems:
            report = run_verifier(t, inst, config.tolerance, config.mode)
            sums[t].add(report, trial, inst.seed)
    return sums


def _chunks(n: int, parts: int) -> list:
    parts = max(1, min(parts, n))
    edges = np.linspace(0, n, parts + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def run_campaign(config: CampaignConfig, *, threads: int | None = None, write: bool = True) -> CampaignReport:
    """Run every theorem on ``config.spec.trials`` instances and aggregate.

    ``threads`` defaults to ``UNCERT_THREADS`` (or the CPU count). With
    ``write`` and an ``output_path`` the JSON report, a CSV summary and one
    replayable instance file per theorem (its minimum-margin trial) are written.
    """
    n = int(config.spec.trials)
    workers = thread_count() if threads is None else max(int(threads), 1)
    workers = min(workers, n)
    t0 = time.perf_counter()
    sums = {t: TheoremSummary(t) for t in config.theorems}
    if workers <= 1:
        parts = [_run_chunk(config, 0, n)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_run_chunk, config, a, b) for a, b in _chunks(n, 4 * workers)]
            parts = [f.result() for f in futs]
    for part in parts:
        for t in config.theorems:
            sums[t].merge(part[t])
    report = CampaignReport(config, sums, time.perf_counter() - t0, threads=workers)
    if write and config.output_path:
        _write_outputs(report)
    return report


def _write_outputs(report: CampaignReport) -> None:
    cfg = report.config
    out = Path(cfg.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    stem = out.with_suffix("")
    for t in cfg.theorems:
        s = report.summaries[t]
        if s.argmin_trial is None:
            continue
        inst = generate_instance(cfg.spec, s.argmin_trial)
        inst = inst.replace(extra={"theorem": t, "mode": cfg.mode, "campaign_margin": s.min_margin,
                                   "tolerance": cfg.tolerance.to_dict()})
        path = Path(f"{stem}.{t}.argmin.json")
        dump_json(inst.to_json(), path)
        report.artifacts[t] = str(path)
    csv_path = stem.with_suffix(".csv")
    csv_path.write_text(report.to_csv(), encoding="utf-8")
    report.artifacts["csv"] = str(csv_path)
    dump_json(report.to_json(), out)


def replay(instance_file, theorem_id: str, mode: str | None = None, tol: Tolerance | None = None) -> VerifierReport:
    """Re-run a verifier on a serialized instance.

    ``mode`` and ``tol`` default to the values recorded by the campaign that
    wrote the file, so the margin reproduces the campaign's.
    """
    d = load_json(instance_file)
    inst = Instance.from_json(d)
    extra = inst.extra
    if mode is None:
        mode = extra.get("mode", "relaxed")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if tol is None:
        tol = Tolerance.from_dict(extra["tolerance"]) if "tolerance" in extra else DEFAULT_TOL
    return run_verifier(theorem_id, inst, tol, mode)


# -- counterexample search ---------------------------------------------------

_NORMALIZATION = ("density", "phi_density", "e_density")

# hypothesis that may be dropped -> short description of the relaxation
SEARCH_DROPS = {
    "none": "keep every hypothesis",
    "density": "rho positive but not trace-normalized",
    "phi_density": "rho positive with phi(rho) a random positive multiple of I",
    "e_density": "rho positive with E(rho) a random positive multiple of I",
    "normalization": "alias of the density hypothesis of the target",
    "commutative_range": "composite maps whose range generators do not commute",
    "unital": "block-trace maps with phi(I) a random multiple of I",
}

_SEARCH_DIMS = ((2,), (3,), (2, 2), (2, 3))
# a unital block-trace map on at most two blocks has a commutative range
# (n_1 R_1 + n_2 R_2 = I), so probing that hypothesis needs three or more
_NONCOMMUTATIVE_DIMS = ((1, 1, 1), (2, 1, 1), (2, 2, 1), (2, 2, 2))


@dataclass
class SearchReport:
    target: str
    dropped: str
    budget: int
    seed: int
    trials_run: int = 0
    found: bool = False
    violation: dict | None = None
    min_margin: float | None = None

    @property
    def message(self) -> str:
        if self.found:
            return f"violation found at trial {self.violation['trial']} (margin {self.violation['margin']:.6g})"
        return f"none found within budget ({self.trials_run} trials)"

    @property
    def exit_code(self) -> int:
        return 1 if self.found else 0

    def to_json(self) -> dict:
        return {
            "schema": SEARCH_SCHEMA,
            "target": self.target,
            "dropped": self.dropped,
            "budget": self.budget,
            "seed": self.seed,
            "trials_run": self.trials_run,
            "found": self.found,
            "message": self.message,
            "min_margin": self.min_margin,
            "violation": self.violation,
        }


def _resolve_drop(target: str, drop: str) -> str:
    th = get_theorem(target)
    if drop not in SEARCH_DROPS:
        raise UnsupportedMapError(f"cannot drop {drop!r}; supported: {', '.join(SEARCH_DROPS)}")
    if drop == "none":
        return drop
    if drop == "normalization":
        for name in _NORMALIZATION:
            if name in th.hypotheses:
                return name
    if drop not in th.hypotheses:
        raise UnsupportedMapError(f"{target} has no droppable hypothesis {drop!r}")
    return drop


def _search_kind(target: str, drop: str) -> tuple:
    th = get_theorem(target)
    if drop == "commutative_range":
        return "composite", 3
    for kind, k in (("center-expectation", 1), ("scaled-block-trace", 2), ("usual-trace", 1)):
        probe = random_tracial_map(InstanceSpec().algebra, kind, k, 0)
        if th.supports(probe):
            return kind, k
    raise UnsupportedMapError(f"no built-in map kind supports {target}")  # pragma: no cover


def _relax(inst: Instance, drop: str, rng) -> Instance:
    if drop in _NORMALIZATION:
        if drop == "density":
            # compressing to the diagonal blocks keeps it positive
            rho = inst.algebra.project(random_psd(inst.rho.shape[0], rng, shift=1e-3))
        else:
            rho = inst.rho
        return inst.replace(rho=rho * rng.uniform(0.2, 3.0))
    if drop == "unital":
        from .algebra import scaled_block_trace
        phi = inst.phi
        coeffs = phi.coeffs * rng.uniform(0.2, 3.0)
        return inst.replace(phi=scaled_block_trace(inst.algebra, coeffs))
    return inst


def counterexample_search(target: str, drop: str = "none", budget: int = 1000, seed: int = 0,
                          tol: Tolerance = DEFAULT_TOL, mode: str = "relaxed") -> SearchReport:
    """Look for an instance violating ``target`` once hypothesis ``drop`` is ignored.

    A violation needs every *other* hypothesis met and a margin below the
    tolerance. Finding nothing is reported as such, never as a proof.
    """
    if int(budget) < 0:
        raise ConfigError("budget must be >= 0")
    drop = _resolve_drop(target, drop)
    kind, k = _search_kind(target, drop)
    rep = SearchReport(target, drop, int(budget), int(seed))
    for trial in range(int(budget)):
        pool = _NONCOMMUTATIVE_DIMS if drop == "commutative_range" else _SEARCH_DIMS
        dims = pool[trial % len(pool)]
        spec = InstanceSpec(block_dims=dims, map_kind=kind, k=k, seed=seed, trials=max(int(budget), 1))
        inst = generate_instance(spec, trial)
        inst = _relax(inst, drop, make_rng(mix_seed(inst.seed, 1)))
        report = run_verifier(target, inst, tol, mode)
        rep.trials_run += 1
        others_met = all(h.status == MET for h in report.hypotheses if h.name != drop)
        if not others_met:
            continue
        if rep.min_margin is None or report.margin < rep.min_margin:
            rep.min_margin = float(report.margin)
        if report.margin < -report.metadata["bound"]:
            rep.found = True
            d = inst.to_json()
            d["extra"] = {"theorem": target, "dropped": drop, "mode": mode, "tolerance": tol.to_dict(),
                          "campaign_margin": float(report.margin)}
            rep.violation = {"trial": trial, "seed": inst.seed, "margin": float(report.margin), "instance": d}
            break
    return rep
