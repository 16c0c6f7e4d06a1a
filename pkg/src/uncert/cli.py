"""``uncert`` command line: verification campaigns, counterexample search, replay.

Exit codes: 0 all pass (hypothesis-unmet trials never fail a run), 1 at least
one margin failure or a counterexample found, 2 configuration or input error,
3 internal numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .campaign import SEARCH_DROPS, CampaignConfig, counterexample_search, replay, run_campaign
from .errors import NumericalError, UncertError
from .instances import DEFAULT_ALPHA_GRID, InstanceSpec
from .io import dump_json, load_json
from .linalg import Tolerance
from .registry import THEOREMS, theorem_ids

log = logging.getLogger("uncert")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uncert", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"uncert {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a seeded verification campaign")
    v.add_argument("--config", help="campaign config JSON (other campaign flags are ignored)")
    v.add_argument("--theorem", default="all",
                   help="theorem id, comma-separated ids, or 'all' applicable ones (default)")
    v.add_argument("--blocks", type=_int_list, default=(2,), help="block sizes, e.g. 2,3")
    v.add_argument("--map", dest="map_kind", default="center-expectation",
                   choices=["usual-trace", "scaled-block-trace", "center-expectation", "composite"])
    v.add_argument("--k", type=int, default=1, help="number of block-trace rows (scaled/composite maps)")
    v.add_argument("--codomain", type=_int_list, default=(2,), help="codomain blocks of composite maps")
    v.add_argument("--alpha-grid", type=_float_list, default=DEFAULT_ALPHA_GRID)
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--tol", type=float, default=1e-8, help="relative tolerance")
    v.add_argument("--abs-tol", type=float, default=1e-10, help="absolute tolerance")
    v.add_argument("--mode", choices=["strict", "relaxed"], default="relaxed")
    v.add_argument("--threads", type=int, default=None, help="worker processes (default: UNCERT_THREADS)")
    v.add_argument("--out", help="write the JSON report here (plus CSV and argmin instances)")

    s = sub.add_parser("search", help="look for a violation after dropping one hypothesis")
    s.add_argument("--target", required=True, help="theorem id")
    s.add_argument("--drop", default="none", choices=sorted(SEARCH_DROPS))
    s.add_argument("--budget", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mode", choices=["strict", "relaxed"], default="relaxed")
    s.add_argument("--out", help="write the search report JSON here")

    r = sub.add_parser("replay", help="re-run a verifier on a saved instance")
    r.add_argument("--instance", required=True)
    r.add_argument("--theorem", required=True)
    r.add_argument("--mode", choices=["strict", "relaxed"], default=None,
                   help="defaults to the mode recorded in the instance file")
    r.add_argument("--out", help="write the verifier report JSON here")

    sub.add_parser("list", help="list theorem ids")
    return p


def _campaign_config(args) -> CampaignConfig:
    if args.config:
        cfg = CampaignConfig.from_json(load_json(args.config))
        if args.out:
            cfg = CampaignConfig(cfg.theorems, cfg.spec, cfg.tolerance, cfg.mode, args.out)
        return cfg
    spec = InstanceSpec(block_dims=args.blocks, map_kind=args.map_kind, alpha_grid=args.alpha_grid,
                        trials=args.trials, seed=args.seed, k=args.k, codomain_dims=args.codomain)
    tol = Tolerance(rel=args.tol, abs=args.abs_tol)
    if args.theorem == "all":
        return CampaignConfig.for_all(spec, tolerance=tol, mode=args.mode, output_path=args.out)
    ids = tuple(t.strip() for t in args.theorem.split(",") if t.strip())
    return CampaignConfig(ids, spec, tol, args.mode, args.out)


def _cmd_verify(args) -> int:
    cfg = _campaign_config(args)
    log.info("running %d trials of %s", cfg.spec.trials, ", ".join(cfg.theorems))
    report = run_campaign(cfg, threads=args.threads)
    width = max(len(t) for t in cfg.theorems)
    for t in cfg.theorems:
        s = report.summaries[t]
        mm = "n/a" if s.min_margin is None else f"{s.min_margin:.3e}"
        print(f"{t:<{width}}  trials={s.trials} pass={s.passes} fail={s.failures} unmet={s.unmet} min_margin={mm}")
    print(f"wall_time={report.wall_time:.2f}s backend={report.backend}")
    if cfg.output_path:
        print(f"report written to {cfg.output_path}")
    return report.exit_code


def _cmd_search(args) -> int:
    rep = counterexample_search(args.target, args.drop, args.budget, args.seed, mode=args.mode)
    print(rep.message)
    if args.out:
        dump_json(rep.to_json(), args.out)
        if rep.found:
            inst_path = args.out.rsplit(".", 1)[0] + ".instance.json"
            dump_json(rep.violation["instance"], inst_path)
            print(f"instance written to {inst_path}")
    return rep.exit_code


def _cmd_replay(args) -> int:
    report = replay(args.instance, args.theorem, mode=args.mode)
    print(f"{report.theorem}: {report.outcome} margin={report.margin:.6e} mode={report.mode}")
    for h in report.hypotheses:
        print(f"  {h.name}: {h.status}" + (f" ({h.detail})" if h.detail else ""))
    if args.out:
        dump_json(report.to_json(), args.out)
    return EXIT_FAIL if report.outcome == "fail" else EXIT_OK


def _cmd_list(args) -> int:
    for t in theorem_ids(include_synthetic=True):
        th = THEOREMS[t]
        tag = " (synthetic)" if th.synthetic else ""
        print(f"{t}{tag}: {th.summary}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"verify": _cmd_verify, "search": _cmd_search, "replay": _cmd_replay, "list": _cmd_list}
    try:
        return handlers[args.command](args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UncertError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
