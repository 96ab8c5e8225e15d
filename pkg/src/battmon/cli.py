"""Command line entry point: ``battmon run|simulate|filters|verify``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from . import harness
from .errors import BattmonError, ConfigError
from .estimators import VARIANTS

log = logging.getLogger("battmon")

FILTER_KEYS = {
    "EKF": {"p0": "'paper' | 'identity' | matrix", "q": "4x4", "r": "2x2"},
    "PF": {
        "particles": "int (500)",
        "resample_threshold": "fraction of N (0.5)",
        "p0": "'identity' | matrix",
        "q": "4x4 (particle jitter)",
        "r": "2x2",
    },
    "QKF": {"points_per_dim": "3 | 5", "p0": "'identity' | matrix", "q": "4x4", "r": "2x2"},
    "SVSF": {
        "gamma": "4 values in [0, 1) (0.4)",
        "psi": "4 positive widths ([1e-3, 1e-3, 1e-2, 1e-2])",
        "error_bound": "volts (1000)",
        "dwell_steps": "int (100)",
    },
}


def _apply_overrides(raw: dict, args) -> dict:
    if getattr(args, "seed", None) is not None:
        raw["scenario"]["seed"] = args.seed
        raw.setdefault("filters", {}).setdefault("common", {})["seed"] = None
    if getattr(args, "case", None):
        raw["cases"] = list(harness.CASE_ALIASES[args.case])
    if getattr(args, "runs", None) is not None:
        raw["monte_carlo_runs"] = args.runs
    if getattr(args, "filters", None):
        raw.setdefault("filters", {})["enabled"] = [
            f.strip().upper() for f in args.filters.split(",") if f.strip()
        ]
    if getattr(args, "out", None):
        raw["output_dir"] = args.out
    return raw


def _load(args) -> harness.HarnessConfig:
    raw = _apply_overrides(harness.load_config(args.config), args)
    return harness.HarnessConfig.from_dict(raw)


def cmd_run(args) -> int:
    cfg = _load(args)
    results = harness.run_benchmark(cfg)
    paths = harness.export_all(results, cfg.output_dir, timing=not args.no_timing)
    for rr in results:
        for case, cr in rr.cases.items():
            t = cr.table
            for f in t.filters:
                flag = "  DIVERGED" if t.diverged[f] else ""
                print(
                    f"run {rr.run} {case:17s} {f:4s} "
                    f"V_Cb {t.rmse[(f, 'V_Cb')]:.3e}  V_Cc {t.rmse[(f, 'V_Cc')]:.3e}  "
                    f"time {t.wall_time[f]:.2f}s{flag}"
                )
        for case, order in rr.ranking.orders.items():
            print(f"run {rr.run} ranking {case}: {', '.join(order)}")
    print(f"wrote {len(paths)} files to {cfg.output_dir}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for case in cfg.cases:
        truth = harness.simulate_truth(cfg.case_scenario(case))
        rows = [["t", "i_s", "v_cb", "v_cc", "c_b", "c_c", "v_o", "z1", "z2"]]
        for k in range(len(truth)):
            rows.append(
                [harness.fmt(v) for v in (
                    truth.t[k], truth.i_s[k], truth.v_cb[k], truth.v_cc[k],
                    truth.c_b[k], truth.c_c[k], truth.v_o[k], truth.z[k, 0], truth.z[k, 1],
                )]
            )
        path = out / f"truth_{case}.csv"
        path.write_text(harness._csv_text(rows))
        print(f"wrote {path} ({len(truth)} steps)")
    return 0


def cmd_filters(args) -> int:
    for v in VARIANTS:
        print(v)
        for key, desc in FILTER_KEYS[v].items():
            print(f"  {key:20s} {desc}")
    print("common (filters.common):")
    print(f"  {'seed':20s} int or null (derived from scenario seed)")
    print(f"  {'initial_voltage_offset':20s} [dV_cb, dV_cc] added to the filters' first guess")
    return 0


def cmd_verify(args) -> int:
    from .verify import run_checks

    failures = 0
    for name, ok, detail in run_checks():
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="battmon",
        description="State/parameter estimation benchmark on an RC battery model.",
    )
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_filters=True):
        sp.add_argument("--config", help="YAML config (defaults to paper_default)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--case", choices=sorted(harness.CASE_ALIASES))
        sp.add_argument("--seed", type=int, help="scenario seed (u64)")
        if with_filters:
            sp.add_argument("--runs", type=int, help="Monte Carlo repetitions")
            sp.add_argument("--filters", help="comma list, e.g. ekf,pf,qkf,svsf")

    sp = sub.add_parser("run", help="full benchmark")
    common(sp)
    sp.add_argument(
        "--no-timing", action="store_true",
        help="leave wall-time cells empty so outputs are byte-reproducible",
    )
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("simulate", help="truth trajectories only")
    common(sp, with_filters=False)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("filters", help="list filter variants and their config keys")
    sp.set_defaults(func=cmd_filters)

    sp = sub.add_parser("verify", help="run invariant and oracle checks on small instances")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("dump-config", help="print the shipped paper_default config")
    sp.set_defaults(func=lambda a: print(harness.default_config_text(), end="") or 0)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
    except (BattmonError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
