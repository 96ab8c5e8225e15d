"""Benchmark orchestration: config loading, running cases, CSV export."""

from __future__ import annotations

import copy
import csv
import io
import logging
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .battery import BatteryParams, CurrentProfile, FaultProfile
from .core import NoiseSpec, capacitance_from_reciprocal
from .errors import ConfigError
from .estimators import VARIANTS, EstimatorConfig, make_estimator
from .metrics import QUANTITIES, RankTable, RmseTable, rank_filters, rmse
from .scenario import MismatchSpec, Scenario, TruthRecord, filter_model_for, simulate_truth

log = logging.getLogger(__name__)

CASES = ("noise_only", "with_model_error")
CASE_ALIASES = {"noise": ("noise_only",), "mismatch": ("with_model_error",), "both": CASES}
TIMESERIES_HEADER = (
    "t,i_s,v_cb_true,v_cc_true,c_b_true,c_c_true,v_o,z1,z2,"
    "v_cb_est,v_cc_est,c_b_est,c_c_est,diverged"
).split(",")
TIME_ROW = "Simulation time (sec)"

# Off-diagonal 30, diagonal 1: the trial-and-error EKF starting covariance.
PAPER_P0 = np.full((4, 4), 30.0) + np.diag(np.full(4, -29.0))


def default_config_text() -> str:
    return resources.files("battmon.configs").joinpath("paper_default.yaml").read_text()


def load_config(path=None) -> dict:
    """Read a YAML config, layered over the shipped ``paper_default``."""
    base = yaml.safe_load(default_config_text())
    if path is None:
        return base
    try:
        with open(path) as fh:
            user = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return _merge(base, user)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _matrix(value, n, name) -> np.ndarray:
    if isinstance(value, str):
        if value == "identity":
            return np.eye(n)
        if value == "paper" and n == 4:
            return PAPER_P0.copy()
        raise ConfigError(f"{name}: unknown matrix keyword {value!r}")
    m = np.asarray(value, dtype=float)
    if m.ndim == 0:
        return float(m) * np.eye(n)
    if m.ndim == 1 and m.shape == (n,):
        return np.diag(m)
    if m.shape != (n, n):
        raise ConfigError(f"{name}: expected {n}x{n}, got shape {m.shape}")
    return m


def _noise_cov(block, n, name):
    if "std" in block:
        std = np.broadcast_to(np.asarray(block["std"], dtype=float), (n,))
        return np.diag(std**2)
    return _matrix(block.get("cov", 0.0), n, name)


@dataclass
class HarnessConfig:
    raw: dict
    scenario: Scenario
    filters: dict  # variant -> dict of per-filter settings
    cases: tuple
    monte_carlo_runs: int = 1
    output_dir: str = "results"

    @classmethod
    def from_dict(cls, raw: dict) -> "HarnessConfig":
        try:
            return cls._from_dict(raw)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    @classmethod
    def _from_dict(cls, raw):
        raw = copy.deepcopy(raw)
        sc = raw["scenario"]
        b = sc["battery"]
        params = BatteryParams(
            r_e=b["r_e"], r_c=b["r_c"], r_t=b["r_t"], c_b=b["c_b"], c_c=b["c_c"],
            t_s=sc.get("t_s", 0.01),
        )
        cur = sc.get("current", {})
        current = CurrentProfile(
            samples=tuple(tuple(s) for s in cur.get("samples", ())),
            period=cur.get("period"),
            components=tuple(cur.get("components", ())),
        )
        faults = sc.get("faults") or {}
        fault_profiles = tuple(
            FaultProfile(
                tuple(tuple(p) for p in faults[key]["breakpoints"]),
                faults[key].get("mode", "step"),
            )
            if key in faults
            else FaultProfile.constant(getattr(params, key))
            for key in ("c_b", "c_c")
        )
        noise_block = sc.get("noise", {})
        noise = NoiseSpec(
            process_cov=_noise_cov(noise_block.get("process", {}), 4, "noise.process"),
            measurement_cov=_noise_cov(
                noise_block.get("measurement", {}), 2, "noise.measurement"
            ),
            seed=int(sc.get("seed", 0)),
        )
        mm = sc.get("mismatch", {})
        mismatch = MismatchSpec(
            enabled=False,
            **{k: float(mm.get(k, 1.0)) for k in ("r_e", "r_c", "r_t", "c_b", "c_c")},
        )
        scenario = Scenario(
            duration=float(sc["duration"]),
            current=current,
            true_params=params,
            noise=noise,
            faults=fault_profiles,
            mismatch=mismatch,
            initial_true_state=tuple(sc.get("initial_voltages", (3.7, 3.7))),
            initial_voltage_offset=tuple(
                raw.get("filters", {}).get("common", {}).get("initial_voltage_offset", (0.0, 0.0))
            ),
        )
        cases = raw.get("cases", list(CASES))
        if isinstance(cases, str):
            cases = CASE_ALIASES.get(cases, (cases,))
        cases = tuple(cases)
        for c in cases:
            if c not in CASES:
                raise ConfigError(f"unknown case {c!r}; expected one of {CASES}")
        runs = int(raw.get("monte_carlo_runs", 1))
        if runs < 1:
            raise ConfigError("monte_carlo_runs must be positive")
        filters = raw.get("filters", {})
        enabled = [v.upper() for v in filters.get("enabled", VARIANTS)]
        for v in enabled:
            if v not in VARIANTS:
                raise ConfigError(f"unknown filter {v!r}")
        per_filter = {v: dict(filters.get(v.lower(), {})) for v in enabled}
        cfg = cls(
            raw=raw,
            scenario=scenario,
            filters=per_filter,
            cases=cases,
            monte_carlo_runs=runs,
            output_dir=str(raw.get("output_dir", "results")),
        )
        # build once so bad filter blocks fail at load time
        for case in cases:
            for v in per_filter:
                cfg.estimator_config(v, cfg.case_scenario(case), 0)
        return cfg

    @property
    def seed(self) -> int:
        return self.scenario.seed

    def filter_seed(self, run: int) -> int:
        common = self.raw.get("filters", {}).get("common", {})
        base = common.get("seed")
        if base is None:
            base = int(np.random.SeedSequence([self.seed, 1]).generate_state(1)[0])
        return int(base) + run

    def case_scenario(self, case: str, run: int = 0) -> Scenario:
        s = self.scenario
        noise = NoiseSpec(s.noise.process_cov, s.noise.measurement_cov, s.seed + run)
        mismatch = MismatchSpec(
            enabled=(case == "with_model_error"),
            r_e=s.mismatch.r_e, r_c=s.mismatch.r_c, r_t=s.mismatch.r_t,
            c_b=s.mismatch.c_b, c_c=s.mismatch.c_c,
        )
        return Scenario(
            duration=s.duration, current=s.current, true_params=s.true_params,
            noise=noise, faults=s.faults, mismatch=mismatch,
            initial_true_state=s.initial_true_state,
            initial_voltage_offset=s.initial_voltage_offset,
        )

    def estimator_config(self, variant: str, scenario: Scenario, run: int) -> EstimatorConfig:
        common = self.raw.get("filters", {}).get("common", {})
        own = self.filters[variant]
        setup = filter_model_for(scenario)

        def pick(key, default):
            return own.get(key, common.get(key, default))

        return EstimatorConfig(
            variant=variant,
            initial_state=setup.initial_state,
            initial_cov=_matrix(pick("p0", "identity"), 4, f"{variant}.p0"),
            q=_matrix(pick("q", "identity"), 4, f"{variant}.q"),
            r=_matrix(pick("r", "identity"), 2, f"{variant}.r"),
            pf_particle_count=int(own.get("particles", 500)),
            pf_resample_threshold=float(own.get("resample_threshold", 0.5)),
            qkf_points_per_dim=int(own.get("points_per_dim", 3)),
            svsf_gamma=own.get("gamma", [0.4] * 4),
            svsf_psi=own.get("psi", [1e-3, 1e-3, 1e-2, 1e-2]),
            svsf_error_bound=float(own.get("error_bound", 1e3)),
            svsf_dwell_steps=int(own.get("dwell_steps", 100)),
            divergence_norm=float(pick("divergence_norm", 1e9)),
            seed=self.filter_seed(run),
        )

    def echo(self) -> dict:
        """Fully resolved config; loading it reproduces this run."""
        out = copy.deepcopy(self.raw)
        out.setdefault("filters", {}).setdefault("common", {})["seed"] = self.filter_seed(0)
        out["scenario"]["seed"] = self.seed
        out["cases"] = list(self.cases)
        out["monte_carlo_runs"] = self.monte_carlo_runs
        out["filters"]["enabled"] = list(self.filters)
        return out


@dataclass
class FilterTrace:
    x: np.ndarray  # (N, 4) estimates in reciprocal coordinates
    diverged: np.ndarray  # (N,) bool
    wall_ns: np.ndarray  # (N,) int

    @property
    def capacitances(self) -> np.ndarray:
        return capacitance_from_reciprocal(self.x[:, 2:])

    @property
    def wall_time(self) -> float:
        return float(self.wall_ns.sum()) / 1e9

    def series(self, quantity: str) -> np.ndarray:
        return {
            "V_Cb": self.x[:, 0],
            "V_Cc": self.x[:, 1],
            "C_b": self.capacitances[:, 0],
            "C_c": self.capacitances[:, 1],
        }[quantity]


@dataclass
class CaseResult:
    truth: TruthRecord
    traces: dict  # variant -> FilterTrace
    table: RmseTable


@dataclass
class RunResult:
    run: int
    seed: int
    cases: dict = field(default_factory=dict)  # case -> CaseResult
    ranking: Optional[RankTable] = None
    config_echo: dict = field(default_factory=dict)

    @property
    def diverged(self) -> dict:
        return {
            (case, f): bool(tr.diverged.any())
            for case, cr in self.cases.items()
            for f, tr in cr.traces.items()
        }


def run_filter(est, truth: TruthRecord) -> FilterTrace:
    n = len(truth)
    xs = np.empty((n, est.model.n_states))
    div = np.zeros(n, dtype=bool)
    wall = np.zeros(n, dtype=np.int64)
    z, i_s = truth.z, truth.i_s
    for k in range(n):
        e = est.step(z[k], None if k == 0 else i_s[k - 1])
        xs[k] = e.x
        div[k] = e.diverged
        wall[k] = e.wall_time_ns
    return FilterTrace(xs, div, wall)


def summarize(truth: TruthRecord, traces: dict) -> RmseTable:
    table = RmseTable()
    for f, tr in traces.items():
        for q in QUANTITIES:
            with np.errstate(over="ignore", invalid="ignore"):
                table.rmse[(f, q)] = rmse(truth.state(q), tr.series(q))
                table.conventional[(f, q)] = rmse(
                    truth.state(q), tr.series(q), conventional=True
                )
        table.wall_time[f] = tr.wall_time
        table.diverged[f] = bool(tr.diverged.any())
    return table


def run_case(cfg: HarnessConfig, case: str, run: int = 0) -> CaseResult:
    scenario = cfg.case_scenario(case, run)
    truth = simulate_truth(scenario)
    setup = filter_model_for(scenario)
    traces = {}
    for variant in cfg.filters:
        est = make_estimator(cfg.estimator_config(variant, scenario, run), setup.model)
        traces[variant] = run_filter(est, truth)
        if est.diverged:
            log.info("%s diverged at step %d in %s", variant, est.diverged_at, case)
    return CaseResult(truth, traces, summarize(truth, traces))


def run_benchmark(cfg: HarnessConfig, key: str = "voltage") -> list:
    """Run every enabled case for each Monte Carlo repetition.

    Repetition ``i`` offsets both the truth seed and the filter seed by
    ``i``; each case simulates its truth once and feeds the identical
    measurement stream to every filter.
    """
    results = []
    echo = cfg.echo()
    for run in range(cfg.monte_carlo_runs):
        rr = RunResult(run=run, seed=cfg.seed + run, config_echo=echo)
        for case in cfg.cases:
            rr.cases[case] = run_case(cfg, case, run)
        rr.ranking = rank_filters({c: cr.table for c, cr in rr.cases.items()}, key=key)
        results.append(rr)
    return results


# --- export ------------------------------------------------------------------


def fmt(x) -> str:
    return f"{float(x):.17g}"


def _write(path: Path, text: str):
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _summary_rows(result: RunResult, which: str, timing: bool):
    cols = [(f, c) for f in VARIANTS for c in result.cases if f in result.cases[c].traces]
    rows = [["quantity"] + [f"{f}:{c}" for f, c in cols]]
    if not cols:
        return rows
    for q in QUANTITIES:
        src = lambda c: getattr(result.cases[c].table, which)
        rows.append([q] + [fmt(src(c)[(f, q)]) for f, c in cols])
    rows.append(
        [TIME_ROW]
        + [fmt(result.cases[c].table.wall_time[f]) if timing else "" for f, c in cols]
    )
    return rows


def export(result: Optional[RunResult], out_dir, timing: bool = True) -> list:
    """Write the CSV set and config echo for one run; returns written paths.

    ``timing=False`` leaves the wall-time cells empty so every file is a
    pure function of the config.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    result = result or RunResult(run=0, seed=0)
    written = []

    def put(name, text):
        p = out / name
        _write(p, text)
        written.append(p)

    put("summary.csv", _csv_text(_summary_rows(result, "rmse", timing)))
    put("summary_conventional.csv", _csv_text(_summary_rows(result, "conventional", timing)))

    cases = list(result.cases)
    rank_rows = [["rank"] + cases]
    if result.ranking is not None and cases:
        orders = result.ranking.orders
        for i in range(max(len(o) for o in orders.values())):
            rank_rows.append([str(i + 1)] + [orders[c][i] if i < len(orders[c]) else "" for c in cases])
    put("ranking.csv", _csv_text(rank_rows))

    for case, cr in result.cases.items():
        tr = cr.truth
        for f, trace in cr.traces.items():
            caps = trace.capacitances
            rows = [TIMESERIES_HEADER]
            for k in range(len(tr)):
                rows.append(
                    [
                        fmt(tr.t[k]), fmt(tr.i_s[k]), fmt(tr.v_cb[k]), fmt(tr.v_cc[k]),
                        fmt(tr.c_b[k]), fmt(tr.c_c[k]), fmt(tr.v_o[k]),
                        fmt(tr.z[k, 0]), fmt(tr.z[k, 1]),
                        fmt(trace.x[k, 0]), fmt(trace.x[k, 1]),
                        fmt(caps[k, 0]), fmt(caps[k, 1]),
                        "1" if trace.diverged[k] else "0",
                    ]
                )
            put(f"timeseries_{case}_{f.lower()}.csv", _csv_text(rows))

    put("config_echo.yaml", yaml.safe_dump(result.config_echo, sort_keys=True))
    return written


def export_all(results: list, out_dir, timing: bool = True) -> list:
    """One run goes straight into ``out_dir``; several go to ``run_NNN/``."""
    if len(results) <= 1:
        return export(results[0] if results else None, out_dir, timing)
    paths = []
    for rr in results:
        paths += export(rr, os.path.join(out_dir, f"run_{rr.run:03d}"), timing)
    return paths
