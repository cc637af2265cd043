"""Experiment runner: wires a strategy stack onto the engine and scores it per epoch."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

from .envsim import AttachError, DeliveryStatus, Engine
from .faults import FaultGuard, GuardRejection
from .model import Direction, Metric, Scenario, load_scenario, scenario_to_dict, validate_scenario
from .monitor import MonitorRequest, MonitorRound, monitor
from .predictor import CarrierPredictor, seed_profiles
from .profiles import ProfileStore
from .strategies import (
    Action,
    StrategyContext,
    StrategySpec,
    get_strategy,
    oracle_optimal,
    run_strategy,
)
from .switching import SwitchExecutor, SwitchInProgressError, TargetNotScannedError

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FORMATS = ("json", "csv")


class LengthMismatchError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: str | Path | Scenario
    strategy: str = "tree"
    metric: str = "latency"
    seed: int | None = None
    epoch: float = 1.0
    out: str | Path | None = None
    format: str = "json"
    disruption_avoidance: bool = True
    platform_overhead: float | None = None
    rebuild_every: int = 32

    def __post_init__(self):
        if not self.epoch > 0:
            raise ValueError("epoch interval must be > 0")
        if self.format not in FORMATS:
            raise ValueError(f"unknown format {self.format!r}")
        Metric(self.metric)

    def load(self) -> Scenario:
        s = self.scenario if isinstance(self.scenario, Scenario) else load_scenario(self.scenario)
        s = validate_scenario(s)
        if self.seed is not None:
            s = replace(s, seed=self.seed)
        if self.platform_overhead is not None:
            s = replace(s, platform_overhead=self.platform_overhead)
        return s


# --------------------------------------------------------------------------
# metric definitions


def compute_metrics(I: Sequence[str | None], I_opt: Sequence[str | None],
                    x: Sequence[float], x_opt: Sequence[float]) -> dict[str, Any]:
    """Hit ratio and gap ratios; epochs with a zero optimum carry no gap ratio."""
    if not (len(I) == len(I_opt) == len(x) == len(x_opt)):
        raise LengthMismatchError("LENGTH_MISMATCH")
    n = len(I)
    hits = sum(1 for a, b in zip(I, I_opt) if a == b)
    gammas: list[float | None] = []
    excluded = []
    for k, (v, best, a, b) in enumerate(zip(x, x_opt, I, I_opt)):
        if best == 0:
            excluded.append(k)
            gammas.append(None)
        elif a == b:
            gammas.append(0.0)
        else:
            gammas.append(abs(v - best) / best)
    if excluded:
        log.warning("ZERO_OPTIMUM: %d epoch(s) excluded from gap ratios", len(excluded))
    plus = [g for g in gammas if g is not None and g > 0]
    return {
        "epochs": n,
        "hit_ratio": hits / n if n else 1.0,
        "gamma": gammas,
        "gamma_plus_count": len(plus),
        "gamma_plus_median": statistics.median(plus) if plus else 0.0,
        "gamma_plus_max": max(plus) if plus else 0.0,
        "excluded_epochs": excluded,
    }


@dataclass
class MetricsReport:
    scenario: str
    strategy: str
    metric: str
    seed: int
    epoch: float
    times: list[float]
    I: list[str | None]
    I_opt: list[str | None]
    x: list[float]
    x_opt: list[float]
    core: dict[str, Any]
    switches: list[dict]
    disruption: dict[str, Any]
    scan: dict[str, Any]
    deliveries: dict[str, Any]
    verdicts: list[dict] = field(default_factory=list)
    strategy_errors: list[list] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    @property
    def hit_ratio(self) -> float:
        return self.core["hit_ratio"]

    @property
    def gamma(self) -> list[float | None]:
        return self.core["gamma"]

    @property
    def gamma_plus_median(self) -> float:
        return self.core["gamma_plus_median"]

    @property
    def gamma_plus_max(self) -> float:
        return self.core["gamma_plus_max"]

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "scenario": self.scenario, "strategy": self.strategy, "metric": self.metric,
            "seed": self.seed, "epoch": self.epoch,
            "epochs": {"time": self.times, "I": self.I, "I_opt": self.I_opt,
                       "x": self.x, "x_opt": self.x_opt, "gamma": self.core["gamma"]},
            "summary": {k: v for k, v in self.core.items() if k != "gamma"},
            "switches": self.switches, "disruption": self.disruption, "scan": self.scan,
            "deliveries": self.deliveries, "verdicts": self.verdicts,
            "strategy_errors": self.strategy_errors,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MetricsReport":
        ep = d["epochs"]
        core = dict(d["summary"], gamma=ep["gamma"])
        return cls(d["scenario"], d["strategy"], d["metric"], d["seed"], d["epoch"],
                   ep["time"], ep["I"], ep["I_opt"], ep["x"], ep["x_opt"], core,
                   d["switches"], d["disruption"], d["scan"], d["deliveries"],
                   d.get("verdicts", []), d.get("strategy_errors", []), d["schema_version"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def summary_rows(self) -> list[tuple[str, Any]]:
        c = self.core
        return [
            ("scenario", self.scenario), ("strategy", self.strategy), ("metric", self.metric),
            ("seed", self.seed), ("schema_version", self.schema_version),
            ("epochs", c["epochs"]), ("hit_ratio", c["hit_ratio"]),
            ("gamma_plus_median", c["gamma_plus_median"]), ("gamma_plus_max", c["gamma_plus_max"]),
            ("switch_count", self.disruption["count"]),
            ("mean_disruption", self.disruption["mean"]),
            ("total_scan_time", self.scan["total_scan_time"]),
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "time", "I", "I_opt", "x", "x_opt", "gamma"])
        for k, row in enumerate(zip(self.times, self.I, self.I_opt, self.x, self.x_opt, self.gamma)):
            w.writerow([k, *("" if v is None else v for v in row)])
        w.writerow([])
        w.writerow(["summary", "value"])
        for key, v in self.summary_rows():
            w.writerow([key, v])
        return buf.getvalue()


def export_report(report: MetricsReport, fmt: str, path: str | Path) -> Path:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    text = report.to_json() if fmt == "json" else report.to_csv()
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"IO_FAILURE: {exc}") from exc
    return path


# --------------------------------------------------------------------------
# one run


class Simulation:
    """A strategy stack on one engine.

    ``baseline`` never monitors and only reacts to loss of service. ``optimal``
    re-evaluates the oracle at each tick and switches straight to it. Every other
    strategy runs through monitor -> fault guard -> decision -> direct switch.
    Loss of service always falls back to legacy selection.
    """

    def __init__(self, scenario: Scenario, spec: StrategySpec | str, metric: Metric | str = Metric.LATENCY,
                 *, epoch: float = 1.0, disruption_avoidance: bool = True,
                 rebuild_every: int = 32, learn: bool | None = None):
        self.scenario = scenario
        self.spec = get_strategy(spec) if isinstance(spec, str) else spec
        self.metric = Metric(metric)
        self.epoch = epoch
        self.avoidance = disruption_avoidance
        self.engine = Engine(scenario, tick=epoch)
        self.executor = SwitchExecutor(self.engine)
        self.profiles = ProfileStore()
        self.engine.listeners.append(self.profiles.update)
        self.predictor = CarrierPredictor(self.metric, self.profiles, rebuild_every=rebuild_every)
        self.learn = self.spec.name in ("tree", "min-latency") if learn is None else learn
        if self.learn:
            self.predictor.warm_up(scenario.history, scenario)
        else:
            seed_profiles(self.profiles, scenario.history, scenario)
        self.guard = FaultGuard(self.profiles, scenario.requirements, scenario.service_floor)
        self.ctx = StrategyContext(scenario, self.metric, self.profiles, self.predictor,
                                   scenario.billing)
        self.request = MonitorRequest(scenario.requested_networks, disruption_avoidance)
        self.rounds: list[MonitorRound] = []
        self.round: MonitorRound | None = None
        self.decisions: list[dict] = []
        self.rejections: list[dict] = []
        if self.spec.stack == "monitored":
            self.engine.tick_hooks.append(self._monitor_tick)
        elif self.spec.stack == "optimal":
            self.engine.tick_hooks.append(self._optimal_tick)

    # -- stacks --------------------------------------------------------------
    def _monitor_tick(self, engine: Engine, t: float) -> None:
        if self.round is not None and not self.round.finished:
            return
        if engine.transition is not None or engine.device.registered is None or engine.off_frequency:
            return
        self.round = monitor(self.request, engine, self._decide)
        self.rounds.append(self.round)

    def _decide(self, scan) -> None:
        if self.round is not None and self.round.final_call:
            return  # same complete result as the last per-network call
        eng = self.engine
        current = eng.device.registered
        filtered = self.guard.filter(scan, current, eng.clock)
        self.ctx.current, self.ctx.time = current, eng.clock
        d = run_strategy(self.spec.fn, filtered, self.ctx)
        self.decisions.append({"time": eng.clock, "action": d.action.value, "target": d.target,
                               "partial": d.decided_on_partial, "reason": d.reason})
        if d.action is not Action.SWITCH:
            return
        try:
            self.guard.check_switch(d.target)
            self.executor.direct_switch(d.target, filtered)
        except (GuardRejection, TargetNotScannedError, SwitchInProgressError, AttachError) as exc:
            self.rejections.append({"time": eng.clock, "target": d.target, "error": str(exc)})

    def _optimal_tick(self, engine: Engine, t: float) -> None:
        target = oracle_optimal(self.scenario, t, self.metric)
        if target is None or engine.transition is not None or target == engine.device.registered:
            return
        self.executor.direct_switch(target, None, check=False)

    # -- run -------------------------------------------------------------
    def chosen(self, t: float) -> str | None:
        if self.spec.stack == "optimal":
            return oracle_optimal(self.scenario, t, self.metric)
        return self.engine.chosen_network

    def value(self, network: str | None, t: float) -> float:
        perf = self.scenario.performance
        if network is None:
            return perf.outage_value(self.metric)
        cell = self.scenario.best_cell(network, t, accessible=True)
        if cell is None:
            return perf.outage_value(self.metric)
        return perf.value(self.scenario.network(network), self.metric, self.scenario.rss(cell.cell_id, t))

    def epoch_times(self) -> list[float]:
        h = self.engine.horizon
        n = math.ceil(h / self.epoch - 1e-9)
        return [k * self.epoch for k in range(n) if k * self.epoch < h]

    def run(self) -> MetricsReport:
        eng = self.engine
        eng.start()
        if self.scenario.initial_registration is None:
            eng.schedule(0.0, lambda e: self.executor.start_selection(None))
        times, I, I_opt, x, x_opt = [], [], [], [], []
        for t in self.epoch_times():
            eng.run(until=t)
            chosen = self.chosen(t)
            best = oracle_optimal(self.scenario, t, self.metric)
            times.append(t)
            I.append(chosen)
            I_opt.append(best)
            x.append(self.value(chosen, t))
            x_opt.append(self.value(best, t))
            self._observe(t)
        eng.run(until=eng.horizon)
        if self.round is not None and not self.round.finished:
            self.round.cancel()
        core = compute_metrics(I, I_opt, x, x_opt)
        return MetricsReport(
            scenario=self.scenario.name, strategy=self.spec.name, metric=self.metric.value,
            seed=self.scenario.seed, epoch=self.epoch, times=times, I=I, I_opt=I_opt,
            x=x, x_opt=x_opt, core=core, switches=self.switch_records(),
            disruption=self.disruption_stats(), scan=self.scan_stats(),
            deliveries=self.delivery_stats(), verdicts=self.guard.records(),
            strategy_errors=[list(e) for e in self.ctx.errors],
        )

    def _observe(self, t: float) -> None:
        """The device measures the network it is actually using."""
        eng = self.engine
        net, cell = eng.device.registered, eng.device.serving_cell
        if not self.learn or net is None or eng.transition is not None or eng.off_frequency:
            return
        if not self.scenario.is_available(cell, t):
            return
        rss = self.scenario.rss(cell, t)
        label = self.scenario.performance.value(self.scenario.network(net), self.metric, rss)
        self.predictor.observe(net, rss, label, t, cell)

    # -- statistics --------------------------------------------------------
    def switch_records(self) -> list[dict]:
        recs = [r.to_record() for r in self.engine.switch_log]
        tr = self.engine.transition
        if tr is not None:
            recs.append({
                "t_start": tr.start, "t_end": self.engine.horizon, "from_network": tr.from_network,
                "to_network": None, "kind": tr.kind.value, "n_t": tr.n_t, "scan_cost": tr.scan_cost,
                "attach_cost": tr.attach_cost, "platform_overhead": tr.platform_overhead,
                "open": True,
            })
        return recs

    def disruption_stats(self) -> dict[str, Any]:
        per = [r["t_end"] - r["t_start"] for r in self.switch_records()]
        inter = [r for r in self.engine.switch_log if r.kind.value != "INTRA_RAT"
                 and r.from_network is not None and r.to_network is not None
                 and self.scenario.network(r.from_network).plmn != self.scenario.network(r.to_network).plmn]
        return {
            "count": len(per), "per_switch": per, "total": math.fsum(per),
            "mean": math.fsum(per) / len(per) if per else 0.0, "max": max(per) if per else 0.0,
            "inter_carrier_switches": len(inter),
            "unregistered_time": self.engine.timeline.unregistered_time(0.0, self.engine.horizon),
        }

    def scan_stats(self) -> dict[str, Any]:
        mon_time = math.fsum(r.scan_elapsed for r in self.rounds)
        mon_cells = sum(r.cells_scanned for r in self.rounds)
        sel = [r for r in self.switch_records() if r["kind"] == "BASELINE"]
        sel_time = math.fsum(r["scan_cost"] for r in sel)
        return {
            "monitor_rounds": len(self.rounds),
            "monitor_cells_scanned": mon_cells,
            "monitor_scan_time": mon_time,
            "selection_cells_scanned": sum(r["n_t"] for r in sel),
            "selection_scan_time": sel_time,
            "total_scan_time": mon_time + sel_time,
        }

    def delivery_stats(self) -> dict[str, Any]:
        recs = self.engine.deliveries()
        out: dict[str, Any] = {s.value: 0 for s in DeliveryStatus}
        monitoring = 0
        for r in recs:
            out[r.status.value] += 1
            if r.direction is Direction.DOWNLINK and r.status is not DeliveryStatus.DELIVERED \
                    and r.cause == "monitoring":
                monitoring += 1
        out["downlink_disrupted_by_monitoring"] = monitoring
        out["flows"] = len(recs)
        return out

    def monitor_log(self) -> list[dict]:
        return [dict(rec, round=i) for i, r in enumerate(self.rounds) for rec in r.log]


def run_scenario(config: RunConfig) -> MetricsReport:
    report, _ = run_with_simulation(config)
    return report


def run_with_simulation(config: RunConfig) -> tuple[MetricsReport, Simulation]:
    scenario = config.load()
    spec = get_strategy(config.strategy)
    sim = Simulation(scenario, spec, config.metric, epoch=config.epoch,
                     disruption_avoidance=config.disruption_avoidance,
                     rebuild_every=config.rebuild_every)
    report = sim.run()
    if config.out is not None:
        export_report(report, config.format, config.out)
    return report, sim


# --------------------------------------------------------------------------
# side-by-side comparison


class ScenarioMismatchError(ValueError):
    pass


@dataclass
class Comparison:
    reports: list[MetricsReport]

    COLUMNS = ("strategy", "hit_ratio", "gamma_plus_median", "gamma_plus_max",
               "mean_disruption", "total_scan_time")

    def rows(self) -> list[dict[str, Any]]:
        return [{
            "strategy": r.strategy, "hit_ratio": r.hit_ratio,
            "gamma_plus_median": r.gamma_plus_median, "gamma_plus_max": r.gamma_plus_max,
            "mean_disruption": r.disruption["mean"], "total_scan_time": r.scan["total_scan_time"],
        } for r in self.reports]

    def table_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(self.rows())
        return buf.getvalue()

    def gamma_csv(self) -> str:
        """Per-epoch gap ratios, one column per strategy (ready for a CDF plot)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "time", *(r.strategy for r in self.reports)])
        if self.reports:
            for k, t in enumerate(self.reports[0].times):
                w.writerow([k, t, *("" if r.gamma[k] is None else r.gamma[k] for r in self.reports)])
        return buf.getvalue()

    def text(self) -> str:
        lines = [f"{'strategy':<14}{'hit':>8}{'med(g+)':>10}{'max(g+)':>10}{'disrupt':>10}{'scan':>10}"]
        for r in self.rows():
            lines.append(f"{r['strategy']:<14}{r['hit_ratio']:>8.3f}{r['gamma_plus_median']:>10.3f}"
                         f"{r['gamma_plus_max']:>10.3f}{r['mean_disruption']:>10.2f}{r['total_scan_time']:>10.1f}")
        return "\n".join(lines)


def compare(configs: Sequence[RunConfig]) -> Comparison:
    if not configs:
        return Comparison([])
    scenarios = [c.load() for c in configs]
    ref = scenario_to_dict(replace(scenarios[0], seed=0, platform_overhead=0.0))
    for s in scenarios[1:]:
        if scenario_to_dict(replace(s, seed=0, platform_overhead=0.0)) != ref:
            raise ScenarioMismatchError("compare needs every config on the same scenario")
    reports = []
    for c, s in zip(configs, scenarios):
        reports.append(run_scenario(replace(c, scenario=s, seed=None, platform_overhead=None)))
    return Comparison(reports)
