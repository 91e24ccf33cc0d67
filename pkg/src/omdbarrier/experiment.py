"""Experiment configuration, execution and result files."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import core, ops, quantum
from .comparator import best_crp, best_fixed_state, comparator_losses
from .data import (MARKET_KINDS, POVM_KINDS, STATE_KINDS, generate_market,
                   generate_quantum_stream, read_market_csv, read_observables_json)

ALGORITHMS = {"eg": "ops", "lb-omd": "ops", "lb-ftrl": "ops", "q-lb-omd": "quantum"}
QUANTUM_SOURCE = "povm-stream"
CSV_COLUMNS = ("t", "loss", "cum_loss", "cmp_cum_loss", "regret", "r_t")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    algorithm: str
    d: int
    T: int
    problem: str | None = None
    source: str | None = None
    """Market kind, ``povm-stream`` for generated measurements, or a file path."""
    seed: int = 0
    output: str | None = None
    name: str | None = None
    gamma: float | None = None
    eta: float | None = None
    eg_variant: str = "log-d"
    state: str = "random"
    povm: str = "haar"
    kahan: bool = False
    comparator_tol: float = 1e-6

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; choose from {sorted(ALGORITHMS)}")
        expected = ALGORITHMS[self.algorithm]
        if self.problem is None:
            self.problem = expected
        if self.problem != expected:
            raise ConfigError(f"algorithm {self.algorithm} solves {expected} problems, not {self.problem}")
        if self.d < 2 or self.T < 2:
            raise ConfigError("need d >= 2 and T >= 2")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.state not in STATE_KINDS:
            raise ConfigError(f"unknown state kind {self.state!r}")
        if self.povm not in POVM_KINDS:
            raise ConfigError(f"unknown POVM kind {self.povm!r}")
        if self.source is None:
            self.source = "iid-uniform" if self.problem == "ops" else QUANTUM_SOURCE
        if not self.is_file:
            kinds = MARKET_KINDS if self.problem == "ops" else (QUANTUM_SOURCE,)
            if self.source not in kinds:
                raise ConfigError(f"unknown source {self.source!r}; choose from {kinds} or a file path")
        self.schedule()  # raises on constraint violations

    @property
    def is_file(self) -> bool:
        return Path(self.source).suffix.lower() in (".csv", ".json")

    def schedule(self) -> tuple[float | None, float]:
        """``(gamma, eta)`` after applying overrides; ``gamma`` is None except for EG."""
        try:
            if self.algorithm == "eg":
                if self.gamma is None or self.eta is None:
                    gamma, eta = core.eg_schedule(self.T, self.d, self.eg_variant)
                    gamma = self.gamma if self.gamma is not None else gamma
                    eta = self.eta if self.eta is not None else eta
                else:
                    gamma, eta = self.gamma, self.eta
                if not 0 < gamma < 1 or not eta > 0:
                    raise ConfigError("EG needs 0 < gamma < 1 and eta > 0")
                return gamma, eta
            if self.algorithm in ("lb-omd", "q-lb-omd"):
                eta = self.eta if self.eta is not None else core.lb_schedule(self.T, self.d)
                if not 0 < eta < 1:
                    raise ConfigError("LB-OMD needs 0 < eta < 1")
                return None, eta
            eta = self.eta if self.eta is not None else core.lbftrl_eta(self.T, self.d)
            if not 0 < eta <= 0.25:
                raise ConfigError("LB-FTRL needs 0 < eta <= 1/4")
            return None, eta
        except core.ScheduleError as exc:
            raise ConfigError(str(exc)) from exc

    def stem(self) -> str:
        return self.name or f"{self.algorithm}_d{self.d}_T{self.T}_s{self.seed}"


def regret_bound(algorithm: str, T: int, d: int, eta: float, gamma: float | None = None) -> float:
    """Regret bound for the configured schedule.

    EG: ``log d / eta + T d eta / (gamma - d eta) + gamma T log d``;
    LB-OMD / Q-LB-OMD: ``d log T / eta + T eta / (1 - eta) + 2``;
    LB-FTRL: ``d log T / eta + 2 eta T + 2``.  At the default schedules the
    first two reduce to the closed-form bounds in ``core``.
    """
    if algorithm == "eg":
        if d * eta >= gamma:
            return math.inf
        logd = math.log(d)
        return logd / eta + T * d * eta / (gamma - d * eta) + gamma * T * logd
    if algorithm in ("lb-omd", "q-lb-omd"):
        return d * math.log(T) / eta + T * eta / (1 - eta) + 2
    if algorithm == "lb-ftrl":
        return core.lbftrl_regret_bound(T, d, eta)
    raise ValueError(algorithm)


def load_stream(config: ExperimentConfig) -> np.ndarray:
    if config.problem == "ops":
        if config.is_file:
            market = read_market_csv(config.source)
        else:
            market = generate_market(config.source, config.d, config.T, config.seed)
        if market.shape != (config.T, config.d):
            raise ConfigError(f"stream has shape {market.shape}, expected {(config.T, config.d)}")
        return market
    if config.is_file:
        obs = read_observables_json(config.source)
    else:
        obs = generate_quantum_stream(config.d, config.T, config.seed, config.state, config.povm).observables
    if obs.shape != (config.T, config.d, config.d):
        raise ConfigError(f"stream has shape {obs.shape}, expected {(config.T, config.d, config.d)}")
    return obs


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    log: core.ExperimentLog
    plays: np.ndarray
    comparator: object
    summary: dict
    stream: np.ndarray


def run_experiment(config: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Run the learner, compute the comparator, and optionally write CSV + JSON."""
    stream = load_stream(config)
    gamma, eta = config.schedule()
    start = time.perf_counter()
    if config.algorithm == "eg":
        run = ops.run_eg(stream, gamma, eta, config.kahan)
    elif config.algorithm == "lb-omd":
        run = ops.run_lbomd(stream, eta, config.kahan)
    elif config.algorithm == "lb-ftrl":
        run = ops.run_lbftrl(stream, eta, config.kahan)
    else:
        run = quantum.run_qlbomd(stream, eta, config.kahan)
    learner_time = time.perf_counter() - start
    if config.problem == "ops":
        cmp = best_crp(stream, config.comparator_tol)
    else:
        cmp = best_fixed_state(stream, config.comparator_tol)
    log = run.log
    log.set_comparator(comparator_losses(cmp.point, stream))
    regret = log.regret
    bound = regret_bound(config.algorithm, config.T, config.d, eta, gamma)
    final = float(regret[-1])
    steps = np.asarray(log.steps)
    summary = {
        "algorithm": config.algorithm,
        "problem": config.problem,
        "d": config.d,
        "T": config.T,
        "seed": config.seed,
        "source": config.source,
        "eta": eta,
        "gamma": gamma,
        "final_regret": final,
        "cum_loss": float(log.cumulative_loss[-1]),
        "comparator_cum_loss": log.comparator_value,
        "comparator_gap": cmp.gap,
        "regret_bound": bound,
        "bound_satisfied": bool(final <= bound + cmp.gap),
        "max_r_t": float(np.nanmax(steps)) if np.any(np.isfinite(steps)) else None,
        "wall_time_s": time.perf_counter() - start,
        "learner_time_s": learner_time,
    }
    result = ExperimentResult(config, log, run.plays, cmp, summary, stream)
    if write:
        write_results(result)
    return result


def _fmt(v) -> str:
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))


def write_results(result: ExperimentResult) -> tuple[Path, Path]:
    config = result.config
    out = Path(config.output or ".")
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{config.stem()}.csv"
    json_path = out / f"{config.stem()}.json"
    log = result.log
    cum = log.cumulative_loss
    cmp_cum = core.accumulate(log.comparator_losses, log.kahan)
    regret = cum - cmp_cum
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for t in range(log.T):
            w.writerow([t + 1, _fmt(log.losses[t]), _fmt(cum[t]), _fmt(cmp_cum[t]),
                        _fmt(regret[t]), _fmt(log.steps[t])])
    payload = dict(result.summary, config=asdict(config))
    json_path.write_text(json.dumps(payload, indent=2, default=float) + "\n")
    return csv_path, json_path


def read_results_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or tuple(rows[0].keys()) != CSV_COLUMNS:
        raise ValueError(f"{path}: not a results file (expected columns {','.join(CSV_COLUMNS)})")
    return {c: np.array([float(r[c]) if r[c] != "" else np.nan for r in rows]) for c in CSV_COLUMNS}
