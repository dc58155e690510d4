"""Seeded ensemble estimates of the probability of sparse controllability.

Trial ``t`` of an experiment with master seed ``seed`` draws from
``numpy.random.SeedSequence(seed, spawn_key=(t,))``. Trials are therefore
independent of each other and of evaluation order, and an estimate is the
same whatever the number of worker threads.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from statistics import NormalDist

import numpy as np

from .control import DEFAULT_POLICY, LinearSystem, RankPolicy, is_sparse_controllable, numeric_rank
from .errors import MatchingError, ParameterError
from .graphs import (
    configuration_model,
    row_normalize,
    sample_er_directed,
    sample_er_undirected,
    sample_power_law_degrees,
    sample_weight_vector,
)
from .sparsity import SupportFamily

log = logging.getLogger(__name__)

GRAPH_MODELS = ("er-undirected", "er-directed", "power-law")
CSV_VERSION_LINE = "# sparse-ctrl-lab v1"
CSV_FIELDS = (
    "model", "n", "p_or_alpha", "family", "s", "m", "trials", "seed",
    "controllable_count", "p_hat", "ci_low", "ci_high",
)
# degree resamples allowed per power-law trial before giving up
MAX_DEGREE_RESAMPLES = 1000


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    n: int
    param: float  # edge probability for ER models, exponent for power-law
    family: SupportFamily
    trials: int = 1000
    seed: int = 0
    weight_dist: str = "uniform"
    policy: RankPolicy = DEFAULT_POLICY
    strategy: str = "auto"
    use_raw_adjacency: bool = False
    k_min: int = 1
    k_max: int | None = None
    max_retries: int = 100

    def __post_init__(self):
        if self.model not in GRAPH_MODELS:
            raise ParameterError(f"unknown graph model {self.model!r}; choose from {GRAPH_MODELS}")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if self.family.n != self.n:
            raise ParameterError(f"family ambient dimension {self.family.n} != n={self.n}")
        if self.model != "power-law" and not 0.0 <= self.param <= 1.0:
            raise ParameterError(f"edge probability must lie in [0, 1], got {self.param}")


@dataclass(frozen=True)
class SweepRow:
    model: str
    n: int
    p_or_alpha: float
    family: str
    s: int
    m: int | None
    trials: int
    seed: int
    controllable_count: int
    p_hat: float
    ci_low: float
    ci_high: float
    error: str | None = None

    @property
    def std_err(self) -> float:
        return math.sqrt(self.p_hat * (1 - self.p_hat) / self.trials) if self.trials else math.nan

    def key(self) -> tuple:
        return (self.model, self.n, float(self.p_or_alpha), self.family, self.s, self.m, self.trials, self.seed)


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_VERSION_LINE + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for row in self.rows:
            writer.writerow(format_row(row))
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps([asdict(r) for r in self.rows], indent=2)


def format_row(row: SweepRow) -> list[str]:
    return [
        row.model, str(row.n), repr(float(row.p_or_alpha)), row.family, str(row.s),
        "" if row.m is None else str(row.m), str(row.trials), str(row.seed),
        str(row.controllable_count), repr(row.p_hat), repr(row.ci_low), repr(row.ci_high),
    ]


def parse_csv_rows(text: str) -> list[SweepRow]:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    rows = []
    for rec in csv.DictReader(lines):
        rows.append(SweepRow(
            model=rec["model"], n=int(rec["n"]), p_or_alpha=float(rec["p_or_alpha"]),
            family=rec["family"], s=int(rec["s"]), m=int(rec["m"]) if rec["m"] else None,
            trials=int(rec["trials"]), seed=int(rec["seed"]),
            controllable_count=int(rec["controllable_count"]), p_hat=float(rec["p_hat"]),
            ci_low=float(rec["ci_low"]), ci_high=float(rec["ci_high"]),
        ))
    return rows


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    phat = successes / trials
    denom = 1 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    # exact endpoints at the degenerate counts, and never excluding phat
    low = 0.0 if successes == 0 else min(phat, max(0.0, center - half))
    high = 1.0 if successes == trials else max(phat, min(1.0, center + half))
    return low, high


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial_index,)))


def sample_adjacency(model: str, n: int, param: float, rng: np.random.Generator,
                     k_min: int = 1, k_max: int | None = None, max_retries: int = 100):
    if model == "er-undirected":
        return sample_er_undirected(n, param, rng)
    if model == "er-directed":
        return sample_er_directed(n, param, rng)
    if model == "power-law":
        for _ in range(MAX_DEGREE_RESAMPLES):
            degrees = sample_power_law_degrees(n, param, rng, k_min=k_min, k_max=k_max)
            try:
                return configuration_model(degrees, rng, max_retries=max_retries)
            except MatchingError:
                continue
        raise MatchingError(f"no simple power-law graph after {MAX_DEGREE_RESAMPLES} degree sequences")
    raise ParameterError(f"unknown graph model {model!r}")


def build_system(config: ExperimentConfig, rng: np.random.Generator) -> LinearSystem:
    adj = sample_adjacency(config.model, config.n, config.param, rng,
                           config.k_min, config.k_max, config.max_retries)
    if config.use_raw_adjacency:
        return LinearSystem(adj.entries.astype(float))
    w = sample_weight_vector(config.n, rng, config.weight_dist)
    return LinearSystem(row_normalize(adj, w).a_bar)


def run_trial(config: ExperimentConfig, trial_index: int) -> bool:
    if not 0 <= trial_index < config.trials:
        raise ParameterError(f"trial index {trial_index} outside [0, {config.trials})")
    rng = trial_rng(config.seed, trial_index)
    system = build_system(config, rng)
    verdict = is_sparse_controllable(system, config.family, config.policy, config.strategy, rng=rng)
    return verdict.controllable


def _map(fn, items, threads: int):
    if threads <= 1:
        return list(map(fn, items))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _row(config_model, n, param, family_label, s, m, trials, seed, count) -> SweepRow:
    low, high = wilson_interval(count, trials)
    return SweepRow(config_model, n, float(param), family_label, s, m, trials, seed,
                    count, count / trials, low, high)


def estimate_probability(config: ExperimentConfig, threads: int = 1) -> SweepRow:
    outcomes = _map(lambda t: run_trial(config, t), range(config.trials), threads)
    fam = config.family
    return _row(config.model, config.n, config.param, fam.kind, fam.s, fam.m,
                config.trials, config.seed, sum(outcomes))


def sweep(grid: list[ExperimentConfig], threads: int = 1, skip: set | None = None) -> SweepResult:
    """Estimate every grid point in order.

    A point whose estimation raises is kept as a row with zero counts, NaN
    estimates and the error message; the sweep continues. Points whose
    :meth:`SweepRow.key` is in ``skip`` are left out (used for resuming).
    """
    if not grid:
        raise ParameterError("empty sweep grid")
    result = SweepResult()
    for config in grid:
        fam = config.family
        stub = _row(config.model, config.n, config.param, fam.kind, fam.s, fam.m, config.trials, config.seed, 0)
        if skip and stub.key() in skip:
            continue
        try:
            row = estimate_probability(config, threads)
        except Exception as exc:  # noqa: BLE001 - a failed point must not abort the sweep
            log.warning("sweep point %s failed: %s", stub.key(), exc)
            row = SweepRow(*stub.key(), controllable_count=0, p_hat=math.nan,
                           ci_low=math.nan, ci_high=math.nan, error=str(exc))
        result.rows.append(row)
    return result


def estimate_nonsingularity(n: int, p: float, model: str = "undirected", trials: int = 1000,
                            seed: int = 0, policy: RankPolicy = DEFAULT_POLICY, threads: int = 1) -> SweepRow:
    """Fraction of binary ER adjacency matrices with full numerical rank."""
    if model not in ("undirected", "directed"):
        raise ParameterError(f"unknown model {model!r}")
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"edge probability must lie in [0, 1], got {p}")

    def one(t):
        if n == 1:
            return False  # the only 1x1 adjacency is [0]
        rng = trial_rng(seed, t)
        adj = sample_er_undirected(n, p, rng) if model == "undirected" else sample_er_directed(n, p, rng)
        return numeric_rank(adj.entries.astype(float), policy) == n

    count = sum(_map(one, range(trials), threads))
    return _row(f"er-{model}", n, p, "nonsingular", n, None, trials, seed, count)
