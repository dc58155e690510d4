import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse_ctrl_lab.errors import ParameterError
from sparse_ctrl_lab.montecarlo import (
    CSV_FIELDS,
    CSV_VERSION_LINE,
    ExperimentConfig,
    build_system,
    estimate_nonsingularity,
    estimate_probability,
    parse_csv_rows,
    run_trial,
    sweep,
    trial_rng,
    wilson_interval,
)
from sparse_ctrl_lab.sparsity import SupportFamily


def families(n, s):
    return [SupportFamily.unconstrained(n, s), SupportFamily.piecewise(n, s, s), SupportFamily.block(n, s, s)]


@pytest.mark.parametrize("model", ["er-undirected", "er-directed"])
def test_degenerate_probabilities(model):
    for fam in families(12, 2):
        full = estimate_probability(ExperimentConfig(model, 12, 1.0, fam, trials=50, seed=3))
        assert full.p_hat == 1.0 and full.ci_high == 1.0
        empty = estimate_probability(ExperimentConfig(model, 12, 0.0, fam, trials=50, seed=3))
        assert empty.p_hat == 0.0 and empty.ci_low == 0.0


def test_run_trial_deterministic():
    cfg = ExperimentConfig("er-undirected", 12, 0.3, SupportFamily.unconstrained(12, 2), trials=20, seed=11)
    assert [run_trial(cfg, t) for t in range(20)] == [run_trial(cfg, t) for t in range(20)]
    with pytest.raises(ParameterError):
        run_trial(cfg, 20)


def test_trial_streams_differ():
    a, b = trial_rng(5, 0).random(4), trial_rng(5, 1).random(4)
    assert not np.allclose(a, b)
    assert np.array_equal(trial_rng(5, 0).random(4), a)


def test_thread_count_invariance():
    cfg = ExperimentConfig("er-undirected", 10, 0.25, SupportFamily.unconstrained(10, 2), trials=120, seed=2)
    rows = {estimate_probability(cfg, threads=t) for t in (1, 2, 4)}
    assert len(rows) == 1


def test_raw_adjacency_switch():
    fam = SupportFamily.unconstrained(8, 2)
    normed = ExperimentConfig("er-undirected", 8, 0.4, fam, trials=1, seed=0)
    raw = ExperimentConfig("er-undirected", 8, 0.4, fam, trials=1, seed=0, use_raw_adjacency=True)
    a = build_system(normed, trial_rng(0, 0)).phi
    b = build_system(raw, trial_rng(0, 0)).phi
    assert set(np.unique(b)) <= {0.0, 1.0}
    assert np.array_equal(a > 0, b > 0)
    # normalization by an invertible diagonal leaves the verdict unchanged
    assert run_trial(normed, 0) == run_trial(raw, 0)


def test_power_law_trials_run():
    cfg = ExperimentConfig("power-law", 24, 2.5, SupportFamily.unconstrained(24, 3), trials=10, seed=1)
    row = estimate_probability(cfg)
    assert 0 <= row.controllable_count <= 10


def test_config_validation():
    fam = SupportFamily.unconstrained(12, 2)
    with pytest.raises(ParameterError):
        ExperimentConfig("smallworld", 12, 0.2, fam)
    with pytest.raises(ParameterError):
        ExperimentConfig("er-undirected", 12, 0.2, fam, trials=0)
    with pytest.raises(ParameterError):
        ExperimentConfig("er-undirected", 10, 0.2, fam)
    with pytest.raises(ParameterError):
        ExperimentConfig("er-directed", 12, 1.2, fam)


@settings(max_examples=200)
@given(trials=st.integers(1, 5000), data=st.data())
def test_wilson_contains_estimate(trials, data):
    k = data.draw(st.integers(0, trials))
    low, high = wilson_interval(k, trials)
    assert 0.0 <= low <= k / trials <= high <= 1.0


def test_wilson_reference_value():
    # 50/100: centre 0.5, half-width z sqrt(0.25/100 + z²/40000) / (1 + z²/100)
    z = 1.959963984540054
    half = z * math.sqrt(0.0025 + z * z / 40000) / (1 + z * z / 100)
    low, high = wilson_interval(50, 100)
    assert low == pytest.approx(0.5 - half, rel=1e-12)
    assert high == pytest.approx(0.5 + half, rel=1e-12)


def test_sweep_cardinality_and_csv():
    grid = [
        ExperimentConfig("er-undirected", 12, p, fam, trials=3, seed=0)
        for p in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
        for fam in families(12, 3)
    ]
    result = sweep(grid)
    assert len(result.rows) == 27
    assert [(r.p_or_alpha, r.family) for r in result.rows] == [(c.param, c.family.kind) for c in grid]
    text = result.to_csv()
    lines = text.splitlines()
    assert lines[0] == CSV_VERSION_LINE
    assert lines[1] == ",".join(CSV_FIELDS)
    assert lines[1] == "model,n,p_or_alpha,family,s,m,trials,seed,controllable_count,p_hat,ci_low,ci_high"
    assert parse_csv_rows(text) == result.rows
    for r in result.rows:
        assert r.p_hat == r.controllable_count / r.trials
        assert r.ci_low <= r.p_hat <= r.ci_high
    assert '"p_hat"' in result.to_json()


def test_sweep_marks_failures_and_skips():
    good = ExperimentConfig("er-undirected", 6, 0.5, SupportFamily.unconstrained(6, 2), trials=4, seed=0)
    bad = ExperimentConfig("er-undirected", 40, 0.5, SupportFamily.unconstrained(40, 20), trials=2, seed=0,
                           strategy="exhaustive")
    result = sweep([bad, good])
    assert len(result.rows) == 2
    assert result.rows[0].error and math.isnan(result.rows[0].p_hat)
    assert result.rows[1].error is None
    resumed = sweep([bad, good], skip={result.rows[1].key()})
    assert len(resumed.rows) == 1
    with pytest.raises(ParameterError):
        sweep([])


def test_nonsingularity():
    assert estimate_nonsingularity(2, 1.0, trials=20).p_hat == 1.0
    assert estimate_nonsingularity(1, 0.7, trials=20).p_hat == 0.0
    assert estimate_nonsingularity(1, 0.7, model="directed", trials=20).p_hat == 0.0
    row = estimate_nonsingularity(30, 0.5, trials=2000, seed=0)
    assert row.p_hat >= 0.9
    with pytest.raises(ParameterError):
        estimate_nonsingularity(5, 0.5, model="bipartite")
