import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse_ctrl_lab.control import (
    LinearSystem,
    RankPolicy,
    brute_force_controllable,
    condition_a,
    condition_b,
    is_sparse_controllable,
    numeric_rank,
)
from sparse_ctrl_lab.errors import CapacityError, ParameterError
from sparse_ctrl_lab.graphs import row_normalize, sample_er_undirected, sample_weight_vector
from sparse_ctrl_lab.sparsity import SupportFamily, enumerate_supports


def random_phi(rng, n, rank=None):
    """Uniform entries, optionally forced to a given rank."""
    if rank is None or rank >= n:
        return rng.random((n, n))
    return rng.random((n, rank)) @ rng.random((rank, n))


def small_families(n):
    out = [SupportFamily.unconstrained(n, s) for s in range(1, n)]
    for m in (1, 2):
        for s in range(m, n, m):
            if n % m == 0:
                out += [SupportFamily.piecewise(n, s, m), SupportFamily.block(n, s, m)]
    return out


def test_numeric_rank_examples(rng):
    assert numeric_rank(np.eye(5)) == 5
    assert numeric_rank(np.zeros((4, 3))) == 0
    u, v = rng.random(6) + 0.1, rng.random(4) + 0.1
    assert numeric_rank(np.outer(u, v)) == 1
    assert numeric_rank(np.outer(u, v) + 1e-3 * np.eye(6, 4), RankPolicy(1e-2)) == 1


def test_condition_a_examples(rng):
    ok, diag = condition_a(LinearSystem(rng.random((5, 5))), SupportFamily.unconstrained(5, 2))
    assert ok and diag.condition_a_shortcut
    ok, diag = condition_a(LinearSystem(np.zeros((2, 2))), SupportFamily.explicit(2, [(0,)]))
    assert not ok
    assert diag.pbh_min_singular_values == [0.0]
    ok, _ = condition_a(LinearSystem(np.diag([1.0, 2.0]), np.ones((2, 1))), SupportFamily.explicit(1, [(0,)]))
    assert ok


def test_condition_b_examples(rng):
    ok, wit, _ = condition_b(LinearSystem(np.zeros((5, 5))), SupportFamily.unconstrained(5, 3))
    assert not ok and wit is None
    ones = np.ones((6, 6)) - np.eye(6)
    a_bar = ones / 5
    for s in range(1, 6):
        for fam in (SupportFamily.unconstrained(6, s), SupportFamily.explicit(6, [tuple(range(s))])):
            ok, wit, _ = condition_b(LinearSystem(a_bar), fam)
            assert ok and wit is not None


def test_rank_three_strategies_agree(rng):
    phi = random_phi(rng, 4, rank=3)
    system = LinearSystem(phi)
    fam = SupportFamily.unconstrained(4, 1)
    ok_short, wit_short, _ = condition_b(system, fam, strategy="unconstrained-shortcut")
    ok_ex, wit_ex, _ = condition_b(system, fam, strategy="exhaustive")
    assert ok_short and ok_ex
    for wit in (wit_short, wit_ex):
        assert numeric_rank(np.hstack([phi, np.eye(4)[:, list(wit)]])) == 4


def test_shortcut_rejects_structured_family(rng):
    with pytest.raises(ParameterError):
        condition_b(LinearSystem(rng.random((4, 4))), SupportFamily.block(4, 2, 2), strategy="unconstrained-shortcut")


def test_exhaustive_capacity_guard():
    with pytest.raises(CapacityError):
        condition_b(LinearSystem(np.eye(40)), SupportFamily.unconstrained(40, 20), strategy="exhaustive")


def test_sampled_strategy(rng):
    good = LinearSystem(rng.random((6, 6)))
    ok, wit, diag = condition_b(good, SupportFamily.unconstrained(6, 2), strategy="sampled", samples=5, rng=rng)
    assert ok and wit is not None and not diag.inconclusive
    bad = LinearSystem(np.zeros((6, 6)))
    ok, wit, diag = condition_b(bad, SupportFamily.unconstrained(6, 2), strategy="sampled", samples=5, rng=rng)
    assert not ok and diag.inconclusive


def test_general_input_matrix(rng):
    # Φ = 0, so condition (b) needs Ψ_S alone to span R^3
    psi = rng.random((3, 5))
    system = LinearSystem(np.zeros((3, 3)), psi)
    assert condition_b(system, SupportFamily.unconstrained(5, 3))[0]
    assert not condition_b(system, SupportFamily.unconstrained(5, 2))[0]
    verdict = is_sparse_controllable(system, SupportFamily.unconstrained(5, 3))
    assert verdict.controllable
    assert brute_force_controllable(system, SupportFamily.unconstrained(5, 3))


def test_verdict_examples(rng):
    v = is_sparse_controllable(LinearSystem(rng.random((5, 5))), SupportFamily.unconstrained(5, 5))
    assert v.controllable and v.witness == (0, 1, 2, 3, 4)
    v = is_sparse_controllable(LinearSystem(np.zeros((3, 3))), SupportFamily.unconstrained(3, 1))
    assert not v.controllable and v.cond_a and not v.cond_b
    record = v.to_dict()
    assert record["controllable"] is False and record["witness"] is None


def test_brute_force_examples():
    assert brute_force_controllable(LinearSystem(np.zeros((3, 3))), SupportFamily.unconstrained(3, 3), k_max=1)
    assert not brute_force_controllable(LinearSystem(np.zeros((3, 3))), SupportFamily.unconstrained(3, 2))
    swap = LinearSystem(np.array([[0.0, 1.0], [1.0, 0.0]]))
    fam = SupportFamily.unconstrained(2, 1)
    assert not brute_force_controllable(swap, fam, k_max=1)
    assert brute_force_controllable(swap, fam, k_max=2)
    with pytest.raises(CapacityError):
        brute_force_controllable(LinearSystem(np.eye(5)), SupportFamily.unconstrained(5, 1))


def test_brute_force_sequence_enumeration_cross_check(rng):
    """Memoized search equals literal enumeration of all sequences for short horizons."""
    def literal(system, fam, k_max):
        members = list(enumerate_supports(fam))
        for k in range(1, k_max + 1):
            for seq in itertools.product(members, repeat=k):
                blocks = [np.linalg.matrix_power(system.phi, k - 1 - j)[:, list(sup)] for j, sup in enumerate(seq)]
                if numeric_rank(np.hstack(blocks)) == system.n:
                    return True
        return False

    for trial in range(40):
        n = 3
        phi = random_phi(rng, n, rank=int(rng.integers(0, n + 1)))
        for fam in (SupportFamily.unconstrained(3, 1), SupportFamily.explicit(3, [(0,), (1,)])):
            for k_max in (1, 2, 3):
                assert brute_force_controllable(LinearSystem(phi), fam, k_max=k_max) == literal(LinearSystem(phi), fam, k_max)


def test_er_oracle_equivalence():
    fam = SupportFamily.unconstrained(4, 2)
    outcomes = set()
    for seed in range(200):
        rng = np.random.default_rng(seed)
        a_bar = row_normalize(sample_er_undirected(4, 0.5, rng), sample_weight_vector(4, rng)).a_bar
        system = LinearSystem(a_bar)
        verdict = is_sparse_controllable(system, fam).controllable
        assert verdict == brute_force_controllable(system, fam)
        outcomes.add(verdict)
    assert outcomes == {True, False}


@settings(max_examples=80, deadline=None)
@given(n=st.integers(2, 8), seed=st.integers(0, 2**32 - 1), data=st.data())
def test_witness_valid_and_strategies_agree(n, seed, data):
    rng = np.random.default_rng(seed)
    phi = random_phi(rng, n, rank=data.draw(st.integers(0, n)))
    zero_rows = data.draw(st.lists(st.integers(0, n - 1), max_size=2))
    phi[zero_rows] = 0.0
    s = data.draw(st.integers(1, n - 1))
    system, fam = LinearSystem(phi), SupportFamily.unconstrained(n, s)
    ok_short, _, _ = condition_b(system, fam, strategy="unconstrained-shortcut")
    ok_ex, _, _ = condition_b(system, fam, strategy="exhaustive")
    assert ok_short == ok_ex
    verdict = is_sparse_controllable(system, fam)
    if verdict.controllable:
        assert verdict.witness in fam
        assert numeric_rank(np.hstack([phi, np.eye(n)[:, list(verdict.witness)]])) == n
        assert condition_a(system, fam)[0]


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 5), seed=st.integers(0, 2**32 - 1), data=st.data())
def test_monotone_in_family(n, seed, data):
    rng = np.random.default_rng(seed)
    phi = random_phi(rng, n, rank=data.draw(st.integers(0, n)))
    s = data.draw(st.integers(1, n - 1))
    universe = list(itertools.combinations(range(n), s))
    big = data.draw(st.lists(st.sampled_from(universe), min_size=1, unique=True))
    small = data.draw(st.lists(st.sampled_from(big), min_size=1, unique=True))
    system = LinearSystem(phi)
    if is_sparse_controllable(system, SupportFamily.explicit(n, small)).controllable:
        assert is_sparse_controllable(system, SupportFamily.explicit(n, big)).controllable


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 6), seed=st.integers(0, 2**32 - 1), data=st.data())
def test_permutation_covariance(n, seed, data):
    rng = np.random.default_rng(seed)
    phi = random_phi(rng, n, rank=data.draw(st.integers(0, n)))
    s = data.draw(st.integers(1, n - 1))
    universe = list(itertools.combinations(range(n), s))
    sets = data.draw(st.lists(st.sampled_from(universe), min_size=1, max_size=6, unique=True))
    perm = rng.permutation(n)  # state i becomes state perm[i]
    P = np.eye(n)[perm].T
    assert np.allclose(P @ np.eye(n)[:, 0], np.eye(n)[:, perm[0]])
    moved = SupportFamily.explicit(n, [tuple(int(perm[i]) for i in sup) for sup in sets])
    before = is_sparse_controllable(LinearSystem(phi), SupportFamily.explicit(n, sets)).controllable
    after = is_sparse_controllable(LinearSystem(P @ phi @ P.T), moved).controllable
    assert before == after


def test_condition_a_failure_detected_by_oracle():
    # node 2 is never actuated and only feeds itself: its left eigenvector escapes Ψ_M
    phi = np.array([[0.5, 0.5, 0.0], [0.3, 0.0, 0.7], [0.0, 0.0, 0.4]])
    phi[:, 2] = 0.0
    phi[2, 2] = 0.4
    fam = SupportFamily.explicit(3, [(0, 1)])
    verdict = is_sparse_controllable(LinearSystem(phi), fam)
    assert not verdict.cond_a
    assert not brute_force_controllable(LinearSystem(phi), fam)
