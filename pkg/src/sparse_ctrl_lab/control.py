"""Sparse controllability of ``α_k = Φ α_{k-1} + Ψ v_k`` under a support family.

The system is controllable with inputs supported on members of ``U`` iff

(a) ``[λI - Φ, Ψ_M]`` has full row rank for every eigenvalue ``λ`` of ``Φ``,
    where ``M`` is the union of all members, and
(b) some ``S ∈ U`` gives ``[Φ, Ψ_S]`` full row rank.

:func:`brute_force_controllable` decides the same question without either
condition, by searching the reachable column spaces of stacked input
sequences, and serves as the oracle for :func:`is_sparse_controllable`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import CapacityError, NumericalError, ParameterError
from .sparsity import Support, SupportFamily, enumerate_supports, family_size

EIGEN_CLUSTER_TOL = 1e-8
EXHAUSTIVE_LIMIT = 10**7
AUTO_EXHAUSTIVE_LIMIT = 10**5
STRATEGIES = ("auto", "exhaustive", "unconstrained-shortcut", "sampled")


@dataclass(frozen=True)
class RankPolicy:
    """Relative singular-value threshold: ``factor * σ_max``.

    ``factor=None`` means ``max(matrix.shape) * eps``.
    """

    factor: float | None = None

    def threshold(self, svals: np.ndarray, shape) -> float:
        if svals.size == 0:
            return 0.0
        factor = self.factor if self.factor is not None else max(shape) * np.finfo(float).eps
        return float(factor * svals[0])


DEFAULT_POLICY = RankPolicy()


def singular_values(matrix: np.ndarray) -> np.ndarray:
    try:
        return scipy.linalg.svdvals(np.asarray(matrix))
    except (np.linalg.LinAlgError, ValueError) as exc:
        finite = bool(np.all(np.isfinite(matrix)))
        raise NumericalError(f"SVD failed for {np.shape(matrix)} matrix (finite entries: {finite})") from exc


def numeric_rank(matrix: np.ndarray, policy: RankPolicy = DEFAULT_POLICY) -> int:
    matrix = np.asarray(matrix)
    if matrix.size == 0:
        return 0
    sv = singular_values(matrix)
    return int(np.sum(sv > policy.threshold(sv, matrix.shape)))


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """State transition ``phi`` (n×n) and input matrix ``psi`` (n×L, default identity)."""

    phi: np.ndarray
    psi: np.ndarray | None = None

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        if phi.ndim != 2 or phi.shape[0] != phi.shape[1] or phi.shape[0] < 1:
            raise ParameterError(f"phi must be a non-empty square matrix, got shape {phi.shape}")
        object.__setattr__(self, "phi", phi)
        if self.psi is not None:
            psi = np.asarray(self.psi, dtype=float)
            if psi.ndim != 2 or psi.shape[0] != phi.shape[0]:
                raise ParameterError(f"psi must have {phi.shape[0]} rows, got shape {psi.shape}")
            object.__setattr__(self, "psi", psi)

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    @property
    def input_dim(self) -> int:
        return self.n if self.psi is None else self.psi.shape[1]

    @property
    def identity_input(self) -> bool:
        return self.psi is None or (
            self.psi.shape == (self.n, self.n) and np.array_equal(self.psi, np.eye(self.n))
        )

    def input_columns(self, idx) -> np.ndarray:
        idx = list(idx)
        if self.psi is None:
            return np.eye(self.n)[:, idx]
        return self.psi[:, idx]


@dataclass
class Diagnostics:
    """Numerical evidence behind a verdict."""

    rank_tolerance_factor: float | None = None
    eigenvalues: list[complex] = field(default_factory=list)
    # smallest singular value of [λI - Φ, Ψ_M] per tested eigenvalue
    pbh_min_singular_values: list[float] = field(default_factory=list)
    condition_a_shortcut: bool = False
    strategy: str = ""
    supports_tested: int = 0
    # smallest nonzero-row-rank margin for the witness, if any
    witness_margin: float | None = None
    inconclusive: bool = False

    def to_dict(self) -> dict:
        return {
            "rank_tolerance_factor": self.rank_tolerance_factor,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "pbh_min_singular_values": [float(x) for x in self.pbh_min_singular_values],
            "condition_a_shortcut": self.condition_a_shortcut,
            "strategy": self.strategy,
            "supports_tested": self.supports_tested,
            "witness_margin": self.witness_margin,
            "inconclusive": self.inconclusive,
        }


@dataclass
class ControllabilityVerdict:
    cond_a: bool
    cond_b: bool
    witness: Support | None
    diagnostics: Diagnostics

    @property
    def controllable(self) -> bool:
        return self.cond_a and self.cond_b

    def to_dict(self) -> dict:
        return {
            "controllable": self.controllable,
            "cond_a": self.cond_a,
            "cond_b": self.cond_b,
            "witness": None if self.witness is None else list(self.witness),
            "diagnostics": self.diagnostics.to_dict(),
        }


def _cluster(eigs: np.ndarray, tol: float = EIGEN_CLUSTER_TOL) -> list[complex]:
    reps: list[complex] = []
    for lam in eigs:
        if all(abs(lam - r) > tol for r in reps):
            reps.append(complex(lam))
    return reps


def condition_a(
    system: LinearSystem,
    family: SupportFamily,
    policy: RankPolicy = DEFAULT_POLICY,
) -> tuple[bool, Diagnostics]:
    """PBH-type test on the reduced pair ``(Φ, Ψ_M)``."""
    diag = Diagnostics(rank_tolerance_factor=policy.factor)
    n = system.n
    psi_m = system.input_columns(sorted(family.union))
    if psi_m.shape[1] >= n and numeric_rank(psi_m, policy) == n:
        diag.condition_a_shortcut = True
        return True, diag
    try:
        eigs = scipy.linalg.eigvals(system.phi)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError("eigenvalue computation failed") from exc
    ok = True
    for lam in _cluster(eigs):
        pencil = np.hstack([lam * np.eye(n) - system.phi, psi_m.astype(complex)])
        sv = singular_values(pencil)
        rank = int(np.sum(sv > policy.threshold(sv, pencil.shape)))
        diag.eigenvalues.append(lam)
        diag.pbh_min_singular_values.append(float(sv[n - 1]) if sv.size >= n else 0.0)
        if rank < n:
            ok = False
    return ok, diag


def _support_works(system: LinearSystem, support: Support, policy: RankPolicy) -> tuple[bool, float]:
    n, s = system.n, len(support)
    if system.identity_input:
        # rank [Φ, I_S] = s + rank(Φ_{S^c,:})
        rest = [i for i in range(n) if i not in set(support)]
        if not rest:
            return True, math.inf
        sub = system.phi[rest, :]
        sv = singular_values(sub)
        rank = int(np.sum(sv > policy.threshold(sv, sub.shape)))
        return rank == len(rest), float(sv[len(rest) - 1]) if sv.size >= len(rest) else 0.0
    mat = np.hstack([system.phi, system.input_columns(support)])
    sv = singular_values(mat)
    rank = int(np.sum(sv > policy.threshold(sv, mat.shape)))
    return rank == n, float(sv[n - 1]) if sv.size >= n else 0.0


def _independent_rows(phi: np.ndarray, count: int) -> list[int]:
    _, _, piv = scipy.linalg.qr(phi.T, mode="economic", pivoting=True)
    return sorted(int(i) for i in piv[:count])


def condition_b(
    system: LinearSystem,
    family: SupportFamily,
    policy: RankPolicy = DEFAULT_POLICY,
    strategy: str = "auto",
    samples: int = 100,
    rng: np.random.Generator | None = None,
) -> tuple[bool, Support | None, Diagnostics]:
    """Search for ``S ∈ U`` with ``[Φ, Ψ_S]`` of full row rank.

    Strategies:
        ``exhaustive``: lexicographic scan, first witness wins.
        ``unconstrained-shortcut``: unconstrained family with ``Ψ = I`` only;
            decides ``rank(Φ) >= n - s`` and builds the witness from a
            pivoted QR of ``Φᵀ``.
        ``sampled``: test ``samples`` members drawn uniformly; a miss is
            reported as inconclusive, never as a proof.
        ``auto``: exhaustive when ``|U| <= 1e5``, sampled otherwise.
    """
    if strategy not in STRATEGIES:
        raise ParameterError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    if family.n != system.input_dim:
        raise ParameterError(f"family ambient dimension {family.n} != input dimension {system.input_dim}")
    size = family_size(family)
    if strategy == "auto":
        strategy = "exhaustive" if size <= AUTO_EXHAUSTIVE_LIMIT else "sampled"
    diag = Diagnostics(rank_tolerance_factor=policy.factor, strategy=strategy)
    n, s = system.n, family.s

    if strategy == "unconstrained-shortcut":
        if family.kind != "unconstrained" or not system.identity_input:
            raise ParameterError("unconstrained-shortcut needs an unconstrained family and Ψ = I")
        rank = numeric_rank(system.phi, policy)
        if rank < n - s:
            return False, None, diag
        keep = _independent_rows(system.phi, n - s)
        witness = tuple(i for i in range(n) if i not in set(keep))
        ok, margin = _support_works(system, witness, policy)
        diag.supports_tested = 1
        diag.witness_margin = margin
        return ok, (witness if ok else None), diag

    if strategy == "exhaustive":
        if size > EXHAUSTIVE_LIMIT:
            raise CapacityError(f"|U| = {size} exceeds the exhaustive limit; use a shortcut or sampled strategy")
        candidates = enumerate_supports(family)
        if system.identity_input:
            # rank(Φ_{S^c,:}) <= rank(Φ), so a low-rank Φ rules out every S at once
            if numeric_rank(system.phi, policy) < n - s:
                return False, None, diag
    else:
        gen = rng if rng is not None else np.random.default_rng(0)
        members = None if size > AUTO_EXHAUSTIVE_LIMIT else list(enumerate_supports(family))
        candidates = (
            members[int(gen.integers(size))] if members is not None else _random_member(family, gen)
            for _ in range(samples)
        )

    for support in candidates:
        diag.supports_tested += 1
        ok, margin = _support_works(system, support, policy)
        if ok:
            diag.witness_margin = margin
            return True, tuple(support), diag
    diag.inconclusive = strategy == "sampled"
    return False, None, diag


def _random_member(family: SupportFamily, rng: np.random.Generator) -> Support:
    n, s, m = family.n, family.s, family.m
    if family.kind == "unconstrained":
        return tuple(sorted(int(i) for i in rng.choice(n, size=s, replace=False)))
    if family.kind == "piecewise":
        width, per = n // m, s // m
        return tuple(
            sorted(int(w * width + i) for w in range(m) for i in rng.choice(width, size=per, replace=False))
        )
    if family.kind == "block":
        blocks = sorted(int(b) for b in rng.choice(n // m, size=s // m, replace=False))
        return tuple(i for b in blocks for i in range(b * m, (b + 1) * m))
    return family.sets[int(rng.integers(len(family.sets)))]


def is_sparse_controllable(
    system: LinearSystem,
    family: SupportFamily,
    policy: RankPolicy = DEFAULT_POLICY,
    strategy: str = "auto",
    samples: int = 100,
    rng: np.random.Generator | None = None,
) -> ControllabilityVerdict:
    if system.identity_input and family.s == system.n:
        # every input direction is available at once
        diag = Diagnostics(rank_tolerance_factor=policy.factor, strategy="full-budget", condition_a_shortcut=True)
        return ControllabilityVerdict(True, True, tuple(range(system.n)), diag)
    cond_a, diag = condition_a(system, family, policy)
    cond_b, witness, diag_b = condition_b(system, family, policy, strategy, samples, rng)
    diag.strategy = diag_b.strategy
    diag.supports_tested = diag_b.supports_tested
    diag.witness_margin = diag_b.witness_margin
    diag.inconclusive = diag_b.inconclusive
    return ControllabilityVerdict(cond_a, cond_b, witness, diag)


# ---------------------------------------------------------------- oracle


class _Subspace:
    """Column space held as an orthonormal basis with a rounded fingerprint."""

    __slots__ = ("basis", "key")

    def __init__(self, basis: np.ndarray):
        self.basis = basis
        proj = basis @ basis.T
        self.key = (basis.shape[1], np.round(proj, 7).tobytes())

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def contains(self, other: "_Subspace", tol: float = 1e-8) -> bool:
        if other.dim > self.dim:
            return False
        resid = other.basis - self.basis @ (self.basis.T @ other.basis)
        return bool(np.linalg.norm(resid) <= tol)


def _orth(mat: np.ndarray, policy: RankPolicy) -> np.ndarray:
    if mat.size == 0:
        return np.zeros((mat.shape[0], 0))
    u, sv, _ = np.linalg.svd(mat, full_matrices=False)
    r = int(np.sum(sv > policy.threshold(sv, mat.shape)))
    return u[:, :r]


def brute_force_controllable(
    system: LinearSystem,
    family: SupportFamily,
    k_max: int | None = None,
    policy: RankPolicy = DEFAULT_POLICY,
    max_states: int = 10**6,
) -> bool:
    """Search input sequences ``(S_1, ..., S_K) ∈ U^K``, ``K <= k_max``.

    The column space of ``[Φ^{K-1} Ψ_{S_1}, ..., Ψ_{S_K}]`` is
    ``Φ·V_{K-1} + range(Ψ_{S_K})``, so sequences are explored as a
    breadth-first search over these subspaces. Sequences reaching the same
    subspace are merged, and a subspace contained in another one reached no
    later is dropped since its successors are contained in the other's.
    Returns True as soon as some subspace is the whole state space.

    ``k_max`` defaults to ``n * |U|``: using each member for ``n``
    consecutive steps already produces every reachable direction.

    Raises:
        CapacityError: for ``n > 4`` or when more than ``max_states``
            subspaces would be explored.
    """
    n = system.n
    if n > 4:
        raise CapacityError(f"brute-force oracle limited to n <= 4, got n={n}")
    members = list(enumerate_supports(family))
    if k_max is None:
        k_max = n * len(members)
    inputs = [_orth(system.input_columns(sup), policy) for sup in members]
    frontier: list[_Subspace] = []
    seen: list[_Subspace] = []
    explored = 0

    def admit(space: _Subspace, bucket: list[_Subspace]) -> None:
        if any(old.contains(space) for old in seen) or any(old.contains(space) for old in bucket):
            return
        bucket[:] = [old for old in bucket if not space.contains(old)]
        bucket.append(space)

    for depth in range(1, k_max + 1):
        nxt: list[_Subspace] = []
        prev = frontier if depth > 1 else [_Subspace(np.zeros((n, 0)))]
        for space, cols in itertools.product(prev, inputs):
            explored += 1
            if explored > max_states:
                raise CapacityError(f"oracle explored more than {max_states} subspaces")
            basis = _orth(np.hstack([system.phi @ space.basis, cols]), policy)
            if basis.shape[1] == n:
                return True
            admit(_Subspace(basis), nxt)
        if not nxt:
            return False
        seen.extend(nxt)
        frontier = nxt
    return False
