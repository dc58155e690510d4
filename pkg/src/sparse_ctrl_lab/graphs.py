"""Random graph samplers and the row-normalized opinion matrix.

Adjacency convention: ``entries[i, j] == 1`` means node ``i`` listens to
node ``j`` (row ``i`` of the system matrix averages over those ``j``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MatchingError, ParameterError

WEIGHT_DISTRIBUTIONS = ("uniform", "exponential", "lognormal")


@dataclass(frozen=True, eq=False)
class BinaryAdjacency:
    """0/1 adjacency matrix with zero diagonal."""

    entries: np.ndarray
    directed: bool

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ParameterError(f"adjacency must be a non-empty square matrix, got shape {a.shape}")
        if not np.isin(a, (0, 1)).all():
            raise ParameterError("adjacency entries must be 0 or 1")
        if np.any(np.diag(a)):
            raise ParameterError("adjacency must have a zero diagonal")
        if not self.directed and not np.array_equal(a, a.T):
            raise ParameterError("undirected adjacency must be symmetric")
        a = a.astype(np.int8)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def edge_count(self) -> int:
        total = int(self.entries.sum())
        return total if self.directed else total // 2

    def degrees(self) -> np.ndarray:
        """Out-degrees (row sums)."""
        return self.entries.sum(axis=1).astype(int)

    def __eq__(self, other):
        if not isinstance(other, BinaryAdjacency):
            return NotImplemented
        return self.directed == other.directed and np.array_equal(self.entries, other.entries)


@dataclass(frozen=True, eq=False)
class WeightVector:
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ParameterError("weight vector must be one-dimensional and non-empty")
        if not np.all(w > 0) or not np.all(np.isfinite(w)):
            raise ParameterError("weights must be finite and strictly positive")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.w.size


@dataclass(frozen=True, eq=False)
class RowNormalizedSystem:
    """The weighted, row-normalized matrix driving the opinion recursion."""

    a_bar: np.ndarray
    adjacency: BinaryAdjacency | None = field(default=None, repr=False)
    weights: WeightVector | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.a_bar.shape[0]


@dataclass(frozen=True, eq=False)
class DegreeSequence:
    degrees: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.degrees, dtype=int)
        if d.ndim != 1 or d.size < 1:
            raise ParameterError("degree sequence must be one-dimensional and non-empty")
        if d.sum() % 2:
            raise ParameterError("degree sum must be even")
        if d.size > 1 and (d.min() < 1 or d.max() > d.size - 1):
            raise ParameterError("degrees must lie in [1, n-1]")
        d.setflags(write=False)
        object.__setattr__(self, "degrees", d)

    @property
    def n(self) -> int:
        return self.degrees.size


def _check_er_args(n, p):
    if n < 2:
        raise ParameterError(f"need n >= 2, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"edge probability must lie in [0, 1], got {p}")


def sample_er_undirected(n: int, p: float, rng: np.random.Generator) -> BinaryAdjacency:
    """Undirected Erdős–Rényi graph: each pair ``j < i`` is an edge w.p. ``p``."""
    _check_er_args(n, p)
    draws = rng.random((n, n)) < p
    lower = np.tril(draws, k=-1)
    return BinaryAdjacency(lower | lower.T, directed=False)


def sample_er_directed(n: int, p: float, rng: np.random.Generator) -> BinaryAdjacency:
    """Directed Erdős–Rényi graph: every off-diagonal entry is Bernoulli(``p``)."""
    _check_er_args(n, p)
    draws = rng.random((n, n)) < p
    np.fill_diagonal(draws, False)
    return BinaryAdjacency(draws, directed=True)


def power_law_pmf(alpha: float, k_min: int, k_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Support and normalized masses of ``P(k) ∝ k**-alpha`` on ``[k_min, k_max]``."""
    ks = np.arange(k_min, k_max + 1)
    mass = ks.astype(float) ** (-alpha)
    return ks, mass / mass.sum()


def sample_power_law_degrees(
    n: int,
    alpha: float,
    rng: np.random.Generator,
    k_min: int = 1,
    k_max: int | None = None,
) -> DegreeSequence:
    """Draw ``n`` i.i.d. integer degrees with ``P(k) ∝ k**-alpha``.

    If the degree sum is odd, a uniformly chosen node below ``k_max`` gets one
    extra half-edge. When every node already sits at ``k_max`` a uniformly
    chosen node loses one instead.
    """
    if k_max is None:
        k_max = n - 1
    if alpha <= 1:
        raise ParameterError(f"power-law exponent must exceed 1, got {alpha}")
    if k_min < 1 or k_max > n - 1 or k_min > k_max:
        raise ParameterError(f"empty or invalid degree support [{k_min}, {k_max}] for n={n}")
    ks, pmf = power_law_pmf(alpha, k_min, k_max)
    degrees = rng.choice(ks, size=n, p=pmf)
    if degrees.sum() % 2:
        below = np.flatnonzero(degrees < k_max)
        if below.size:
            # drawing until we hit a node below k_max is the same as a uniform pick among them
            degrees[rng.choice(below)] += 1
        elif k_max > k_min:
            degrees[rng.integers(n)] -= 1
        else:
            raise ParameterError("single-point degree support with odd total cannot be repaired")
    return DegreeSequence(degrees)


def configuration_model(
    degrees: DegreeSequence,
    rng: np.random.Generator,
    max_retries: int = 100,
) -> BinaryAdjacency:
    """Simple undirected graph realizing ``degrees`` by half-edge matching.

    Half-edges are paired one at a time; each is joined to a uniformly chosen
    remaining half-edge among those that would create neither a self-loop nor
    a parallel edge. If no such partner exists the whole matching restarts.

    Raises:
        MatchingError: after ``max_retries`` restarts; resample the degrees.
    """
    d = np.asarray(degrees.degrees)
    n = d.size
    for _ in range(max_retries):
        stubs = np.repeat(np.arange(n), d).tolist()
        adj = np.zeros((n, n), dtype=bool)
        ok = True
        while stubs:
            u = stubs.pop(int(rng.integers(len(stubs))))
            allowed = [idx for idx, v in enumerate(stubs) if v != u and not adj[u, v]]
            if not allowed:
                ok = False
                break
            v = stubs.pop(allowed[int(rng.integers(len(allowed)))])
            adj[u, v] = adj[v, u] = True
        if ok:
            return BinaryAdjacency(adj, directed=False)
    raise MatchingError(f"no simple matching after {max_retries} restarts")


def sample_weight_vector(n: int, rng: np.random.Generator, dist: str = "uniform") -> WeightVector:
    """Positive node weights; zero draws (underflow only) are redrawn."""
    if dist not in WEIGHT_DISTRIBUTIONS:
        raise ParameterError(f"unknown weight distribution {dist!r}; choose from {WEIGHT_DISTRIBUTIONS}")

    def draw(size):
        if dist == "uniform":
            return 1.0 - rng.random(size)  # (0, 1]
        if dist == "exponential":
            return rng.exponential(1.0, size)
        return rng.lognormal(0.0, 1.0, size)

    w = draw(n)
    while np.any(w <= 0):
        bad = w <= 0
        w[bad] = draw(int(bad.sum()))
    return WeightVector(w)


def row_normalize(adj: BinaryAdjacency, w: WeightVector) -> RowNormalizedSystem:
    """Build ``Λ (A ⊙ w wᵀ)``; all-zero rows of ``A`` stay zero."""
    if adj.n != w.n:
        raise ParameterError(f"dimension mismatch: adjacency n={adj.n}, weights n={w.n}")
    weighted = adj.entries * np.outer(w.w, w.w)
    sums = weighted.sum(axis=1)
    scale = np.ones_like(sums)
    nz = sums > 0
    scale[nz] = 1.0 / sums[nz]
    a_bar = scale[:, None] * weighted
    a_bar.setflags(write=False)
    return RowNormalizedSystem(a_bar, adjacency=adj, weights=w)


# ---------------------------------------------------------------- file formats


def format_edge_list(adj: BinaryAdjacency) -> str:
    """Edge-list text: header ``"<n> <directed 0|1>"``, then one ``"i j"`` per line.

    Indices are 0-based. Undirected edges are written once with ``i < j``.
    """
    lines = [f"{adj.n} {int(adj.directed)}"]
    a = adj.entries
    for i, j in zip(*np.nonzero(a)):
        if adj.directed or i < j:
            lines.append(f"{i} {j}")
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> BinaryAdjacency:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise ParameterError("edge list must start with a '<n> <directed>' header")
    try:
        n = int(rows[0][0])
        directed = {"0": False, "1": True, "false": False, "true": True}[rows[0][1].lower()]
    except (ValueError, KeyError) as exc:
        raise ParameterError(f"malformed edge-list header: {' '.join(rows[0])!r}") from exc
    if n < 1:
        raise ParameterError(f"node count must be positive, got {n}")
    a = np.zeros((n, n), dtype=np.int8)
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise ParameterError(f"line {lineno}: expected 'i j', got {' '.join(row)!r}")
        try:
            i, j = int(row[0]), int(row[1])
        except ValueError as exc:
            raise ParameterError(f"line {lineno}: non-integer index") from exc
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise ParameterError(f"line {lineno}: invalid edge ({i}, {j}) for n={n}")
        a[i, j] = 1
        if not directed:
            a[j, i] = 1
    return BinaryAdjacency(a, directed=directed)


def write_edge_list(adj: BinaryAdjacency, path) -> None:
    Path(path).write_text(format_edge_list(adj))


def read_edge_list(path) -> BinaryAdjacency:
    return parse_edge_list(Path(path).read_text())


def write_dense_csv(matrix: np.ndarray, path) -> None:
    np.savetxt(path, np.asarray(matrix, dtype=float), delimiter=",", fmt="%.17g")


def read_dense_csv(path) -> np.ndarray:
    m = np.loadtxt(path, delimiter=",", ndmin=2)
    if m.shape[0] != m.shape[1]:
        raise ParameterError(f"system matrix must be square, got {m.shape}")
    return m
