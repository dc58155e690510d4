"""Lower bounds on the probability of sparse controllability.

Both bounds have the form ``Σ_{i=0}^{s} Q(i, U) (1-p)^{e(i)} [bracket(i)]``:

undirected: ``e(i) = i(2N-i-1)/2``, ``bracket = 1 - C exp(-c (p(N-i))^{1/32})``,
    stated for ``1/(N-s) <= p <= 1 - 1/(N-s)``;
directed:   ``e(i) = i(N-1)``, ``bracket = 1 - exp(-c p(N-i))``,
    stated for ``C log(N-s)/(N-s) < p <= 1 - C log(N-s)/(N-s)``.

The universal constants ``C`` and ``c`` are not known; the defaults of 1
are heuristic and every result carries them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ModelAssumptionError, ParameterError
from .sparsity import SupportFamily, count_subsets_q

MODELS = ("undirected", "directed")


@dataclass(frozen=True)
class BoundParams:
    big_C: float = 1.0
    small_c: float = 1.0

    def __post_init__(self):
        if not (self.big_C > 0 and self.small_c > 0):
            raise ParameterError(f"constants must be strictly positive, got C={self.big_C}, c={self.small_c}")


@dataclass(frozen=True)
class BoundResult:
    model: str
    N: int
    s: int
    p: float
    q: float
    raw_q: float
    valid: bool
    terms: tuple[float, ...]
    params: BoundParams


def zero_row_exponent(model: str, N: int, i: int) -> float:
    """Number of independent Bernoulli entries forced to zero by ``i`` empty rows."""
    if model == "undirected":
        return i * (2 * N - i - 1) / 2
    if model == "directed":
        return i * (N - 1)
    raise ParameterError(f"unknown model {model!r}")


def _check(N, s, p, family):
    if not 1 <= s < N:
        raise ParameterError(f"need 1 <= s < N, got N={N}, s={s}")
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    if family.n != N or family.s != s:
        raise ParameterError(f"family (n={family.n}, s={family.s}) does not match N={N}, s={s}")
    if not family.coverage:
        raise ModelAssumptionError("the bounds assume the members of U cover every node")


def _evaluate(model, N, s, p, family, params, bracket, valid) -> BoundResult:
    _check(N, s, p, family)
    terms = tuple(
        count_subsets_q(i, family) * (1.0 - p) ** zero_row_exponent(model, N, i) * bracket(i)
        for i in range(s + 1)
    )
    raw = math.fsum(terms)
    return BoundResult(model, N, s, p, min(max(raw, 0.0), 1.0), raw, valid, terms, params)


def undirected_bound(N: int, s: int, p: float, family: SupportFamily, params: BoundParams = BoundParams()) -> BoundResult:
    lo = 1.0 / (N - s) if N > s else math.inf
    valid = lo <= p <= 1.0 - lo

    def bracket(i):
        return 1.0 - params.big_C * math.exp(-params.small_c * (p * (N - i)) ** (1.0 / 32.0))

    return _evaluate("undirected", N, s, p, family, params, bracket, valid)


def directed_bound(N: int, s: int, p: float, family: SupportFamily, params: BoundParams = BoundParams()) -> BoundResult:
    gap = N - s
    edge = params.big_C * math.log(gap) / gap if gap > 0 else math.inf
    valid = edge < p <= 1.0 - edge

    def bracket(i):
        return 1.0 - math.exp(-params.small_c * p * (N - i))

    return _evaluate("directed", N, s, p, family, params, bracket, valid)


def structural_bound(N: int, s: int, p: float, family: SupportFamily, model: str = "undirected") -> float:
    """Constant-free variant with every bracket set to 1, clamped to 1."""
    _check(N, s, p, family)
    total = math.fsum(
        count_subsets_q(i, family) * (1.0 - p) ** zero_row_exponent(model, N, i) for i in range(s + 1)
    )
    return min(1.0, total)


def bound(model: str, N: int, s: int, p: float, family: SupportFamily, params: BoundParams = BoundParams()) -> BoundResult:
    if model == "undirected":
        return undirected_bound(N, s, p, family, params)
    if model == "directed":
        return directed_bound(N, s, p, family, params)
    raise ParameterError(f"unknown model {model!r}; choose from {MODELS}")
