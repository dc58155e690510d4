"""Admissible support families for budget- and pattern-constrained inputs.

All indices are 0-based. A family over ``{0, ..., n-1}`` with budget ``s``
comes in one of four kinds:

``unconstrained``
    every ``s``-subset.
``piecewise``
    ``m`` consecutive windows of length ``n/m``; each member takes exactly
    ``s/m`` indices from every window.
``block``
    ``n/m`` consecutive blocks of size ``m``; each member is the union of
    ``s/m`` whole blocks.
``explicit``
    a user-supplied list of ``s``-subsets.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np

from .errors import CapacityError, ParameterError

KINDS = ("unconstrained", "piecewise", "block", "explicit")

#: Largest |U| * C(s, t) for which Q is computed by enumeration.
BRUTE_FORCE_Q_BUDGET = 10**7

Support = tuple[int, ...]


@dataclass(frozen=True)
class SupportFamily:
    n: int
    s: int
    kind: str
    m: int | None = None
    sets: tuple[Support, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown family kind {self.kind!r}")
        if self.n < 1 or not 1 <= self.s <= self.n:
            raise ParameterError(f"need 1 <= s <= n, got n={self.n}, s={self.s}")
        if self.kind in ("piecewise", "block"):
            m = self.m
            if m is None or m < 1 or self.n % m or self.s % m:
                raise ParameterError(f"{self.kind} family needs m dividing n={self.n} and s={self.s}, got m={m}")
            if self.kind == "block" and self.s // m > self.n // m:
                raise ParameterError("block family asks for more blocks than exist")
        elif self.m is not None:
            raise ParameterError(f"{self.kind} family takes no m")
        if self.kind == "explicit":
            if not self.sets:
                raise ParameterError("explicit family needs at least one set")
            clean = set()
            for raw in self.sets:
                sup = tuple(sorted(set(int(i) for i in raw)))
                if len(sup) != self.s:
                    raise ParameterError(f"set {sorted(raw)} has cardinality {len(sup)}, expected s={self.s}")
                if sup[0] < 0 or sup[-1] >= self.n:
                    raise ParameterError(f"set {sorted(raw)} leaves ambient range [0, {self.n})")
                clean.add(sup)
            object.__setattr__(self, "sets", tuple(sorted(clean)))
        elif self.sets is not None:
            raise ParameterError(f"{self.kind} family takes no explicit sets")

    # -- constructors -------------------------------------------------------

    @classmethod
    def unconstrained(cls, n: int, s: int) -> "SupportFamily":
        return cls(n, s, "unconstrained")

    @classmethod
    def piecewise(cls, n: int, s: int, m: int) -> "SupportFamily":
        """``m`` windows, ``s/m`` indices from each."""
        return cls(n, s, "piecewise", m)

    @classmethod
    def block(cls, n: int, s: int, m: int) -> "SupportFamily":
        """Union of ``s/m`` blocks of size ``m``."""
        return cls(n, s, "block", m)

    @classmethod
    def explicit(cls, n: int, sets: Iterable[Iterable[int]]) -> "SupportFamily":
        sets = [tuple(x) for x in sets]
        if not sets:
            raise ParameterError("explicit family needs at least one set")
        return cls(n, len(set(sets[0])), "explicit", sets=tuple(sets))

    # -- structure ----------------------------------------------------------

    @property
    def label(self) -> str:
        return self.kind if self.m is None else f"{self.kind}(m={self.m})"

    @cached_property
    def union(self) -> frozenset[int]:
        if self.kind == "explicit":
            return frozenset(i for sup in self.sets for i in sup)
        return frozenset(range(self.n))

    @property
    def coverage(self) -> bool:
        return len(self.union) == self.n

    def _window(self, i: int) -> int:
        return i // (self.n // self.m)

    def _block_of(self, i: int) -> int:
        return i // self.m

    def __iter__(self) -> Iterator[Support]:
        return enumerate_supports(self)

    def __len__(self) -> int:
        return family_size(self)

    def __contains__(self, candidate) -> bool:
        return contains_support(self, candidate)

    def is_extendable(self, partial: Iterable[int]) -> bool:
        """True iff ``partial`` is a subset of some member of the family."""
        part = sorted(set(partial))
        if len(part) > self.s or (part and (part[0] < 0 or part[-1] >= self.n)):
            return False
        if self.kind == "unconstrained":
            return True
        if self.kind == "piecewise":
            per = self.s // self.m
            counts = np.bincount([self._window(i) for i in part], minlength=self.m)
            return bool(np.all(counts <= per))
        if self.kind == "block":
            return len({self._block_of(i) for i in part}) <= self.s // self.m
        pset = set(part)
        return any(pset.issubset(sup) for sup in self.sets)

    def complete(self, partial: Iterable[int]) -> Support:
        """Lexicographically smallest member containing ``partial``."""
        part = {int(i) for i in partial}
        if not self.is_extendable(part):
            raise ParameterError(f"{sorted(part)} is not contained in any member of {self.label}")
        if self.kind == "unconstrained":
            rest = [i for i in range(self.n) if i not in part]
            return tuple(sorted(part | set(rest[: self.s - len(part)])))
        if self.kind == "piecewise":
            width, per = self.n // self.m, self.s // self.m
            out = set(part)
            for w in range(self.m):
                window = range(w * width, (w + 1) * width)
                have = sum(1 for i in window if i in part)
                out.update([i for i in window if i not in part][: per - have])
            return tuple(sorted(out))
        if self.kind == "block":
            blocks = {self._block_of(i) for i in part}
            extra = [b for b in range(self.n // self.m) if b not in blocks]
            blocks.update(extra[: self.s // self.m - len(blocks)])
            return tuple(i for b in sorted(blocks) for i in range(b * self.m, (b + 1) * self.m))
        return next(sup for sup in self.sets if part.issubset(sup))


def enumerate_supports(family: SupportFamily) -> Iterator[Support]:
    """Yield every member exactly once, in lexicographic order, lazily."""
    n, s, m = family.n, family.s, family.m
    if family.kind == "unconstrained":
        yield from itertools.combinations(range(n), s)
    elif family.kind == "piecewise":
        width, per = n // m, s // m
        pieces = [list(itertools.combinations(range(w * width, (w + 1) * width), per)) for w in range(m)]
        for combo in itertools.product(*pieces):
            yield tuple(itertools.chain.from_iterable(combo))
    elif family.kind == "block":
        for blocks in itertools.combinations(range(n // m), s // m):
            yield tuple(i for b in blocks for i in range(b * m, (b + 1) * m))
    else:
        yield from family.sets


def family_size(family: SupportFamily) -> int:
    n, s, m = family.n, family.s, family.m
    if family.kind == "unconstrained":
        return math.comb(n, s)
    if family.kind == "piecewise":
        return math.comb(n // m, s // m) ** m
    if family.kind == "block":
        return math.comb(n // m, s // m)
    return len(family.sets)


def contains_support(family: SupportFamily, candidate: Iterable[int]) -> bool:
    cand = tuple(sorted(set(candidate)))
    if len(cand) != family.s or (cand and (cand[0] < 0 or cand[-1] >= family.n)):
        return False
    if family.kind == "explicit":
        return cand in _explicit_index(family)
    # a full-size extendable set is itself a member for the structured kinds
    return family.is_extendable(cand)


def _explicit_index(family: SupportFamily) -> frozenset:
    cache = family.__dict__.get("_set_index")
    if cache is None:
        cache = frozenset(family.sets)
        object.__setattr__(family, "_set_index", cache)
    return cache


# ---------------------------------------------------------------- Q(t, U)


def q_brute_force(t: int, family: SupportFamily) -> int:
    """Distinct ``t``-subsets of members, by enumeration."""
    seen = set()
    for sup in enumerate_supports(family):
        seen.update(itertools.combinations(sup, t))
    return len(seen)


def q_closed_form(t: int, family: SupportFamily) -> int:
    """Closed-form Q for the structured kinds.

    piecewise: coefficient of ``x**t`` in ``(Σ_{j<=s/m} C(n/m, j) x**j)**m``.

    block: a ``t``-subset is admissible iff it touches at most ``s/m`` blocks.
    Counting subsets that touch exactly ``l`` given blocks by inclusion-exclusion
    gives ``Σ_l C(n/m, l) Σ_j (-1)**j C(l, j) C((l-j) m, t)``.
    """
    n, s, m = family.n, family.s, family.m
    if family.kind == "unconstrained":
        return math.comb(n, t)
    if family.kind == "piecewise":
        width, per = n // m, s // m
        poly = [math.comb(width, j) for j in range(per + 1)]
        acc = [1]
        for _ in range(m):
            nxt = [0] * (len(acc) + per)
            for a, ca in enumerate(acc):
                for b, cb in enumerate(poly):
                    nxt[a + b] += ca * cb
            acc = nxt
        return acc[t] if t < len(acc) else 0
    if family.kind == "block":
        nblocks, chosen = n // m, s // m
        total = 0
        for l in range(chosen + 1):
            exact = sum((-1) ** j * math.comb(l, j) * math.comb((l - j) * m, t) for j in range(l + 1))
            total += math.comb(nblocks, l) * exact
        return total
    raise ParameterError("explicit families have no closed form")


def count_subsets_q(t: int, family: SupportFamily) -> int:
    """Number of distinct ``t``-sized subsets of members of ``family``.

    Enumeration is authoritative within :data:`BRUTE_FORCE_Q_BUDGET`; beyond
    it the structured kinds fall back to :func:`q_closed_form`, which the test
    suite checks against enumeration on every ``n <= 12`` configuration.
    """
    if not 0 <= t <= family.s:
        raise ParameterError(f"t must lie in [0, s={family.s}], got {t}")
    if t == 0:
        return 1
    if family.kind == "unconstrained":
        return math.comb(family.n, t)
    if family_size(family) * math.comb(family.s, t) <= BRUTE_FORCE_Q_BUDGET:
        return q_brute_force(t, family)
    if family.kind == "explicit":
        raise CapacityError(f"explicit family too large for enumeration of Q({t}, U)")
    return q_closed_form(t, family)


def block_to_piecewise_permutation(n: int, m: int) -> np.ndarray:
    """Interleaving map from block layout to piece-wise layout.

    ``perm[b*m + j] = j*(n//m) + b``: entry ``j`` of block ``b`` moves to slot
    ``b`` of window ``j``. The image of ``block(n, s, m)`` lies inside
    ``piecewise(n, s, m)``.
    """
    if m < 1 or n % m:
        raise ParameterError(f"block size m={m} must divide n={n}")
    idx = np.arange(n)
    return (idx % m) * (n // m) + idx // m


# ---------------------------------------------------------------- text format

_SET_RE = re.compile(r"^\{\s*(\d+(?:\s*,\s*\d+)*)\s*\}$")


def parse_explicit_sets(text: str, n: int) -> SupportFamily:
    """Parse one ``{i,j,...}`` set per line (0-based, ``#`` comments allowed)."""
    sets = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        match = _SET_RE.match(line)
        if not match:
            raise ParameterError(f"line {lineno}: expected '{{i,j,...}}', got {line!r}")
        sets.append(tuple(int(tok) for tok in match.group(1).split(",")))
    if not sets:
        raise ParameterError("no sets found")
    sizes = {len(set(x)) for x in sets}
    if len(sizes) != 1:
        raise ParameterError(f"sets have mixed cardinalities {sorted(sizes)}")
    return SupportFamily.explicit(n, sets)


def format_explicit_sets(family: SupportFamily) -> str:
    return "".join("{" + ",".join(map(str, sup)) + "}\n" for sup in enumerate_supports(family))


def make_family(kind: str, n: int, s: int, m: int | None = None, sets=None) -> SupportFamily:
    """Factory used by config files and the CLI."""
    kind = kind.lower().replace("-", "")
    if kind in ("unconstrained", "u", "u1"):
        return SupportFamily.unconstrained(n, s)
    if kind in ("piecewise", "u2"):
        return SupportFamily.piecewise(n, s, s if m is None else m)
    if kind in ("block", "u3"):
        return SupportFamily.block(n, s, s if m is None else m)
    if kind == "explicit":
        if sets is None:
            raise ParameterError("explicit family requires a set list")
        return SupportFamily.explicit(n, sets)
    raise ParameterError(f"unknown family kind {kind!r}")
