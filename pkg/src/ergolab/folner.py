"""Folner families, exact invariance ratios, convergence moduli and refinements.

All cardinality comparisons are exact: set sizes are integers, tolerances are
`fractions.Fraction`, and the strict inequalities of the modulus definitions
are decided without floating point.  Standard box families are represented by
their radii, so ratios on them come from closed-form overlap counts; the
module-level `folner_ratio` always takes the literal set-arithmetic route,
which the tests replay against the closed forms.

The universally quantified "for all m >= N" in the modulus definition is
undecidable for arbitrary families; empirical entries are therefore stamped
`certified_up_to = m_max`, while entries for Z/Z^d boxes are analytic (the
box ratio is monotone in m, so a single corner computation certifies every
larger index).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    ConstructionBudgetError,
    DomainError,
    FamilyTooLargeError,
    ModulusNotFoundError,
    RefinementWindowError,
    StructureError,
)
from .groups import Group, IntegerGroup, LatticeGroup, group_by_name

MATERIALIZE_CAP = 2_000_000
_PACK_LIMIT = 2**62


def as_fraction(x) -> Fraction:
    """Exact rational from Fraction, int, 'a/b' string, or float (converted exactly)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise DomainError(f"expected a rational number, got {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"cannot parse rational from {x!r}") from exc
    if isinstance(x, float):
        if not np.isfinite(x):
            raise DomainError(f"rational parameter must be finite, got {x!r}")
        return Fraction(x)
    raise DomainError(f"cannot interpret {x!r} as a rational number")


def _pack_sorted(elems) -> Optional[np.ndarray]:
    """Sorted int64 array of integer canonical forms, or None if not packable."""
    if not elems:
        return None
    first = next(iter(elems))
    if not isinstance(first, int):
        return None
    try:
        arr = np.fromiter(elems, dtype=np.int64, count=len(elems))
    except OverflowError:
        return None
    arr.sort()
    return arr


def _packed_overlap(arr: np.ndarray, g: int) -> Optional[int]:
    if abs(g) + max(abs(int(arr[0])), abs(int(arr[-1]))) >= _PACK_LIMIT:
        return None
    shifted = arr + g
    pos = np.searchsorted(arr, shifted)
    inside = pos < arr.size
    pos[~inside] = 0
    return int(np.count_nonzero(inside & (arr[pos] == shifted)))


def _set_overlap(group: Group, s: frozenset, g) -> int:
    return len(s & group.translate_set(s, g))


def box_ratio(group: Group, r: int, g) -> Fraction:
    """|B_r delta g B_r| / |B_r| from the closed-form overlap count."""
    group.check_element(g)
    card = group.box_card(r)
    return Fraction(2 * (card - group.box_overlap(r, g)), card)


class FolnerFamily:
    """Indexed family F_1 ... F_n_max of finite nonempty subsets of a group.

    Indices are 1-based; there is no F_0.  Instances are immutable after
    construction and all query operations are pure.
    """

    provenance = "explicit"

    def __init__(self, group: Group, n_max: int):
        if n_max < 1:
            raise DomainError(f"family length must be >= 1, got {n_max}")
        self.group = group
        self.n_max = n_max

    def _check_index(self, n: int) -> None:
        if not (isinstance(n, int) and 1 <= n <= self.n_max):
            raise StructureError(f"family index must be in [1, {self.n_max}], got {n!r}")

    def card(self, n: int) -> int:
        raise NotImplementedError

    def elements(self, n: int) -> frozenset:
        raise NotImplementedError

    def contains(self, n: int, g) -> bool:
        return g in self.elements(n)

    def box_radius(self, n: int) -> Optional[int]:
        """Radius when F_n is a standard box of this group, else None."""
        return None

    def ratio(self, n: int, g) -> Fraction:
        """|F_n delta g F_n| / |F_n| by the fastest exact route available."""
        raise NotImplementedError

    def to_jsonable(self) -> dict:
        raise NotImplementedError


class ExplicitFamily(FolnerFamily):
    """Family with explicitly stored element sets."""

    def __init__(self, group: Group, sets: Sequence[Iterable], provenance: str = "explicit"):
        sets = [frozenset(s) for s in sets]
        super().__init__(group, len(sets))
        for i, s in enumerate(sets):
            if not s:
                raise StructureError(f"F_{i + 1} is empty; Folner sets must be nonempty")
            for g in s:
                group.check_element(g)
        self.provenance = provenance
        self._sets = sets
        self._packed: List = [False] * len(sets)  # False = not attempted yet

    def card(self, n: int) -> int:
        self._check_index(n)
        return len(self._sets[n - 1])

    def elements(self, n: int) -> frozenset:
        self._check_index(n)
        return self._sets[n - 1]

    def _packed_at(self, n: int) -> Optional[np.ndarray]:
        cached = self._packed[n - 1]
        if cached is False:
            cached = _pack_sorted(self._sets[n - 1])
            self._packed[n - 1] = cached
        return cached

    def ratio(self, n: int, g) -> Fraction:
        self._check_index(n)
        self.group.check_element(g)
        s = self._sets[n - 1]
        overlap = None
        arr = self._packed_at(n)
        if arr is not None:
            overlap = _packed_overlap(arr, g)
        if overlap is None:
            overlap = _set_overlap(self.group, s, g)
        return Fraction(2 * (len(s) - overlap), len(s))

    def to_jsonable(self) -> dict:
        return {
            "kind": "explicit",
            "group": self.group.name,
            "provenance": self.provenance,
            "n_max": self.n_max,
            "sets": [
                [list(g) if isinstance(g, tuple) else g for g in sorted(s)]
                for s in self._sets
            ],
        }


class StandardBoxFamily(FolnerFamily):
    """F_n = standard box of radius n; nothing is stored per index.

    Z^d uses F_n = [-n, n]^d; H3 uses |a|, |b| <= n with |c| <= n^2.
    Element sets are materialized on demand (and cached) up to
    MATERIALIZE_CAP elements.
    """

    provenance = "standard-box"

    def __init__(self, group: Group, n_max: int):
        super().__init__(group, n_max)
        self._cache: Dict[int, frozenset] = {}

    def card(self, n: int) -> int:
        self._check_index(n)
        return self.group.box_card(n)

    def elements(self, n: int) -> frozenset:
        self._check_index(n)
        if n not in self._cache:
            if self.group.box_card(n) > MATERIALIZE_CAP:
                raise FamilyTooLargeError(
                    f"box F_{n} of {self.group.name} has {self.group.box_card(n)} elements; "
                    f"cannot materialize beyond {MATERIALIZE_CAP}"
                )
            self._cache[n] = frozenset(self.group.box_elements(n))
        return self._cache[n]

    def contains(self, n: int, g) -> bool:
        self._check_index(n)
        return self.group.box_contains(n, g)

    def box_radius(self, n: int) -> Optional[int]:
        self._check_index(n)
        return n

    def ratio(self, n: int, g) -> Fraction:
        self._check_index(n)
        return box_ratio(self.group, n, g)

    def to_jsonable(self) -> dict:
        return {
            "kind": "standard-box",
            "group": self.group.name,
            "provenance": self.provenance,
            "n_max": self.n_max,
        }


class RefinedFamily(FolnerFamily):
    """Subsequence view F'_j = F_{indices[j]} of a source family."""

    provenance = "refined"

    def __init__(self, source: FolnerFamily, indices: Sequence[int]):
        indices = list(indices)
        if not indices:
            raise StructureError("refined family needs at least one index")
        for i, idx in enumerate(indices):
            source._check_index(idx)
            if i and indices[i - 1] >= idx:
                raise StructureError(f"refinement indices must increase, got {indices}")
        super().__init__(source.group, len(indices))
        self.source = source
        self.indices = indices

    def _src(self, n: int) -> int:
        self._check_index(n)
        return self.indices[n - 1]

    def card(self, n: int) -> int:
        return self.source.card(self._src(n))

    def elements(self, n: int) -> frozenset:
        return self.source.elements(self._src(n))

    def contains(self, n: int, g) -> bool:
        return self.source.contains(self._src(n), g)

    def box_radius(self, n: int) -> Optional[int]:
        return self.source.box_radius(self._src(n))

    def ratio(self, n: int, g) -> Fraction:
        return self.source.ratio(self._src(n), g)

    def to_jsonable(self) -> dict:
        return {
            "kind": "refined",
            "group": self.group.name,
            "provenance": self.provenance,
            "indices": list(self.indices),
            "source": self.source.to_jsonable(),
        }


def standard_family(group: Group, n_max: int) -> StandardBoxFamily:
    """The group's standard nested box family F_1 ... F_n_max."""
    return StandardBoxFamily(group, n_max)


def family_from_jsonable(data: dict) -> FolnerFamily:
    group = group_by_name(data["group"])
    kind = data.get("kind", "explicit")
    if kind == "standard-box":
        return StandardBoxFamily(group, data["n_max"])
    if kind == "refined":
        return RefinedFamily(family_from_jsonable(data["source"]), data["indices"])
    if kind == "explicit":
        sets = [
            frozenset(tuple(g) if isinstance(g, list) else g for g in s)
            for s in data["sets"]
        ]
        return ExplicitFamily(group, sets, provenance=data.get("provenance", "explicit"))
    raise StructureError(f"unknown family kind {kind!r}")


def folner_ratio(family: FolnerFamily, n: int, g) -> Fraction:
    """|F_n delta g F_n| / |F_n| by exact set arithmetic.

    For families stored as boxes this materializes the set and takes the
    literal translate/symmetric-difference route, independent of the
    closed-form counts used by `family.ratio`.
    """
    family._check_index(n)
    family.group.check_element(g)
    if family.box_radius(n) is not None:
        s = family.elements(n)
        gs = family.group.translate_set(s, g)
        return Fraction(len(s ^ gs), len(s))
    return family.ratio(n, g)


# ---------------------------------------------------------------------------
# Convergence moduli
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModulusEntry:
    n: int
    epsilon: Fraction
    value: int
    kind: str  # "analytic" | "empirical"
    certified_up_to: Optional[int]  # None = certified for every m >= value


class ModulusTable:
    """Certified values of the Folner convergence modulus beta(n, eps)."""

    def __init__(self, group_name: str, provenance: str, entries: Iterable[ModulusEntry]):
        self.group_name = group_name
        self.provenance = provenance
        self._entries: Dict[Tuple[int, Fraction], ModulusEntry] = {}
        for e in entries:
            self._entries[(e.n, e.epsilon)] = e

    @property
    def entries(self) -> Dict[Tuple[int, Fraction], ModulusEntry]:
        return dict(self._entries)

    @property
    def kind(self) -> str:
        return "analytic" if all(e.kind == "analytic" for e in self._entries.values()) else "empirical"

    @property
    def certified_up_to(self) -> Optional[int]:
        caps = [e.certified_up_to for e in self._entries.values() if e.certified_up_to is not None]
        return min(caps) if caps else None

    def value(self, n: int, eps) -> int:
        eps = as_fraction(eps)
        try:
            return self._entries[(n, eps)].value
        except KeyError:
            raise StructureError(f"no modulus entry for (n={n}, eps={eps})") from None

    def epsilons(self) -> List[Fraction]:
        return sorted({e.epsilon for e in self._entries.values()})

    def ns_for(self, eps) -> List[int]:
        eps = as_fraction(eps)
        return sorted(e.n for e in self._entries.values() if e.epsilon == eps)

    def covers(self, window: int, eps) -> bool:
        """True if entries exist for n = 1..window at eps and certify past window."""
        eps = as_fraction(eps)
        for n in range(1, window + 1):
            e = self._entries.get((n, eps))
            if e is None:
                return False
            if e.certified_up_to is not None and e.certified_up_to < window:
                return False
        return True

    def to_jsonable(self) -> dict:
        entries = sorted(self._entries.values(), key=lambda e: (str(e.epsilon), e.n))
        return {
            "group": self.group_name,
            "provenance": self.provenance,
            "kind": self.kind,
            "certified_up_to": self.certified_up_to,
            "entries": [
                {
                    "n": e.n,
                    "eps": f"{e.epsilon.numerator}/{e.epsilon.denominator}",
                    "N": e.value,
                    "kind": e.kind,
                    "certified_up_to": e.certified_up_to,
                }
                for e in entries
            ],
        }

    @classmethod
    def from_jsonable(cls, data: dict) -> "ModulusTable":
        entries = [
            ModulusEntry(
                n=e["n"],
                epsilon=as_fraction(e["eps"]),
                value=e["N"],
                kind=e.get("kind", "empirical"),
                certified_up_to=e.get("certified_up_to"),
            )
            for e in data["entries"]
        ]
        return cls(data["group"], data.get("provenance", "explicit"), entries)


def _analytic_box_modulus(group: Group, n: int, eps: Fraction) -> int:
    """Least N with ratio(B_m, corner of B_n) < eps for all m >= N (Z/Z^d boxes).

    The box ratio is nonincreasing in m and, per axis, nondecreasing in the
    translation, so the corner of B_n dominates all g in B_n and a single
    threshold search certifies every larger m.
    """
    corner = group.box_corner(n)

    def ok(m: int) -> bool:
        return box_ratio(group, m, corner) < eps

    if ok(1):
        return 1
    hi = 2
    while not ok(hi):
        hi *= 2
        if hi > 10**18:
            raise DomainError(f"no analytic modulus below 10^18 for (n={n}, eps={eps})")
    lo = hi // 2  # ok(lo) is False
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def convergence_modulus(family: FolnerFamily, n: int, eps, m_max: Optional[int] = None) -> ModulusEntry:
    """A certified entry N = beta(n, eps) for the family.

    Standard Z/Z^d box families get an analytic entry valid for every m >= N.
    Other families get the least N such that the defining condition holds for
    all m in [N, m_max], stamped certified_up_to = m_max.
    """
    eps = as_fraction(eps)
    if eps <= 0:
        raise DomainError(f"modulus tolerance must be positive, got {eps}")
    family._check_index(n)

    if isinstance(family, StandardBoxFamily) and isinstance(family.group, (IntegerGroup, LatticeGroup)):
        value = _analytic_box_modulus(family.group, n, eps)
        return ModulusEntry(n=n, epsilon=eps, value=value, kind="analytic", certified_up_to=None)

    if m_max is None:
        raise DomainError("m_max is required for empirical modulus certification")
    if not 1 <= m_max <= family.n_max:
        raise DomainError(f"m_max must be in [1, {family.n_max}], got {m_max}")

    group = family.group
    corner_mode = (
        isinstance(group, (IntegerGroup, LatticeGroup))
        and family.box_radius(n) is not None
        and all(family.box_radius(m) is not None for m in range(1, m_max + 1))
    )
    worst_by_m: Dict[int, Fraction] = {}
    if corner_mode:
        # per-axis monotone overlap: the corner of F_n dominates every g in F_n
        corner = group.box_corner(family.box_radius(n))
        for m in range(1, m_max + 1):
            worst_by_m[m] = box_ratio(group, family.box_radius(m), corner)
    else:
        gs = sorted(family.elements(n), key=lambda g: (-group.norm1(g), _sort_key(g)))
        for m in range(1, m_max + 1):
            worst_by_m[m] = max(family.ratio(m, g) for g in gs)
    if worst_by_m[m_max] >= eps:
        raise ModulusNotFoundError(n, eps, m_max, worst_by_m)
    value = m_max
    while value > 1 and worst_by_m[value - 1] < eps:
        value -= 1
    return ModulusEntry(n=n, epsilon=eps, value=value, kind="empirical", certified_up_to=m_max)


def build_modulus_table(
    family: FolnerFamily,
    ns: Iterable[int],
    epsilons: Iterable,
    m_max: Optional[int] = None,
) -> ModulusTable:
    entries = [
        convergence_modulus(family, n, eps, m_max=m_max)
        for eps in list(epsilons)
        for n in list(ns)
    ]
    return ModulusTable(family.group.name, family.provenance, entries)


def envelope(table: ModulusTable) -> ModulusTable:
    """Nondecreasing-in-n envelope: entry(n) -> max over i <= n of entry(i).

    Requires contiguous coverage n = 1..k at each tolerance present.
    """
    out: List[ModulusEntry] = []
    for eps in table.epsilons():
        ns = table.ns_for(eps)
        if ns != list(range(1, len(ns) + 1)):
            raise StructureError(f"envelope needs entries for all i <= n at eps={eps}, have n in {ns}")
        running = 0
        cap: Optional[int] = None
        kind = "analytic"
        for n in ns:
            e = table.entries[(n, eps)]
            running = max(running, e.value)
            if e.certified_up_to is not None:
                cap = e.certified_up_to if cap is None else min(cap, e.certified_up_to)
            if e.kind != "analytic":
                kind = "empirical"
            out.append(ModulusEntry(n=n, epsilon=eps, value=running, kind=kind, certified_up_to=cap))
    return ModulusTable(table.group_name, table.provenance, out)


def check_modulus(family: FolnerFamily, n: int, eps, claimed: int, window: int) -> bool:
    """Re-verify a claimed modulus value over [claimed, window] (vacuous if empty)."""
    eps = as_fraction(eps)
    family._check_index(n)
    if window > family.n_max:
        raise DomainError(f"window {window} exceeds family length {family.n_max}")
    gs = sorted(family.elements(n), key=lambda g: (-family.group.norm1(g), _sort_key(g)))
    for m in range(max(claimed, 1), window + 1):
        for g in gs:
            if family.ratio(m, g) >= eps:
                return False
    return True


def _sort_key(g):
    return g if isinstance(g, tuple) else (g,)


def worst_ratio_table(family: FolnerFamily, n_hi: int, m_hi: int) -> Dict[Tuple[int, int], Fraction]:
    """worst[(n, m)] = max over g in F_n of |F_m delta g F_m|/|F_m|.

    For nested families each g is attributed to the first index containing it,
    so every (g, m) ratio is computed once; non-nested families fall back to
    per-index loops.
    """
    family._check_index(n_hi)
    family._check_index(m_hi)
    nested = all(
        family.elements(n) <= family.elements(n + 1) for n in range(1, n_hi)
    )
    table: Dict[Tuple[int, int], Fraction] = {}
    if not nested:
        for n in range(1, n_hi + 1):
            for m in range(1, m_hi + 1):
                table[(n, m)] = max(family.ratio(m, g) for g in family.elements(n))
        return table

    first_stage: Dict = {}
    for n in range(1, n_hi + 1):
        for g in family.elements(n):
            first_stage.setdefault(g, n)
    top = sorted(family.elements(n_hi), key=_sort_key)
    zero = Fraction(0)
    for m in range(1, m_hi + 1):
        worst_at_stage = [zero] * (n_hi + 1)
        for g in top:
            r = family.ratio(m, g)
            st = first_stage[g]
            if r > worst_at_stage[st]:
                worst_at_stage[st] = r
        running = zero
        for n in range(1, n_hi + 1):
            running = max(running, worst_at_stage[n])
            table[(n, m)] = running
    return table


# ---------------------------------------------------------------------------
# Greedy computable construction
# ---------------------------------------------------------------------------


def _stage_condition_holds(group: Group, stage: int, card: int, overlap_of, prev_sorted) -> bool:
    # |C delta gC| < |C|/stage as integers: stage * 2 * (card - overlap) < card
    for g in prev_sorted:
        if stage * 2 * (card - overlap_of(g)) >= card:
            return False
    return True


def greedy_folner(group: Group, n_max: int, search_budget: int = 10_000) -> ExplicitFamily:
    """The computable greedy Folner construction.

    F_1 = {g_1}; for n >= 2 the augmented set F~_n is the first candidate in a
    deterministic stream (F_{n-1} itself, then F_{n-1} united with standard
    boxes of growing radius) satisfying |F~ delta g F~| < |F~|/n for all g in
    F_{n-1}; then F_n = F~_n union {g_n}.  The least valid box radius is
    located by doubling plus bisection, which matches a radius-by-radius scan
    whenever validity is monotone in the radius (true for the supported box
    geometries at these scales).  Each candidate evaluation counts against
    search_budget per stage.

    Every built stage then satisfies |F_n delta g F_n|/|F_n| < 3/n for all
    g in F_{n-1}.
    """
    if n_max < 1:
        raise DomainError(f"n_max must be >= 1, got {n_max}")
    if search_budget < 1:
        raise DomainError(f"search_budget must be >= 1, got {search_budget}")
    enum = group.enumerate_prefix(n_max)
    sets: List[frozenset] = [frozenset([enum[0]])]

    for stage in range(2, n_max + 1):
        prev = sets[-1]
        prev_sorted = sorted(prev, key=lambda g: (-group.norm1(g), _sort_key(g)))
        evals = 0

        def spend():
            nonlocal evals
            evals += 1
            if evals > search_budget:
                raise ConstructionBudgetError(stage, search_budget)

        def box_valid(r: int) -> bool:
            # only called when prev is inside the box, so the candidate IS the box
            card = group.box_card(r)
            return _stage_condition_holds(
                group, stage, card, lambda g: group.box_overlap(r, g), prev_sorted
            )

        def set_valid(s: frozenset) -> bool:
            card = len(s)
            arr = _pack_sorted(s)
            if arr is not None:
                def overlap_of(g):
                    ov = _packed_overlap(arr, g)
                    return ov if ov is not None else _set_overlap(group, s, g)
            else:
                def overlap_of(g):
                    return _set_overlap(group, s, g)
            return _stage_condition_holds(group, stage, card, overlap_of, prev_sorted)

        def candidate_valid(r: int) -> bool:
            spend()
            if r == 0:
                return set_valid(prev)
            if all(group.box_contains(r, g) for g in prev):
                return box_valid(r)
            union = frozenset(prev | set(group.box_elements(r)))
            return set_valid(union)

        if candidate_valid(0):
            chosen = prev
        else:
            hi = 1
            while not candidate_valid(hi):
                hi *= 2
            lo = hi // 2  # invalid (or 0, whose candidate was prev and failed)
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if candidate_valid(mid):
                    hi = mid
                else:
                    lo = mid
            if group.box_card(hi) > MATERIALIZE_CAP:
                raise FamilyTooLargeError(
                    f"greedy stage {stage} needs a box with {group.box_card(hi)} elements; "
                    f"materialization cap is {MATERIALIZE_CAP}"
                )
            chosen = frozenset(prev | set(group.box_elements(hi)))
        sets.append(frozenset(chosen | {enum[stage - 1]}))

    return ExplicitFamily(group, sets, provenance="greedy-constructed")


# ---------------------------------------------------------------------------
# Fast refinement and fastness checks
# ---------------------------------------------------------------------------


def _next_box_index(group: Group, radius_bound: int, eps: Fraction, after: int, n_max: int) -> Optional[int]:
    """Least m > after with corner-of-B_radius_bound ratio against B_m below eps.

    The box ratio is nonincreasing in m, so the predicate is monotone and the
    bisection result equals an index-by-index scan.
    """
    corner = group.box_corner(radius_bound)

    def ok(m: int) -> bool:
        return box_ratio(group, m, corner) < eps

    lo = after + 1
    if lo > n_max:
        return None
    if ok(lo):
        return lo
    hi = lo
    while True:
        hi = min(hi * 2, n_max)
        if ok(hi):
            break
        if hi == n_max:
            return None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def fast_refinement(family: FolnerFamily, eps, count: Optional[int] = None) -> RefinedFamily:
    """Greedy subsequence F_{n_1}, F_{n_2}, ... that is (1, eps)-fast over its window.

    n_1 = 1; n_{j+1} is the least later index m such that
    |F_m delta g F_m|/|F_m| < eps for every g in the union of the chosen sets.
    With count given, raises RefinementWindowError if the source ends first;
    with count None, refines until the source is exhausted.
    """
    eps = as_fraction(eps)
    if eps <= 0:
        raise DomainError(f"refinement tolerance must be positive, got {eps}")
    if count is not None and count < 1:
        raise DomainError(f"count must be >= 1, got {count}")

    box_mode = isinstance(family, StandardBoxFamily) and isinstance(
        family.group, (IntegerGroup, LatticeGroup)
    )
    if count is None and family.n_max > 10**6:
        raise DomainError("count is required when refining a source longer than 10^6")

    indices = [1]
    if box_mode:
        while count is None or len(indices) < count:
            nxt = _next_box_index(family.group, indices[-1], eps, indices[-1], family.n_max)
            if nxt is None:
                if count is not None:
                    raise RefinementWindowError(indices, count)
                break
            indices.append(nxt)
    else:
        union = set(family.elements(1))
        while count is None or len(indices) < count:
            ordered = sorted(union, key=lambda g: (-family.group.norm1(g), _sort_key(g)))
            nxt = None
            for m in range(indices[-1] + 1, family.n_max + 1):
                if all(family.ratio(m, g) < eps for g in ordered):
                    nxt = m
                    break
            if nxt is None:
                if count is not None:
                    raise RefinementWindowError(indices, count)
                break
            indices.append(nxt)
            if count is not None and len(indices) == count:
                break
            union |= family.elements(nxt)
    return RefinedFamily(family, indices)


@dataclass
class FastCheckReport:
    ok: bool
    lam: int
    epsilon: Fraction
    window: int
    violation: Optional[tuple] = None  # (n, m, g, ratio)

    def to_jsonable(self) -> dict:
        viol = None
        if self.violation is not None:
            n, m, g, r = self.violation
            viol = {
                "n": n,
                "m": m,
                "g": list(g) if isinstance(g, tuple) else g,
                "ratio": f"{r.numerator}/{r.denominator}",
            }
        return {
            "ok": self.ok,
            "lambda": self.lam,
            "eps": f"{self.epsilon.numerator}/{self.epsilon.denominator}",
            "window": self.window,
            "violation": viol,
        }


def check_fast(family: FolnerFamily, lam: int, eps, window: int) -> FastCheckReport:
    """Verify the (lam, eps)-fast property over [1, window]; report first violation.

    When both F_n and F_m are standard Z/Z^d boxes the maximizing translation
    is the corner of F_n, so a single closed-form evaluation decides each
    (n, m) pair; the reported g is then that corner witness.
    """
    eps = as_fraction(eps)
    if lam < 1:
        raise DomainError(f"lambda must be >= 1, got {lam}")
    if not 1 <= window <= family.n_max:
        raise DomainError(f"window must be in [1, {family.n_max}], got {window}")

    corner_ok = isinstance(family.group, (IntegerGroup, LatticeGroup))
    for n in range(1, window + 1):
        rn = family.box_radius(n)
        for m in range(n + lam, window + 1):
            rm = family.box_radius(m)
            if corner_ok and rn is not None and rm is not None:
                g = family.group.box_corner(rn)
                r = box_ratio(family.group, rm, g)
                if r >= eps:
                    return FastCheckReport(False, lam, eps, window, (n, m, g, r))
                continue
            for g in sorted(family.elements(n), key=_sort_key):
                r = family.ratio(m, g)
                if r >= eps:
                    return FastCheckReport(False, lam, eps, window, (n, m, g, r))
    return FastCheckReport(True, lam, eps, window)
