"""Countable discrete groups with decidable equality and fixed enumerations.

Supported groups: the integers Z, the lattices Z^d, and the discrete
Heisenberg group H3(Z) in the upper-triangular presentation

    (a, b, c) * (a', b', c') = (a + a', b + b', c + c' + a*b').

Canonical forms are plain Python ints (Z) or tuples of ints (Z^d, H3), so
equality of canonical forms is group equality and arithmetic never wraps
around.  Every group carries one fixed computable enumeration g_1, g_2, ...
starting at the identity; constructions that consume the enumeration are
deterministic across runs.

Each group also knows the geometry of its standard Folner boxes (cardinality,
membership, exact translation overlap counts), which the folner module uses
for closed-form invariance ratios.
"""

from __future__ import annotations

import itertools
import re
from typing import Iterable, Iterator, List

from .errors import DomainError, GroupElementError, UnsupportedGroupError


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _zigzag(i: int) -> int:
    """i-th integer along 0, 1, -1, 2, -2, ..."""
    q, r = divmod(i, 2)
    return q + r if r else -q


def _zigzag_rank(k: int) -> int:
    """Position of k in the zig-zag order (inverse of _zigzag)."""
    return 2 * k - 1 if k > 0 else -2 * k


class Group:
    """Base interface; elements are canonical integer forms."""

    name: str

    @property
    def identity(self):
        raise NotImplementedError

    def check_element(self, a) -> None:
        """Raise GroupElementError unless a is a canonical form for this group."""
        raise NotImplementedError

    def multiply(self, a, b):
        raise NotImplementedError

    def inverse(self, a):
        raise NotImplementedError

    def enumerate_prefix(self, count: int) -> list:
        """First count elements of the fixed enumeration, identity first."""
        if count < 1:
            raise DomainError(f"enumeration prefix length must be >= 1, got {count}")
        return list(itertools.islice(self._enumerate(), count))

    def _enumerate(self) -> Iterator:
        raise NotImplementedError

    def translate_set(self, elems: Iterable, g) -> set:
        """{g*x : x in elems} with the group law inlined for speed."""
        raise NotImplementedError

    def norm1(self, a) -> int:
        """1-norm of the canonical form; used only to order search heuristics."""
        raise NotImplementedError

    # -- standard Folner box geometry -------------------------------------

    def box_card(self, r: int) -> int:
        raise NotImplementedError

    def box_contains(self, r: int, g) -> bool:
        raise NotImplementedError

    def box_elements(self, r: int) -> Iterator:
        raise NotImplementedError

    def box_overlap(self, r: int, g) -> int:
        """|B_r intersect g*B_r| as an exact integer."""
        raise NotImplementedError

    def box_corner(self, r: int):
        """A translation maximizing |B_m delta g*B_m| over g in B_r, if known."""
        return None

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"

    def __eq__(self, other):
        return type(self) is type(other) and self.name == other.name

    def __hash__(self):
        return hash((type(self).__name__, self.name))


class IntegerGroup(Group):
    """The integers under addition; canonical form is a Python int."""

    name = "Z"

    @property
    def identity(self):
        return 0

    def check_element(self, a) -> None:
        if not _is_int(a):
            raise GroupElementError(f"Z element must be an int, got {a!r}")

    def multiply(self, a, b):
        self.check_element(a)
        self.check_element(b)
        return a + b

    def inverse(self, a):
        self.check_element(a)
        return -a

    def _enumerate(self):
        i = 0
        while True:
            yield _zigzag(i)
            i += 1

    def translate_set(self, elems, g):
        self.check_element(g)
        return {g + x for x in elems}

    def norm1(self, a):
        return abs(a)

    def box_card(self, r):
        return 2 * r + 1

    def box_contains(self, r, g):
        return -r <= g <= r

    def box_elements(self, r):
        return iter(range(-r, r + 1))

    def box_overlap(self, r, g):
        return max(0, 2 * r + 1 - abs(g))

    def box_corner(self, r):
        return r


class LatticeGroup(Group):
    """Z^d under coordinatewise addition; canonical form is a d-tuple of ints."""

    def __init__(self, dimension: int):
        if not _is_int(dimension) or dimension < 1:
            raise UnsupportedGroupError(f"lattice dimension must be a positive int, got {dimension}")
        self.dimension = dimension
        self.name = f"Z^{dimension}"

    @property
    def identity(self):
        return (0,) * self.dimension

    def check_element(self, a) -> None:
        if (
            not isinstance(a, tuple)
            or len(a) != self.dimension
            or not all(_is_int(c) for c in a)
        ):
            raise GroupElementError(f"{self.name} element must be a {self.dimension}-tuple of ints, got {a!r}")

    def multiply(self, a, b):
        self.check_element(a)
        self.check_element(b)
        return tuple(x + y for x, y in zip(a, b))

    def inverse(self, a):
        self.check_element(a)
        return tuple(-x for x in a)

    def _shell(self, s: int) -> List[tuple]:
        """Elements of 1-norm exactly s, in the decided deterministic order."""

        def build(rem: int, coords_left: int):
            if coords_left == 1:
                for v in ((rem, -rem) if rem else (0,)):
                    yield (v,)
                return
            for k in range(-rem, rem + 1):
                for tail in build(rem - abs(k), coords_left - 1):
                    yield (k,) + tail

        shell = list(build(s, self.dimension))
        # spiral tie-break: later coordinates vary slowest, zig-zag within each
        shell.sort(key=lambda t: tuple(_zigzag_rank(c) for c in reversed(t)))
        return shell

    def _enumerate(self):
        s = 0
        while True:
            yield from self._shell(s)
            s += 1

    def translate_set(self, elems, g):
        self.check_element(g)
        return {tuple(gi + xi for gi, xi in zip(g, x)) for x in elems}

    def norm1(self, a):
        return sum(abs(c) for c in a)

    def box_card(self, r):
        return (2 * r + 1) ** self.dimension

    def box_contains(self, r, g):
        return all(-r <= c <= r for c in g)

    def box_elements(self, r):
        return itertools.product(range(-r, r + 1), repeat=self.dimension)

    def box_overlap(self, r, g):
        prod = 1
        for k in g:
            prod *= max(0, 2 * r + 1 - abs(k))
        return prod

    def box_corner(self, r):
        return (r,) * self.dimension


class HeisenbergGroup(Group):
    """Discrete Heisenberg group H3(Z); canonical form is a triple (a, b, c).

    Standard Folner boxes use the quadratic central scaling
    B_r = {(a, b, c): |a|, |b| <= r, |c| <= r^2}; boxes with a linear c-range
    are not Folner in H3.
    """

    name = "H3"

    @property
    def identity(self):
        return (0, 0, 0)

    def check_element(self, a) -> None:
        if not isinstance(a, tuple) or len(a) != 3 or not all(_is_int(c) for c in a):
            raise GroupElementError(f"H3 element must be a 3-tuple of ints, got {a!r}")

    def multiply(self, x, y):
        self.check_element(x)
        self.check_element(y)
        a, b, c = x
        ap, bp, cp = y
        return (a + ap, b + bp, c + cp + a * bp)

    def inverse(self, x):
        self.check_element(x)
        a, b, c = x
        return (-a, -b, -c + a * b)

    def _enumerate(self):
        # box-radius sweep: new elements of B_r \ B_{r-1} per shell, zig-zag keyed
        r = 0
        while True:
            if r == 0:
                yield (0, 0, 0)
            else:
                shell = [
                    (a, b, c)
                    for a, b, c in self.box_elements(r)
                    if max(abs(a), abs(b)) > r - 1 or abs(c) > (r - 1) ** 2
                ]
                shell.sort(key=lambda t: (_zigzag_rank(t[0]), _zigzag_rank(t[1]), _zigzag_rank(t[2])))
                yield from shell
            r += 1

    def translate_set(self, elems, g):
        self.check_element(g)
        a, b, c = g
        return {(a + x1, b + x2, c + x3 + a * x2) for x1, x2, x3 in elems}

    def norm1(self, x):
        return abs(x[0]) + abs(x[1]) + abs(x[2])

    def box_card(self, r):
        return (2 * r + 1) ** 2 * (2 * r * r + 1)

    def box_contains(self, r, g):
        a, b, c = g
        return abs(a) <= r and abs(b) <= r and abs(c) <= r * r

    def box_elements(self, r):
        rng = range(-r, r + 1)
        crng = range(-r * r, r * r + 1)
        return itertools.product(rng, rng, crng)

    def box_overlap(self, r, g):
        # x in B_r and g^-1 x in B_r; the c-condition couples to x2 through a*x2
        a, b, c = g
        cnt_x1 = max(0, 2 * r + 1 - abs(a))
        if cnt_x1 == 0:
            return 0
        lo = max(-r, b - r)
        hi = min(r, b + r)
        if lo > hi:
            return 0
        depth = 2 * r * r + 1
        total = 0
        for x2 in range(lo, hi + 1):
            t = c - a * b + a * x2
            total += max(0, depth - abs(t))
        return cnt_x1 * total


def group_by_name(name: str) -> Group:
    """Resolve the CLI/config group names: "Z", "Z^2", "Z^3", ..., "H3"."""
    if name == "Z":
        return IntegerGroup()
    if name == "H3":
        return HeisenbergGroup()
    m = re.fullmatch(r"Z\^(\d+)", name)
    if m:
        return LatticeGroup(int(m.group(1)))
    raise UnsupportedGroupError(f"unknown group name {name!r}; expected Z, Z^d or H3")


def multiply(group: Group, a, b):
    """Canonical form of a*b."""
    return group.multiply(a, b)


def inverse(group: Group, a):
    """Canonical form of a^-1."""
    return group.inverse(a)


def enumerate_prefix(group: Group, count: int) -> list:
    """g_1 ... g_count of the group's fixed enumeration."""
    return group.enumerate_prefix(count)
