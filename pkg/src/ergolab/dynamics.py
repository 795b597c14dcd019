"""Finite measure-preserving systems and ergodic averages of Koopman actions.

A system is a finite weighted point set together with a group action given by
generator images (permutations).  The action of a general element is recovered
by factoring its canonical form into generator powers:

    Z:    k         -> T^k
    Z^d:  (k_1...)  -> T_1^{k_1} ... T_d^{k_d}
    H3:   (a, b, c) -> X^a Y^b Z^{c - a*b}     (since x^a y^b z^m = (a, b, ab+m))

Weights are exact rationals so measure preservation is checked exactly;
observables and norms are double precision.  The ergodic average over an
integer interval is also available through a residue-counting route that
never iterates the interval, which keeps averages over astronomically large
boxes exact in structure and cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import StructureError
from .folner import FolnerFamily, as_fraction
from .groups import Group, HeisenbergGroup, IntegerGroup, LatticeGroup


def _perm_tuple(perm: Sequence[int], n_points: int) -> Tuple[int, ...]:
    p = tuple(int(v) for v in perm)
    if len(p) != n_points or sorted(p) != list(range(n_points)):
        raise StructureError(f"not a permutation of 0..{n_points - 1}: {perm!r}")
    return p


def _perm_power(perm: Tuple[int, ...], k: int) -> Tuple[int, ...]:
    """perm^k via cycle decomposition; k may be any integer, however large."""
    n = len(perm)
    out = [0] * n
    seen = [False] * n
    for start in range(n):
        if seen[start]:
            continue
        cycle = [start]
        seen[start] = True
        nxt = perm[start]
        while nxt != start:
            seen[nxt] = True
            cycle.append(nxt)
            nxt = perm[nxt]
        ln = len(cycle)
        shift = k % ln
        for i, s in enumerate(cycle):
            out[s] = cycle[(i + shift) % ln]
    return tuple(out)


def _compose(p: Tuple[int, ...], q: Tuple[int, ...]) -> Tuple[int, ...]:
    """(p o q)(s) = p[q[s]]."""
    return tuple(p[v] for v in q)


@dataclass(frozen=True)
class Observable:
    """A real function on the system's points, measured in the L^p norm."""

    values: np.ndarray
    p: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise StructureError(f"observable values must be a 1-d vector, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise StructureError("observable values must be finite")
        if not (1.0 < float(self.p) < float("inf")):
            raise StructureError(f"p must lie in (1, inf), got {self.p}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "p", float(self.p))

    def __len__(self):
        return self.values.size


class FiniteMeasureSystem:
    """Finite point set with positive rational weights and a permutation action."""

    #: generator names expected per group kind
    GENERATOR_NAMES = {"Z": ("t",), "H3": ("x", "y", "z")}

    def __init__(self, group: Group, weights: Sequence, generators: Dict[str, Sequence[int]]):
        self.group = group
        self.weights = tuple(as_fraction(w) for w in weights)
        if not self.weights:
            raise StructureError("system needs at least one point")
        if any(w <= 0 for w in self.weights):
            raise StructureError("weights must be positive rationals")
        self.n_points = len(self.weights)
        names = self._expected_names()
        if set(generators) != set(names):
            raise StructureError(
                f"group {group.name} needs generators named {sorted(names)}, got {sorted(generators)}"
            )
        self.generators = {k: _perm_tuple(v, self.n_points) for k, v in generators.items()}
        self._check_measure_preserving()
        self._act_cache: Dict = {}
        self._weights_float = np.array([float(w) for w in self.weights])

    def _expected_names(self) -> Tuple[str, ...]:
        if isinstance(self.group, IntegerGroup):
            return self.GENERATOR_NAMES["Z"]
        if isinstance(self.group, HeisenbergGroup):
            return self.GENERATOR_NAMES["H3"]
        if isinstance(self.group, LatticeGroup):
            return tuple(f"t{i + 1}" for i in range(self.group.dimension))
        raise StructureError(f"unsupported group for dynamics: {self.group!r}")

    def _check_measure_preserving(self) -> None:
        # exact: weights constant along every generator orbit
        for name, perm in self.generators.items():
            for s, img in enumerate(perm):
                if self.weights[img] != self.weights[s]:
                    raise StructureError(
                        f"generator {name!r} does not preserve the measure: "
                        f"weight({img}) != weight({s})"
                    )

    @property
    def total_mass(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    def act(self, g) -> Tuple[int, ...]:
        """The permutation s -> g . s."""
        self.group.check_element(g)
        key = g
        cached = self._act_cache.get(key)
        if cached is not None:
            return cached
        if isinstance(self.group, IntegerGroup):
            perm = _perm_power(self.generators["t"], g)
        elif isinstance(self.group, LatticeGroup):
            perm = tuple(range(self.n_points))
            for i, k in enumerate(g):
                perm = _compose(_perm_power(self.generators[f"t{i + 1}"], k), perm)
        else:  # H3
            a, b, c = g
            perm = _compose(
                _perm_power(self.generators["x"], a),
                _compose(
                    _perm_power(self.generators["y"], b),
                    _perm_power(self.generators["z"], c - a * b),
                ),
            )
        self._act_cache[key] = perm
        return perm

    def act_array(self, g) -> np.ndarray:
        return np.array(self.act(g), dtype=np.intp)

    def validate_action(self, pairs: int = 50, prefix: int = 24, seed: int = 0) -> None:
        """Check the homomorphism property act(gh) = act(g) o act(h) on sampled pairs."""
        if self.act(self.group.identity) != tuple(range(self.n_points)):
            raise StructureError("identity element does not act as the identity permutation")
        pool = self.group.enumerate_prefix(prefix)
        rng = np.random.default_rng(seed)
        for _ in range(pairs):
            g = pool[int(rng.integers(len(pool)))]
            h = pool[int(rng.integers(len(pool)))]
            gh = self.group.multiply(g, h)
            if self.act(gh) != _compose(self.act(g), self.act(h)):
                raise StructureError(f"action is not a homomorphism at g={g!r}, h={h!r}")

    def observable(self, values, p: float) -> Observable:
        v = np.asarray(values, dtype=float)
        if v.size != self.n_points:
            raise StructureError(f"observable has {v.size} values for {self.n_points} points")
        return Observable(v, p)


def koopman_apply(system: FiniteMeasureSystem, g, f: Observable) -> Observable:
    """pi(g) f = f o g^{-1}, i.e. (pi(g) f)(s) = f(g^{-1} . s)."""
    if len(f) != system.n_points:
        raise StructureError(f"observable length {len(f)} does not match {system.n_points} points")
    to = system.act_array(g)
    out = np.empty_like(f.values)
    out[to] = f.values  # out[g.s] = f(s)
    return Observable(out, f.p)


def lp_norm(system: FiniteMeasureSystem, f: Observable) -> float:
    """(sum_s mu_s |f(s)|^p)^(1/p)."""
    if len(f) != system.n_points:
        raise StructureError(f"observable length {len(f)} does not match {system.n_points} points")
    return float(np.sum(system._weights_float * np.abs(f.values) ** f.p) ** (1.0 / f.p))


def _z_interval_average_values(system: FiniteMeasureSystem, radius: int, values: np.ndarray) -> np.ndarray:
    """Average of s -> f(k . s) over k in [-radius, radius] by residue counting.

    Never iterates the interval: within each cycle of the generator the count
    of k hitting a given residue class is floor(L/len) plus at most one, so the
    cost is O(points * max cycle length) whatever the radius.
    """
    perm = system.generators["t"]
    n = system.n_points
    big_l = 2 * radius + 1
    out = np.zeros(n)
    seen = [False] * n
    fl = float(big_l)
    for start in range(n):
        if seen[start]:
            continue
        cycle = [start]
        seen[start] = True
        nxt = perm[start]
        while nxt != start:
            seen[nxt] = True
            cycle.append(nxt)
            nxt = perm[nxt]
        ln = len(cycle)
        base, rem = divmod(big_l, ln)
        # count of k in [-radius, radius] with k = j (mod ln)
        counts = [base + (1 if (j + radius) % ln < rem else 0) for j in range(ln)]
        fvals = [values[c] for c in cycle]
        for i in range(ln):
            acc = 0.0
            for t in range(ln):
                acc += counts[(t - i) % ln] * fvals[t]
            out[cycle[i]] = acc / fl
    return out


def ergodic_average(system: FiniteMeasureSystem, family: FolnerFamily, n: int, f: Observable) -> Observable:
    """A_n f = (1/|F_n|) sum_{g in F_n} pi(g^{-1}) f; a contraction in every L^p.

    Since (pi(g^{-1}) f)(s) = f(g . s), the sum pulls values forward along the
    action.  Summation order is ascending in canonical form, so results are
    reproducible across runs.
    """
    if len(f) != system.n_points:
        raise StructureError(f"observable length {len(f)} does not match {system.n_points} points")
    family._check_index(n)
    radius = family.box_radius(n)
    if radius is not None and isinstance(system.group, IntegerGroup):
        return Observable(_z_interval_average_values(system, radius, f.values), f.p)
    elems = sorted(family.elements(n), key=lambda g: g if isinstance(g, tuple) else (g,))
    acc = np.zeros(system.n_points)
    for g in elems:
        acc += f.values[system.act_array(g)]
    return Observable(acc / len(elems), f.p)


def average_sequence(
    system: FiniteMeasureSystem, family: FolnerFamily, f: Observable, window: int
) -> List[Observable]:
    """[A_1 f, ..., A_window f]."""
    if not 1 <= window <= family.n_max:
        raise StructureError(f"window must be in [1, {family.n_max}], got {window}")
    return [ergodic_average(system, family, n, f) for n in range(1, window + 1)]


def average_operator(system: FiniteMeasureSystem, family: FolnerFamily, n: int) -> np.ndarray:
    """The matrix of A_n acting on observables: (A_n f) = M @ f."""
    family._check_index(n)
    m = system.n_points
    radius = family.box_radius(n)
    if radius is not None and isinstance(system.group, IntegerGroup):
        cols = np.empty((m, m))
        eye = np.eye(m)
        for j in range(m):
            cols[:, j] = _z_interval_average_values(system, radius, eye[:, j])
        return cols
    mat = np.zeros((m, m))
    rows = np.arange(m)
    for g in family.elements(n):
        np.add.at(mat, (rows, system.act_array(g)), 1.0)
    return mat / family.card(n)


def average_defect(
    system: FiniteMeasureSystem, family: FolnerFamily, N: int, K: int, f: Observable
) -> float:
    """||A_K f - A_K A_N f||_p.

    Whenever K >= beta(N, eta) from a certified modulus table, this is below
    eta * ||f||_p (discrete sharpening of the averaging lemma).
    """
    a_n_f = ergodic_average(system, family, N, f)
    a_k_f = ergodic_average(system, family, K, f)
    a_k_a_n_f = ergodic_average(system, family, K, a_n_f)
    return lp_norm(system, Observable(a_k_f.values - a_k_a_n_f.values, f.p))


def weighted_mean(system: FiniteMeasureSystem, f: Observable) -> float:
    """The mean-projection value sum mu f / mu(S); the norm limit target for ergodic systems."""
    w = system._weights_float
    return float(np.dot(w, f.values) / w.sum())


# ---------------------------------------------------------------------------
# Shipped example systems
# ---------------------------------------------------------------------------


def _uniform_weights(m: int) -> List[Fraction]:
    return [Fraction(1, m)] * m


def rotation_system(modulus: int, weights: Optional[Sequence] = None) -> FiniteMeasureSystem:
    """Z acting on Z/modulus by s -> s + 1."""
    perm = [(s + 1) % modulus for s in range(modulus)]
    w = list(weights) if weights is not None else _uniform_weights(modulus)
    return FiniteMeasureSystem(IntegerGroup(), w, {"t": perm})


def torus_translation_system(width: int, height: int, weights: Optional[Sequence] = None) -> FiniteMeasureSystem:
    """Z^2 acting on (Z/width) x (Z/height) by coordinate shifts; points row-major."""
    m = width * height
    t1 = [((i // height + 1) % width) * height + (i % height) for i in range(m)]
    t2 = [(i // height) * height + ((i % height) + 1) % height for i in range(m)]
    w = list(weights) if weights is not None else _uniform_weights(m)
    return FiniteMeasureSystem(LatticeGroup(2), w, {"t1": t1, "t2": t2})


def heisenberg_torus_system(width: int, height: int, weights: Optional[Sequence] = None) -> FiniteMeasureSystem:
    """H3(Z) acting through its abelianization on a 2-torus; the center acts trivially."""
    m = width * height
    x = [((i // height + 1) % width) * height + (i % height) for i in range(m)]
    y = [(i // height) * height + ((i % height) + 1) % height for i in range(m)]
    z = list(range(m))
    w = list(weights) if weights is not None else _uniform_weights(m)
    return FiniteMeasureSystem(HeisenbergGroup(), w, {"x": x, "y": y, "z": z})
