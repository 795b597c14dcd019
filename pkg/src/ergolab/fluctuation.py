"""Counting eps-fluctuations and verifying the uniform fluctuation bounds.

A chain n_1 < ... < n_k is admissible when consecutive values are at least
eps apart and, in at-distance mode, n_{i+1} >= beta(n_i).  The maximum
admissible chain is found by longest-path dynamic programming over the
induced DAG; the fluctuation count is the number of separated consecutive
pairs, i.e. chain length minus one.  Reports carry the chain itself, so both
counting conventions (jumps = count, indices = count + 1) are visible.

Bounds take the convexity modulus u as input.  Integer floors are taken with
a 1e-12 tie guard: a value within the guard below an integer snaps up, which
keeps the closed-form examples stable under double-precision evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

import numpy as np

from .convexity import ConvexityModulus
from .dynamics import FiniteMeasureSystem, Observable, average_sequence, lp_norm
from .errors import DomainError, NotFastError, StructureError, UncertifiedModulusError
from .folner import (
    FolnerFamily,
    ModulusTable,
    build_modulus_table,
    check_fast,
    envelope,
)

FLOOR_GUARD = 1e-12
_EPS_DOWN = 1 - Fraction(1, 10**12)  # nudges float tolerances down before exact-rational use


def guarded_floor(value: float) -> int:
    """floor with ties within FLOOR_GUARD below an integer snapped up."""
    return int(math.floor(value + FLOOR_GUARD))


@dataclass
class FluctuationReport:
    """Outcome of a fluctuation count, optionally compared against a bound."""

    epsilon: float
    mode: str  # "plain" | "at-distance"
    chain: List[int]  # 1-based indices of a maximum admissible chain
    count: int  # len(chain) - 1
    eta: Optional[float] = None
    bound: Optional[int] = None
    verdict: Optional[bool] = None
    branch: Optional[str] = None  # "norm<=1" | "norm>1" | "zero"
    beta_used: Optional[List[int]] = None
    certified_window: Optional[int] = None
    norm_x: Optional[float] = None
    lam: Optional[int] = None

    @property
    def chain_length(self) -> int:
        return self.count + 1

    def to_jsonable(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "eta": self.eta,
            "branch": self.branch,
            "mode": self.mode,
            "bound": self.bound,
            "count": self.count,
            "chain": list(self.chain),
            "chain_length": self.chain_length,
            "beta_used": list(self.beta_used) if self.beta_used is not None else None,
            "certified_window": self.certified_window,
            "verdict": self.verdict,
            "norm_x": self.norm_x,
            "lambda": self.lam,
        }


def _distance_matrix(distances, length: Optional[int]) -> np.ndarray:
    if callable(distances):
        if length is None:
            raise StructureError("length is required when distances is a callable")
        mat = np.zeros((length, length))
        for i in range(1, length + 1):
            for j in range(i + 1, length + 1):
                mat[i - 1, j - 1] = mat[j - 1, i - 1] = float(distances(i, j))
    else:
        mat = np.asarray(distances, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise StructureError(f"distance table must be square, got shape {mat.shape}")
        if length is not None and length != mat.shape[0]:
            raise StructureError(f"length {length} does not match table of size {mat.shape[0]}")
    if not np.all(np.isfinite(mat)):
        raise StructureError("distances must be finite")
    return mat


def _beta_values(beta, length: int) -> Optional[List[int]]:
    if beta is None:
        return None
    if callable(beta):
        vals = [int(beta(n)) for n in range(1, length + 1)]
    else:
        vals = [int(v) for v in beta]
        if len(vals) != length:
            raise StructureError(f"beta needs one value per index, got {len(vals)} for length {length}")
    for n, v in enumerate(vals, start=1):
        if v <= n:
            raise DomainError(f"beta(n) > n is required, got beta({n}) = {v}")
    return vals


def max_chain(
    distances,
    eps: float,
    beta=None,
    length: Optional[int] = None,
) -> FluctuationReport:
    """Maximum admissible chain over indices 1..L via longest-path DP.

    distances: square table or callable d(i, j) on 1-based indices.
    beta: optional at-distance map (callable or per-index sequence) with
    beta(n) > n; edges then additionally require m >= beta(n).
    """
    eps = float(eps)
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    mat = _distance_matrix(distances, length)
    L = mat.shape[0]
    if L < 1:
        raise StructureError("need at least one index")
    beta_vals = _beta_values(beta, L)

    best = [1] * L
    pred = [-1] * L
    for i in range(L):
        for j in range(i):
            if mat[j, i] < eps:
                continue
            if beta_vals is not None and (i + 1) < beta_vals[j]:
                continue
            if best[j] + 1 > best[i]:
                best[i] = best[j] + 1
                pred[i] = j
    end = int(np.argmax(best))  # first maximum: deterministic chain choice
    chain = []
    at = end
    while at != -1:
        chain.append(at + 1)
        at = pred[at]
    chain.reverse()
    return FluctuationReport(
        epsilon=eps,
        mode="plain" if beta_vals is None else "at-distance",
        chain=chain,
        count=len(chain) - 1,
        beta_used=beta_vals,
    )


def theorem_bound(
    modulus: ConvexityModulus,
    norm_x: float,
    eps: float,
    eta: float,
    lower: Optional[float] = None,
) -> int:
    """The uniform at-distance fluctuation bound, resolved across all four branches.

    norm <= 1: floor((norm - L) / (u(eps)/2 - eta))         [L = 0 without a lower bound]
    norm >  1: floor((1 - L/norm) / (u(eps/norm)/2 - eta))
    requires eta in (0, u(eps)/2) resp. (0, u(eps/norm)/2).
    """
    norm_x = float(norm_x)
    if norm_x < 0:
        raise DomainError(f"norm must be nonnegative, got {norm_x}")
    if norm_x <= 1:
        u_eff = modulus(eps)
        what = "u(eps)/2"
        num = norm_x
    else:
        u_eff = modulus(eps / norm_x)
        what = "u(eps/norm)/2"
        num = 1.0
    if not 0 < eta < 0.5 * u_eff:
        raise DomainError(
            f"eta violates its precondition 0 < eta < {what}: eta={eta}, {what}={0.5 * u_eff}"
        )
    if lower is not None:
        lower = float(lower)
        if not 0 <= lower <= norm_x:
            raise DomainError(f"lower bound must lie in [0, norm]=[0, {norm_x}], got {lower}")
        num -= lower if norm_x <= 1 else lower / norm_x
    return guarded_floor(num / (0.5 * u_eff - eta))


def corollary_bound(
    modulus: ConvexityModulus,
    norm_x: float,
    eps: float,
    eta: float,
    lam: int,
    lower: Optional[float] = None,
) -> int:
    """lam * theorem_bound + lam: the plain-count bound on (lam, .)-fast families."""
    if not (isinstance(lam, int) and lam >= 1):
        raise DomainError(f"lambda must be an integer >= 1, got {lam!r}")
    return lam * theorem_bound(modulus, norm_x, eps, eta, lower=lower) + lam


def default_eta(modulus: ConvexityModulus, norm_x: float, eps: float) -> float:
    """eta = u(branch eps)/4, safely inside the strict precondition."""
    norm_x = float(norm_x)
    u_eff = modulus(eps) if norm_x <= 1 else modulus(eps / norm_x)
    return 0.25 * u_eff


def _branch_quantities(modulus: ConvexityModulus, norm: float, eps: float, eta: Optional[float]):
    branch = "norm<=1" if norm <= 1 else "norm>1"
    u_eff = modulus(eps) if norm <= 1 else modulus(eps / norm)
    if eta is None:
        eta = 0.25 * u_eff
    if not 0 < eta < 0.5 * u_eff:
        what = "u(eps)/2" if norm <= 1 else "u(eps/norm)/2"
        raise DomainError(
            f"eta violates its precondition 0 < eta < {what}: eta={eta}, {what}={0.5 * u_eff}"
        )
    eps_beta_float = eta / (3 * norm) if norm <= 1 else eta / 3
    eps_beta = Fraction(eps_beta_float) * _EPS_DOWN
    return branch, eta, eps_beta


def _zero_report(eps: float, mode: str, window: int) -> FluctuationReport:
    return FluctuationReport(
        epsilon=float(eps),
        mode=mode,
        chain=[1] if window >= 1 else [],
        count=0,
        bound=0,
        verdict=True,
        branch="zero",
        certified_window=window,
        norm_x=0.0,
    )


def _pairwise_norms(system: FiniteMeasureSystem, avgs: List[Observable]) -> np.ndarray:
    L = len(avgs)
    mat = np.zeros((L, L))
    for i in range(L):
        for j in range(i + 1, L):
            diff = Observable(avgs[i].values - avgs[j].values, avgs[i].p)
            mat[i, j] = mat[j, i] = lp_norm(system, diff)
    return mat


def verify_main_theorem(
    system: FiniteMeasureSystem,
    family: FolnerFamily,
    modulus_table: Optional[ModulusTable],
    convexity_modulus: ConvexityModulus,
    f: Observable,
    eps: float,
    eta: Optional[float] = None,
    window: Optional[int] = None,
    lower: Optional[float] = None,
) -> FluctuationReport:
    """Count at-distance eps-fluctuations of (A_n f) and compare to the uniform bound.

    The at-distance map is the nondecreasing envelope of the convergence
    modulus at the branch tolerance (eta / 3||f|| for ||f|| <= 1, else eta/3),
    clamped to at least n + 1.  With modulus_table None, a table is built and
    certified internally; a supplied table must cover the window at a
    tolerance at most the branch tolerance, otherwise the run is refused.
    """
    window = min(family.n_max, 200) if window is None else window
    if not 1 <= window <= family.n_max:
        raise DomainError(f"window must be in [1, {family.n_max}], got {window}")
    norm = lp_norm(system, f)
    if norm == 0.0:
        return _zero_report(eps, "at-distance", window)
    branch, eta, eps_beta = _branch_quantities(convexity_modulus, norm, eps, eta)

    if modulus_table is None:
        modulus_table = build_modulus_table(
            family, range(1, window + 1), [eps_beta], m_max=min(window, family.n_max)
        )
        used_eps = eps_beta
    else:
        usable = [
            e for e in modulus_table.epsilons() if e <= eps_beta and modulus_table.covers(window, e)
        ]
        if not usable:
            raise UncertifiedModulusError(
                f"modulus table does not certify the window [1, {window}] at any tolerance <= {eps_beta} "
                f"(have {modulus_table.epsilons()}, certified_up_to={modulus_table.certified_up_to})"
            )
        used_eps = max(usable)
    sub = ModulusTable(
        modulus_table.group_name,
        modulus_table.provenance,
        [e for (n, ep), e in modulus_table.entries.items() if ep == used_eps and n <= window],
    )
    env = envelope(sub)
    beta_vals = [max(env.value(n, used_eps), n + 1) for n in range(1, window + 1)]

    avgs = average_sequence(system, family, f, window)
    rep = max_chain(_pairwise_norms(system, avgs), eps, beta=beta_vals)
    rep.eta = eta
    rep.branch = branch
    rep.bound = theorem_bound(convexity_modulus, norm, eps, eta, lower=lower)
    rep.verdict = rep.count <= rep.bound
    rep.certified_window = window
    rep.norm_x = norm
    return rep


def verify_corollary(
    system: FiniteMeasureSystem,
    fast_family: FolnerFamily,
    lam: int,
    convexity_modulus: ConvexityModulus,
    f: Observable,
    eps: float,
    eta: Optional[float] = None,
    window: Optional[int] = None,
    lower: Optional[float] = None,
) -> FluctuationReport:
    """Count plain eps-fluctuations on a (lam, .)-fast family against lam*floor(...) + lam.

    Refuses to run unless the family passes check_fast at the branch tolerance
    over the window.
    """
    window = min(fast_family.n_max, 200) if window is None else window
    if not 1 <= window <= fast_family.n_max:
        raise DomainError(f"window must be in [1, {fast_family.n_max}], got {window}")
    norm = lp_norm(system, f)
    if norm == 0.0:
        return _zero_report(eps, "plain", window)
    branch, eta, eps_fast = _branch_quantities(convexity_modulus, norm, eps, eta)

    fast_rep = check_fast(fast_family, lam, eps_fast, window)
    if not fast_rep.ok:
        raise NotFastError(
            f"family is not ({lam}, {eps_fast})-fast over [1, {window}]: "
            f"violation {fast_rep.violation}"
        )

    avgs = average_sequence(system, fast_family, f, window)
    rep = max_chain(_pairwise_norms(system, avgs), eps)
    rep.eta = eta
    rep.branch = branch
    rep.lam = lam
    rep.bound = corollary_bound(convexity_modulus, norm, eps, eta, lam, lower=lower)
    rep.verdict = rep.count <= rep.bound
    rep.certified_window = window
    rep.norm_x = norm
    return rep
