"""Brute-force checks of the bound: support-enumeration QP, random sampling, positivity scans.

Every routine takes an explicit seed and draws from a Philox counter-based
generator so reports are reproducible across platforms.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np
from scipy import optimize

from . import _parallel, wigner
from .exceptions import InfeasibleRegionError, InvalidInputError
from .fock import (FockDensityMatrix, covariance, from_diagonal, from_matrix, from_pure, moments,
                   phase_average, purity, state_to_json)
from .metrics import reference_purity, summarize, thermal_weights
from .region1 import (BoundPoint, purity_bound_parameter, rank2_point, region1_curve,
                      region1_min_purity)
from .region2 import BoundSurface, bound_overlap, describe

VIOLATION_TOL = 1e-6
_PENALTY = 10.0  # stands in for infeasible points, above any overlap

__all__ = [
    "OracleReport",
    "make_rng",
    "min_purity_qp",
    "qp_grid_check",
    "random_diagonal_state",
    "random_low_rank_state",
    "random_symmetric_state",
    "sample_and_check",
    "pure_min_overlap_search",
    "rank3_spot_check",
    "lemma_check",
    "positivity_scan",
    "positivity_suite",
]


@dataclass
class OracleReport:
    scenario: str
    trials: int
    worst_margin: float
    seed: int | None = None
    violations: int = 0
    offender: dict | None = None
    runtime: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        out = {"scenario": self.scenario, "trials": self.trials, "worst_margin": self.worst_margin,
               "seed": self.seed, "violations": self.violations, "runtime": self.runtime}
        if self.offender is not None:
            out["offender"] = self.offender
        if self.details:
            out["details"] = self.details
        return out


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


# -- minimum-purity QP by support enumeration --------------------------------------------------

@lru_cache(maxsize=8)
def _supports(max_level: int, max_subset: int) -> dict[int, np.ndarray]:
    """Index arrays grouped by support size: all windows plus all small subsets."""
    groups: dict[int, set] = {}
    for i in range(max_level + 1):
        for j in range(i, max_level + 1):
            groups.setdefault(j - i + 1, set()).add(tuple(range(i, j + 1)))
    for k in range(1, max_subset + 1):
        groups.setdefault(k, set()).update(itertools.combinations(range(max_level + 1), k))
    return {k: np.array(sorted(v), dtype=np.int64) for k, v in groups.items()}


class _QPTables:
    """Per ``mu_G`` precomputation: the min-norm solution maps of every support."""

    def __init__(self, mu_g: float, max_level: int, max_subset: int):
        n = np.arange(max_level + 1)
        self.mu_g = mu_g
        self.rows = np.stack([np.ones(n.size), 2 * n + 1.0, thermal_weights(mu_g, n)])
        self.maps = {}
        for k, idx in _supports(max_level, max_subset).items():
            A = self.rows[:, idx].transpose(1, 0, 2)  # (S, 3, k)
            # least-norm map; exact when A has full row rank, else checked by residual
            self.maps[k] = (idx, A, np.linalg.pinv(A))

    def solve(self, T: float, tol: float = 1e-11) -> tuple[float, np.ndarray] | None:
        b = np.array([1.0, 1.0 / self.mu_g, T])
        best = None
        for k, (idx, A, pinv) in self.maps.items():
            p = pinv @ b  # (S, k)
            resid = np.max(np.abs(np.einsum("sik,sk->si", A, p) - b), axis=1)
            ok = (resid < tol * max(1.0, 1.0 / self.mu_g)) & np.all(p >= -1e-12, axis=1)
            if not np.any(ok):
                continue
            mus = np.sum(p * p, axis=1)
            mus[~ok] = np.inf
            j = int(np.argmin(mus))
            if best is None or mus[j] < best[0]:
                w = np.zeros(self.rows.shape[1])
                w[idx[j]] = np.clip(p[j], 0.0, None)
                best = (float(mus[j]), w)
        return best


@lru_cache(maxsize=64)
def _qp_tables(mu_g: float, max_level: int, max_subset: int) -> _QPTables:
    return _QPTables(mu_g, max_level, max_subset)


def _lp_feasible(mu_g: float, T: float, max_level: int) -> bool:
    n = np.arange(max_level + 1)
    A = np.stack([np.ones(n.size), 2 * n + 1.0, thermal_weights(mu_g, n)])
    res = optimize.linprog(np.zeros(n.size), A_eq=A, b_eq=[1.0, 1.0 / mu_g, T], bounds=(0, None), method="highs")
    return res.status == 0


def min_purity_qp(mu_g: float, overlap: float, max_level: int = 40, max_subset: int = 4,
                  return_weights: bool = False):
    """Minimum of ``sum p_n^2`` over populations with given ``mu_G`` and overlap.

    Solves the equality-constrained problem in closed form on every
    candidate support and keeps the best nonnegative solution. Raises
    ``InfeasibleRegionError`` (confirmed by an LP feasibility check) when no
    population vector meets the constraints.
    """
    if not 0 < mu_g <= 1:
        raise InvalidInputError(f"mu_g must lie in (0, 1], got {mu_g}")
    if max_level > 40:
        raise InvalidInputError("max_level is capped at 40")
    best = _qp_tables(float(mu_g), int(max_level), int(max_subset)).solve(float(overlap))
    if best is None:
        lp = _lp_feasible(mu_g, overlap, max_level)
        raise InfeasibleRegionError(
            f"no population vector reaches mu_g={mu_g}, T={overlap} (LP feasible: {lp})")
    return best if return_weights else best[0]


def qp_grid_check(mu_g_steps: int = 20, overlap_steps: int = 20, mu_g_range=(0.12, 0.9),
                  tol: float = 1e-6, max_level: int = 40) -> OracleReport:
    """Compare the QP minimum purity with the Region-I curve on a feasible ``(mu_G, T)`` grid.

    For each ``mu_G`` the overlaps span the open interval between the
    rank-2 point and the curve at ``x2 = min(30, 2y + 3)``.
    """
    t0 = time.perf_counter()
    worst, offender, count, skipped = 0.0, None, 0, 0
    for mg in np.linspace(*mu_g_range, mu_g_steps):
        mg = float(mg)
        lo = rank2_point(mg).overlap
        x_hi = min(30.0, 2 * purity_bound_parameter(mg) + 3)
        hi = region1_curve(mg, [x_hi])[0].overlap
        for T in np.linspace(lo, hi, overlap_steps + 2)[1:-1]:
            ref = region1_min_purity(mg, float(T))
            if ref is None:
                skipped += 1
                continue
            q = min_purity_qp(mg, float(T), max_level=max_level)
            count += 1
            if abs(q - ref[0]) > worst:
                worst = abs(q - ref[0])
                offender = {"mu_g": mg, "overlap": float(T), "qp": q, "region1": ref[0], "x2": ref[1]}
    rep = OracleReport("region1_qp", count, -worst, None, int(worst > tol), runtime=time.perf_counter() - t0,
                       details={"skipped": skipped, "max_abs_diff": worst})
    if worst > tol:
        rep.offender = offender
    return rep


# -- random states --------------------------------------------------------------------------

def random_diagonal_state(rng: np.random.Generator, dim: int) -> FockDensityMatrix:
    """Populations drawn from a mix of flat, peaked and sparse distributions."""
    kind = rng.integers(3)
    if kind == 0:
        w = rng.random(dim)
    elif kind == 1:
        w = rng.random(dim) ** rng.uniform(1, 12)
    else:
        w = np.zeros(dim)
        k = int(rng.integers(1, 5))
        w[rng.choice(dim, k, replace=False)] = rng.random(k)
    if not np.any(w > 0):
        w[0] = 1.0
    return from_diagonal(w)


def random_low_rank_state(rng: np.random.Generator, dim: int, max_rank: int = 4) -> FockDensityMatrix:
    """Mixture of up to ``max_rank`` random complex superpositions on random supports."""
    r = int(rng.integers(1, max_rank + 1))
    ps = rng.dirichlet(np.full(r, rng.uniform(0.2, 2.0)))
    m = np.zeros((dim, dim), dtype=complex)
    for p in ps:
        k = int(rng.integers(1, dim + 1))
        v = np.zeros(dim, dtype=complex)
        idx = rng.choice(dim, k, replace=False)
        v[idx] = rng.normal(size=k) + 1j * rng.normal(size=k)
        v /= np.linalg.norm(v)
        m += p * np.outer(v, v.conj())
    return from_matrix(m, normalize=True)


def random_symmetric_state(rng: np.random.Generator, dim: int, max_rank: int = 4) -> FockDensityMatrix:
    """Mixture of superpositions supported on one residue class mod 3.

    Coherences then only link levels three or more apart, so the state has
    zero mean and an isotropic covariance.
    """
    r = int(rng.integers(1, max_rank + 1))
    ps = rng.dirichlet(np.ones(r))
    m = np.zeros((dim, dim), dtype=complex)
    for p in ps:
        levels = np.arange(int(rng.integers(3)), dim, 3)
        v = rng.normal(size=levels.size) + 1j * rng.normal(size=levels.size)
        v *= rng.random(levels.size) < 0.6
        if not np.any(v):
            v[0] = 1.0
        full = np.zeros(dim, dtype=complex)
        full[levels] = v / np.linalg.norm(v)
        m += p * np.outer(full, full.conj())
    return from_matrix(m, normalize=True)


# -- sampling ---------------------------------------------------------------------------------

def _exact_bound(mu_g: float, mu: float) -> float | None:
    res = bound_overlap(mu_g, mu)
    return None if res is None else res[0]


def _margin(args) -> tuple[float, dict]:
    rho, bound, grid_step = args
    spec = None
    if grid_step is not None:
        spec = wigner.auto_grid(rho, step=grid_step, center=moments(rho).mean)
    s = summarize(rho, spec=spec)
    T = bound(s.mu_g, s.mu)
    if T is None:
        return math.inf, s.to_dict()
    return s.overlap - T, s.to_dict() | {"bound": T}


def sample_and_check(count: int, dim: int, seed: int = 0, kind: str = "diagonal",
                     surface: Callable[[float, float], float | None] | None = None, tol: float = VIOLATION_TOL,
                     workers: int | None = None, grid_step: float | None = None) -> OracleReport:
    """Draw random states and compare each overlap with the bound at its ``(mu_G, mu)``.

    By default the bound is evaluated exactly at every sample rather than
    interpolated from a stored surface; ``surface`` may supply another
    ``(mu_g, mu) -> T`` lookup (it must be picklable for parallel runs).
    ``kind`` is ``"diagonal"``, ``"low_rank"`` or ``"symmetric"``.
    """
    gens = {"diagonal": random_diagonal_state, "low_rank": random_low_rank_state,
            "symmetric": random_symmetric_state}
    if kind not in gens:
        raise InvalidInputError(f"kind must be one of {sorted(gens)}")
    bound = surface if surface is not None else _exact_bound
    t0 = time.perf_counter()
    rng = make_rng(seed)
    states = [gens[kind](rng, dim) for _ in range(count)]
    results = _parallel.pmap(_margin, [(s, bound, grid_step) for s in states], workers, chunksize=16)
    margins = np.array([r[0] for r in results])
    worst = int(np.argmin(margins))
    viol = int(np.sum(margins < -tol))
    rep = OracleReport(f"sample_{kind}", count, float(margins[worst]), seed, viol,
                       runtime=time.perf_counter() - t0,
                       details={"dim": dim, "unreachable": int(np.sum(np.isinf(margins)))})
    if viol:
        rep.offender = {"state": state_to_json(states[worst]), "summary": results[worst][1]}
        rep.details["violating_trials"] = [int(i) for i in np.nonzero(margins < -tol)[0]]
    return rep


# -- pure states ------------------------------------------------------------------------------

def _chord_overlap(mu_g: float, i: int, j: int) -> float:
    """Overlap of the two-term superposition on ``|i>, |j>`` meeting ``mu_g``; inf if impossible."""
    s = 1.0 / mu_g
    alpha = ((2 * j + 1) - s) / (2 * (j - i))
    if not -1e-12 <= alpha <= 1 + 1e-12:
        return math.inf
    alpha = min(max(alpha, 0.0), 1.0)
    t = thermal_weights(mu_g, np.array([i, j]))
    return float(alpha * t[0] + (1 - alpha) * t[1])


def _three_term_min(mu_g: float, levels: tuple[int, int, int], samples: int = 41) -> float:
    """Grid plus bounded refinement over the free amplitude of a three-term superposition."""
    i, j, k = levels
    s = 1.0 / mu_g
    e = np.array([2 * i + 1, 2 * j + 1, 2 * k + 1], dtype=float)
    t = thermal_weights(mu_g, np.array(levels))

    def popul(u):
        # weight u on the middle level, the others fixed by norm and energy
        rest, target = 1 - u, s - u * e[1]
        if rest <= 0:
            return None
        a = (e[2] * rest - target) / (e[2] - e[0])
        c = rest - a
        if a < -1e-12 or c < -1e-12:
            return None
        return np.array([max(a, 0.0), u, max(c, 0.0)])

    def f(u):
        w = popul(u)
        return _PENALTY if w is None else float(w @ t)

    us = np.linspace(0, 1, samples)
    vals = np.array([f(u) for u in us])
    i0 = int(np.argmin(vals))
    if vals[i0] >= _PENALTY:
        return math.inf
    lo, hi = us[max(i0 - 1, 0)], us[min(i0 + 1, samples - 1)]
    res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return float(min(res.fun, vals[i0]))


def _neighbour_overlap(mu_g: float, n: int) -> float:
    """Neighbouring-level superposition through quadrature; inf if ``mu_g`` is out of reach."""
    def state(a):
        amp = np.zeros(n + 2)
        amp[n], amp[n + 1] = math.sqrt(a), math.sqrt(1 - a)
        return from_pure(amp)

    def g(a):
        return reference_purity(covariance(state(a))) - mu_g

    alphas = np.linspace(0, 1, 201)
    vals = np.array([g(a) for a in alphas])
    best = math.inf
    for idx in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]:
        lo, hi = alphas[idx], alphas[idx + 1]
        a = lo if vals[idx] == 0 else (hi if vals[idx + 1] == 0 else optimize.brentq(g, lo, hi, xtol=1e-14))
        best = min(best, summarize(state(a), force_quadrature=True).overlap)
    return best


def pure_min_overlap_search(mu_g: float, max_level: int = 30, min_gap: int = 3, three_term: bool = True,
                            neighbours: bool = True) -> dict:
    """Independent minimum of the pure-state overlap over several candidate classes.

    Two-term superpositions with gap ``>= min_gap`` use the phase-symmetric
    overlap directly; three-term ones add a grid-and-refine search over the
    free amplitude; neighbouring-level superpositions on ``{0,1}`` and
    ``{1,2}`` go through Wigner quadrature. Returns the per-class minima.
    """
    if not 0 < mu_g < 1:
        raise InvalidInputError(f"mu_g must lie in (0, 1), got {mu_g}")
    s = 1.0 / mu_g
    out = {"two_term": math.inf, "two_term_gap4": math.inf, "three_term": math.inf, "neighbour": math.inf}
    for i in range(0, max_level + 1):
        if 2 * i + 1 > s:
            break
        for j in range(i + min_gap, max_level + 1):
            T = _chord_overlap(mu_g, i, j)
            out["two_term"] = min(out["two_term"], T)
            if j - i >= 4:
                out["two_term_gap4"] = min(out["two_term_gap4"], T)
    if three_term:
        top = min(max_level, int(s) + 8)
        for i in range(0, top + 1):
            if 2 * i + 1 > s:
                break
            for j in range(i + min_gap, top + 1):
                for k in range(j + min_gap, top + 1):
                    if 2 * k + 1 < s:
                        continue
                    out["three_term"] = min(out["three_term"], _three_term_min(mu_g, (i, j, k)))
    if neighbours:
        for n in (0, 1):
            out["neighbour"] = min(out["neighbour"], _neighbour_overlap(mu_g, n))
    out["min"] = min(out.values())
    # number states sit exactly on the segment ends
    return out


# -- rank-3 samples -----------------------------------------------------------------------

def rank3_spot_check(n: int = 0, m: int = 5, count: int = 200, seed: int = 0,
                     tol: float = VIOLATION_TOL) -> OracleReport:
    """Mix an extra Fock level ``|m>`` into members of ``rho_1`` / ``rho_2``."""
    t0 = time.perf_counter()
    rng = make_rng(seed)
    worst, worst_state, worst_sum, viol = math.inf, None, None, 0
    for _ in range(count):
        i = int(rng.integers(1, 3))
        p, alpha, eps = rng.random(), rng.random(), rng.uniform(0, 0.5)
        dim = max(n + 4, m + 1)
        amp = np.zeros(dim)
        amp[n], amp[n + 3] = math.sqrt(alpha), math.sqrt(1 - alpha)
        mat = (1 - eps) * (p * np.outer(amp, amp) + (1 - p) * np.eye(dim)[n + i][:, None] * np.eye(dim)[n + i])
        mat[m, m] += eps
        rho = from_matrix(mat.astype(complex), normalize=True)
        s = summarize(rho)
        res = bound_overlap(s.mu_g, s.mu)
        if res is None:
            continue
        mg = s.overlap - res[0]
        viol += mg < -tol
        if mg < worst:
            worst, worst_state, worst_sum = mg, rho, s.to_dict()
    rep = OracleReport("rank3", count, float(worst), seed, int(viol), runtime=time.perf_counter() - t0,
                       details={"n": n, "m": m})
    if viol:
        rep.offender = {"state": state_to_json(worst_state), "summary": worst_sum}
    return rep


# -- phase averaging ----------------------------------------------------------------------

def lemma_check(count: int = 100, dim: int = 24, seed: int = 0, quadrature: bool = True) -> OracleReport:
    """Phase averaging never raises purity and keeps ``mu_G`` and ``T`` on symmetric-class states.

    The overlap of the original state goes through Wigner quadrature when
    ``quadrature`` is set, the averaged one through the thermal closed form.
    """
    t0 = time.perf_counter()
    rng = make_rng(seed)
    worst_mu = -math.inf
    worst_mg = worst_T = 0.0
    for _ in range(count):
        rho = random_symmetric_state(rng, dim)
        avg = phase_average(rho)
        s = summarize(rho, force_quadrature=quadrature)
        sa = summarize(avg)
        worst_mu = max(worst_mu, purity(avg) - purity(rho))
        worst_mg = max(worst_mg, abs(s.mu_g - sa.mu_g))
        worst_T = max(worst_T, abs(s.overlap - sa.overlap))
    viol = int(worst_mu > 1e-12) + int(worst_mg > 1e-9) + int(worst_T > 1e-9)
    return OracleReport("lemma", count, float(-worst_mu), seed, viol, runtime=time.perf_counter() - t0,
                        details={"dim": dim, "purity_increase": worst_mu, "mu_g_drift": worst_mg,
                                 "overlap_drift": worst_T})


# -- Wigner positivity ----------------------------------------------------------------------

def _positivity(args) -> dict:
    point, refine = args
    rho = describe(point).state()
    spec = wigner.auto_grid(rho, step=0.1)
    val, loc = wigner.min_wigner(rho, spec)
    out = point.to_dict() | {"min_wigner": val, "location": list(loc),
                             "positive": bool(val >= -wigner.EPS_W)}
    if refine:
        val2, _ = wigner.min_wigner(rho, spec.refined(2))
        out["min_wigner_refined"] = val2
        out["stable"] = bool((val2 >= -wigner.EPS_W) == out["positive"])
    return out


def positivity_scan(points: BoundSurface | Iterable[BoundPoint], refine: bool = False,
                    workers: int | None = None) -> list[dict]:
    """Annotate bound points with the Wigner minimum of the state realizing them."""
    pts = points.points if isinstance(points, BoundSurface) else list(points)
    return _parallel.pmap(_positivity, [(p, refine) for p in pts], workers, chunksize=4)


def positivity_suite(mu_g_values=(0.1, 0.15, 0.2, 0.3), stretch=(1.0, 1.5, 2.0), levels=range(1, 7),
                     refine: bool = True) -> OracleReport:
    """Low-purity Region-I minimizers must be Wigner-nonnegative, number states negative.

    Region-I points are taken at ``x2 = s * y`` for each stretch ``s``, where
    ``y`` is the purity-bound parameter of ``mu_G`` (kept below level 38 so
    the default grids stay in the stable Laguerre range). A misclassified
    or refinement-unstable entry counts as a violation.
    """
    t0 = time.perf_counter()
    pts = []
    for mg in mu_g_values:
        y = purity_bound_parameter(mg)
        xs = [s * y for s in stretch if s * y < 38]
        pts += [sol.point() for sol in region1_curve(mg, xs) if sol is not None]
    expect = [True] * len(pts)
    for n in levels:
        mg = 1 / (2 * n + 1)
        T = float(thermal_weights(mg, np.array([n]))[0])
        pts.append(BoundPoint.make(mg, 1.0, T, "II", "psi_a", 1, k=n, n=n, alpha=1.0))
        expect.append(False)
    rows = positivity_scan(pts, refine=refine)
    viol, worst, offender = 0, math.inf, None
    for row, pos in zip(rows, expect):
        row["expected_positive"] = pos
        bad = row["positive"] != pos or not row.get("stable", True)
        viol += bad
        if bad and offender is None:
            offender = row
        if pos:
            worst = min(worst, row["min_wigner"])
    one = next((r for r in rows if r["family"] == "psi_a" and r["params"].get("k") == 1), None)
    details = {"rows": rows}
    if one is not None:
        details["fock1_min"] = one["min_wigner"]
        details["fock1_error"] = abs(one["min_wigner"] + 1 / math.pi)
    return OracleReport("positivity", len(rows), float(worst), None, int(viol), offender,
                        time.perf_counter() - t0, details)
