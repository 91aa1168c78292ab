"""Maximum-purity sheet and the stitched bound surface.

Families realizing the minimum overlap at high purity:

* ``psi_a`` / ``psi_b``: gap-3 superpositions ``|k> + |k+3>`` (``k = n`` or ``k = n-2``
  inside the segment bridging ``|n>`` and ``|n+1>``);
* ``beta``: neighbouring-level superpositions on ``{0,1}`` or ``{1,2}``;
* ``rho_1`` / ``rho_2``: a gap-3 superposition mixed with ``|n+i>``;
* ``rho_3``: two neighbouring levels with a coherence ``b``.

The gap-3 families have a thermal reference; ``beta`` and ``rho_3`` are displaced.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import _parallel
from .exceptions import InconsistencyError, InvalidInputError
from .fock import FockDensityMatrix, from_diagonal, from_matrix, from_pure
from .metrics import thermal_weights
from .region1 import (BoundPoint, rank2_point, region1_overlap, region1_state,
                      purity_bound_curve, purity_bound_parameter)

log = logging.getLogger(__name__)

PURE_TOL = 1e-12
TIE_TOL = 1e-14

__all__ = [
    "ExtremalStateDescriptor",
    "BoundSurface",
    "quartic_root",
    "gap3_overlap_a",
    "gap3_overlap_b",
    "pure_min_overlap",
    "beta_family",
    "beta_alpha",
    "mixed_family_i",
    "assy_family",
    "bound_overlap",
    "total_bound",
    "describe",
]


@dataclass(frozen=True)
class ExtremalStateDescriptor:
    """A minimizer family member: tag, integer indices and continuous parameters."""

    family: str
    indices: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def symmetric(self) -> bool:
        return self.family not in ("beta", "rho_3")

    def state(self) -> FockDensityMatrix:
        f, ix, pr = self.family, self.indices, self.params
        if f in ("psi_a", "psi_b"):
            return _gap3_state(ix["k"], pr["alpha"])
        if f == "beta":
            return beta_family(ix["n"], pr["alpha"])[2]
        if f in ("rho_1", "rho_2"):
            return mixed_family_i(ix["n"], ix["i"], pr["p"], pr["alpha"])[3]
        if f == "rho_3":
            return assy_family(ix["n"], pr["a"], math.sqrt(max(pr["b2"], 0.0)))[3]
        if f == "rank2":
            w = np.zeros(ix["n"] + 2)
            w[ix["n"]], w[ix["n"] + 1] = pr["a"], 1 - pr["a"]
            return from_diagonal(w)
        if f in ("region1_exact", "region1_approx"):
            return region1_state(pr["mu_g"], pr["x2"], ix["n_min"])
        if f == "appendixA":
            from .region1 import purity_bound_state
            return from_diagonal(purity_bound_state(pr["y"]))
        raise InvalidInputError(f"unknown family {f!r}")

    def to_dict(self) -> dict:
        return {"family": self.family, "indices": dict(self.indices), "params": dict(self.params)}


# -- pure states ---------------------------------------------------------------------------

def _quartic(x: float, n: int) -> float:
    return x ** 4 - 2 * (1 + n) * x ** 3 - 4 * x * x - 6 * (1 + n) * x + 3


def quartic_root(n: int, tol: float = 1e-13) -> float:
    """Root of the switching quartic in the bracket ``[1/(2n+3), 1/(2n+1)]``, by bisection."""
    if n < 0:
        raise InvalidInputError("n must be non-negative")
    lo, hi = 1.0 / (2 * n + 3), 1.0 / (2 * n + 1)
    flo, fhi = _quartic(lo, n), _quartic(hi, n)
    if flo * fhi > 0:
        raise InconsistencyError(f"no sign change of the quartic on [{lo}, {hi}] for n={n}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = _quartic(mid, n)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gap3_overlap_a(mu_g: float, n: int) -> float:
    """Overlap of ``|n> + |n+3>`` at reference purity ``mu_g``."""
    q = (1 - mu_g) / (1 + mu_g)
    return ((7 * mu_g + 2 * n * mu_g - 1) * q ** n + (1 - mu_g - 2 * n * mu_g) * q ** (n + 3)) / (3 * (1 + mu_g))


def gap3_overlap_b(mu_g: float, n: int) -> float:
    """Overlap of ``|n-2> + |n+1>`` at reference purity ``mu_g`` (``n >= 2``)."""
    q = (1 - mu_g) / (1 + mu_g)
    return ((1 + 3 * mu_g - 2 * n * mu_g) * q ** (n + 1) + (-1 + 3 * mu_g + 2 * n * mu_g) * q ** (n - 2)) / (3 * (1 + mu_g))


def _gap3_alpha(mu_g: float, k: int) -> float:
    """Population of ``|k>`` in ``|k> + |k+3>`` fixed by the energy constraint."""
    return ((2 * k + 7) - 1.0 / mu_g) / 6


def _gap3_state(k: int, alpha: float) -> FockDensityMatrix:
    amp = np.zeros(k + 4)
    amp[k], amp[k + 3] = math.sqrt(max(alpha, 0.0)), math.sqrt(max(1 - alpha, 0.0))
    return from_pure(amp)


def _segment(mu_g: float) -> int:
    return max(int(math.floor((1.0 / mu_g - 1) / 2 + 1e-12)), 0)


def beta_family(n: int, alpha: float) -> tuple[float, float, FockDensityMatrix]:
    """``(mu_G, T, state)`` for ``sqrt(alpha)|n> + sqrt(1-alpha)|n+1>``, ``n`` in {0, 1}."""
    if n not in (0, 1):
        raise InvalidInputError("beta family is defined for n = 0, 1")
    if not 0 <= alpha <= 1:
        raise InvalidInputError(f"alpha must lie in [0, 1], got {alpha}")
    a = alpha
    if n == 0:
        mu_g = 1.0 / math.sqrt((3 - 2 * a) * (3 - 2 * a - 4 * a * (1 - a)))
        T = -math.exp((a - 1) * a / (2 * a * a - 3 * a + 2)) * (
            -2 * a ** 5 + 8 * a ** 4 - 12 * a ** 3 + 5 * a * a + 4 * a - 4
        ) / ((2 - a) ** 1.5 * (2 * a * a - 3 * a + 2) ** 2.5)
    else:
        mu_g = 1.0 / math.sqrt((5 - 2 * a) * (5 - 2 * a - 8 * a * (1 - a)))
        poly = (64 * a ** 10 - 560 * a ** 9 + 2156 * a ** 8 - 4668 * a ** 7 + 6004 * a ** 6
                - 4211 * a ** 5 + 494 * a ** 4 + 1938 * a ** 3 - 1908 * a * a + 837 * a - 162)
        T = -2 * math.exp(2 * (a - 1) * a / (4 * a * a - 5 * a + 3)) * poly / (
            (3 - a) ** 2.5 * (4 * a * a - 5 * a + 3) ** 4.5)
    amp = np.zeros(n + 2)
    amp[n], amp[n + 1] = math.sqrt(a), math.sqrt(1 - a)
    return mu_g, T, from_pure(amp)


def beta_alpha(n: int, mu_g: float) -> list[float]:
    """All ``alpha`` in [0, 1] at which the ``beta`` family reaches ``mu_g``."""
    s = 1.0 / (mu_g * mu_g)
    if n == 0:
        # (1 + 2u)(1 - 2u + 4u^2) = 1 + 8u^3 with u = 1 - alpha
        u3 = (s - 1) / 8
        if u3 < 0:
            return []
        a = 1 - u3 ** (1 / 3)
        return [min(max(a, 0.0), 1.0)] if -1e-12 <= a <= 1 + 1e-12 else []
    roots = np.roots([-16.0, 60.0, -60.0, 25.0 - s])
    out = []
    for rt in roots:
        if abs(rt.imag) < 1e-9 and -1e-12 <= rt.real <= 1 + 1e-12:
            a = min(max(float(rt.real), 0.0), 1.0)
            # polish on the real cubic
            for _ in range(3):
                f = -16 * a ** 3 + 60 * a * a - 60 * a + 25 - s
                d = -48 * a * a + 120 * a - 60
                if d == 0:
                    break
                a = min(max(a - f / d, 0.0), 1.0)
            out.append(a)
    return sorted(set(out))


def pure_min_overlap(mu_g: float) -> tuple[float, ExtremalStateDescriptor]:
    """Minimum overlap over pure states at reference purity ``mu_g``.

    Inside the segment bridging ``|n>`` and ``|n+1>`` the candidates are all
    gap-3 superpositions reaching ``mu_g`` plus, for the first two segments,
    the neighbouring-level superpositions. The smallest value wins and its
    family is reported: ``psi_a`` for the chord starting at ``n``,
    ``psi_b`` for the one starting at ``n-2``.
    """
    if not 0 < mu_g <= 1:
        raise InvalidInputError(f"mu_g must lie in (0, 1], got {mu_g}")
    if mu_g == 1:
        return 1.0, ExtremalStateDescriptor("psi_a", {"k": 0, "n": 0}, {"alpha": 1.0})
    n = _segment(mu_g)
    s = 1.0 / mu_g
    level = (s - 1) / 2
    if abs(level - round(level)) < 1e-12:
        # a number state: both chords ending on it tie, report the state itself
        m = int(round(level))
        T = float(thermal_weights(mu_g, np.array([m]))[0])
        return T, ExtremalStateDescriptor("psi_a", {"k": m, "n": m}, {"alpha": 1.0})
    best = (math.inf, None)
    k_lo = max(int(math.ceil((s - 7) / 2 - 1e-12)), 0)
    k_hi = int(math.floor((s - 1) / 2 + 1e-12))
    for k in range(k_lo, k_hi + 1):
        alpha = min(max(_gap3_alpha(mu_g, k), 0.0), 1.0)
        T = gap3_overlap_a(mu_g, k)
        if T < best[0]:
            fam = "psi_b" if k <= n - 2 else "psi_a"
            best = (T, ExtremalStateDescriptor(fam, {"k": k, "n": n}, {"alpha": alpha}))
    for m in (0, 1):
        for a in beta_alpha(m, mu_g):
            T = beta_family(m, a)[1]
            if T < best[0]:
                best = (T, ExtremalStateDescriptor("beta", {"n": m}, {"alpha": a}))
    return best


# -- mixed families -----------------------------------------------------------------------

def mixed_family_i(n: int, i: int, p: float, alpha: float):
    """``p |psi><psi| + (1-p)|n+i><n+i|`` with ``psi = sqrt(alpha)|n> + sqrt(1-alpha)|n+3>``.

    Returns ``(mu, mu_G, T, state)``; the reference Gaussian is thermal.
    """
    if i not in (1, 2) or n < 0:
        raise InvalidInputError("need n >= 0 and i in {1, 2}")
    if not (0 <= p <= 1 and 0 <= alpha <= 1):
        raise InvalidInputError("p and alpha must lie in [0, 1]")
    amp = np.zeros(n + 4)
    amp[n], amp[n + 3] = math.sqrt(alpha), math.sqrt(1 - alpha)
    m = p * np.outer(amp, amp).astype(complex)
    m[n + i, n + i] += 1 - p
    diag = np.real(np.diag(m))
    mu = p * p + (1 - p) ** 2
    mu_g = 1.0 / float(np.dot(diag, 2 * np.arange(n + 4) + 1))
    T = float(np.dot(diag, thermal_weights(mu_g, np.arange(n + 4))))
    return mu, mu_g, T, from_matrix(m)


def _assy_closed(n: int, a: float, b2: float) -> tuple[float, float, float]:
    mu = a * a + (1 - a) ** 2 + 2 * b2
    mu_g = 1.0 / math.sqrt((2 * a - 2 * n - 3) * (2 * a + 4 * b2 * (n + 1) - 2 * n - 3))
    if n == 0:
        T = math.exp(b2 / (a + 2 * b2 - 2)) * (2 * (a - 1) * b2 * b2 + 2 * (a - 2) * a * b2 + (a - 2) ** 2) / (
            (2 - a) ** 1.5 * (2 - a - 2 * b2) ** 2.5)
    else:
        poly = (16 * (4 * a * a - 15 * a + 15) * b2 ** 4 + 8 * (8 * a ** 3 - 45 * a * a + 70 * a - 21) * b2 ** 3
                + 2 * (a - 3) ** 2 * (10 * a * a - 9 * a - 25) * b2 * b2
                + 2 * (a - 3) ** 3 * (a * a + 3 * a - 10) * b2 + (a - 3) ** 4 * (a - 2))
        T = -2 * math.exp(2 * b2 / (a + 4 * b2 - 3)) * poly / ((3 - a) ** 2.5 * (3 - a - 4 * b2) ** 4.5)
    return mu, mu_g, T


def assy_family(n: int, a: float, b: complex):
    """``a|n><n| + (1-a)|n+1><n+1| + b|n><n+1| + h.c.`` for ``n`` in {0, 1}.

    Returns ``(mu, mu_G, T, state)`` from the closed forms; only ``|b|`` enters.
    """
    if n not in (0, 1):
        raise InvalidInputError("rho_3 family is defined for n = 0, 1")
    if not 0 <= a <= 1:
        raise InvalidInputError(f"a must lie in [0, 1], got {a}")
    b2 = abs(b) ** 2
    if b2 > a * (1 - a) + 1e-12:
        raise InvalidInputError(f"|b|^2 = {b2} exceeds a(1-a) = {a * (1 - a)}: not positive semidefinite")
    b2 = min(b2, a * (1 - a))
    mu, mu_g, T = _assy_closed(n, a, b2)
    m = np.zeros((n + 2, n + 2), dtype=complex)
    m[n, n], m[n + 1, n + 1] = a, 1 - a
    m[n, n + 1], m[n + 1, n] = b, np.conj(b)
    return mu, mu_g, T, from_matrix(m)


# -- inversion at fixed (mu_G, mu) ------------------------------------------------------------

def _mixed_candidates(mu_g: float, mu: float):
    """Members of ``rho_1`` / ``rho_2`` through ``(mu_g, mu)``."""
    disc = 2 * mu - 1
    if disc < -1e-14:
        return
    root = math.sqrt(max(disc, 0.0))
    s = 1.0 / mu_g
    for p in sorted({(1 + root) / 2, (1 - root) / 2}):
        if p <= 0:
            continue
        n_hi = int(math.floor(s / 2)) + 1
        for i in (1, 2):
            for n in range(0, n_hi + 1):
                alpha = (p * (2 * n + 7) + (1 - p) * (2 * n + 2 * i + 1) - s) / (6 * p)
                if -1e-12 <= alpha <= 1 + 1e-12:
                    alpha = min(max(alpha, 0.0), 1.0)
                    q = (1 - mu_g) / (1 + mu_g)
                    c = 2 * mu_g / (1 + mu_g)
                    T = c * (p * alpha * q ** n + p * (1 - alpha) * q ** (n + 3) + (1 - p) * q ** (n + i))
                    yield T, ExtremalStateDescriptor(f"rho_{i}", {"n": n, "i": i}, {"p": p, "alpha": alpha})


def _assy_candidates(mu_g: float, mu: float):
    """Members of ``rho_3`` through ``(mu_g, mu)``: a cubic in ``a`` once ``|b|^2`` is eliminated."""
    s2 = 1.0 / (mu_g * mu_g)
    for n in (0, 1):
        c = 2 * n + 3
        k = 2 * (n + 1)
        # |b|^2 = (mu - a^2 - (1-a)^2) / 2 = (mu - 1)/2 + a - a^2
        # (c - 2a) * (c - 2a - 4(n+1)|b|^2) = s2
        # second factor: c - 2a - k(mu - 1) - 2k a + 2k a^2
        e0 = c - k * (mu - 1)
        e1 = -2 - 2 * k
        e2 = 2 * k
        # (c - 2a)(e0 + e1 a + e2 a^2) - s2
        coeffs = [-2 * e2, c * e2 - 2 * e1, c * e1 - 2 * e0, c * e0 - s2]
        for rt in np.roots(coeffs):
            if abs(rt.imag) > 1e-9:
                continue
            a = float(rt.real)
            if not -1e-12 <= a <= 1 + 1e-12:
                continue
            a = min(max(a, 0.0), 1.0)
            b2 = (mu - 1) / 2 + a - a * a
            if b2 < -1e-12 or b2 > a * (1 - a) + 1e-12:
                continue
            b2 = min(max(b2, 0.0), a * (1 - a))
            try:
                T = _assy_closed(n, a, b2)[2]
            except (ValueError, ZeroDivisionError):
                continue
            yield T, ExtremalStateDescriptor("rho_3", {"n": n}, {"a": a, "b2": b2})


def bound_overlap(mu_g: float, mu: float, region1: bool = True) -> tuple[float, BoundPoint] | None:
    """Minimum overlap over all bound families at ``(mu_g, mu)``.

    Returns ``(T, point)`` or ``None`` for cells no family reaches (below the
    purity bound or outside ``(0, 1]``).
    """
    if not (0 < mu_g <= 1 and 0 < mu <= 1 + 1e-12):
        return None
    mu = min(mu, 1.0)
    if mu_g == 1:
        if mu < 1 - PURE_TOL:
            return None
        return 1.0, BoundPoint.make(1.0, 1.0, 1.0, "II", "psi_a", 1, k=0, alpha=1.0)
    best = None
    if region1:
        r1 = region1_overlap(mu_g, mu)
        if r1 is not None:
            T, x2, k = r1
            top = rank2_point(mu_g)
            if abs(mu - top.mu) < 1e-9 and abs(T - top.overlap) < 1e-9:
                best = (T, BoundPoint.make(mu_g, mu, T, "I", "rank2", top.rank, **top.params))
            else:
                rank = int(math.floor(x2)) - k
                best = (T, BoundPoint.make(mu_g, mu, T, "I", "region1_exact", rank, x2=x2, n_min=k))
    cands = []
    if mu >= 1 - PURE_TOL:
        T, d = pure_min_overlap(mu_g)
        cands.append((T, d, 1))
    cands += [(T, d, 2) for T, d in _mixed_candidates(mu_g, mu)]
    cands += [(T, d, 2) for T, d in _assy_candidates(mu_g, mu)]
    for T, d, rank in cands:
        # ties (number states sit on several families) keep the earlier, simpler label
        if best is None or T < best[0] - TIE_TOL:
            rank = 1 if mu >= 1 - PURE_TOL else rank
            best = (T, BoundPoint.make(mu_g, mu, T, "II", d.family, rank, **d.indices, **d.params))
    return best


def describe(point: BoundPoint) -> ExtremalStateDescriptor:
    """Rebuild the state descriptor behind a bound point."""
    pr = dict(point.params)
    ints = {k: int(pr.pop(k)) for k in ("n", "i", "k", "n_min") if k in pr}
    if point.family in ("region1_exact", "region1_approx"):
        pr["mu_g"] = point.mu_g
    return ExtremalStateDescriptor(point.family, ints, pr)


# -- surface -------------------------------------------------------------------------------

@dataclass
class BoundSurface:
    points: list[BoundPoint]
    skipped: list[tuple[float, float, str]] = field(default_factory=list)
    boundary: list[BoundPoint] = field(default_factory=list)

    PARAM_COLS = ("n", "i", "k", "n_min", "x2", "p", "alpha", "a", "b2")

    def counts(self) -> dict:
        reg = {"I": 0, "II": 0}
        for p in self.points:
            reg[p.region] += 1
        return {"cells": len(self.points) + len(self.skipped), "points": len(self.points),
                "skipped": len(self.skipped), "region_I": reg["I"], "region_II": reg["II"]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["mu_g", "mu", "overlap", "delta", "region", "family", "rank", *self.PARAM_COLS])
        for p in self.points:
            wr.writerow([repr(p.mu_g), repr(p.mu), repr(p.overlap), repr(p.delta), p.region, p.family, p.rank]
                        + [p.params.get(k, "") for k in self.PARAM_COLS])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "points": [p.to_dict() for p in self.points],
            "skipped": [{"mu_g": a, "mu": b, "reason": c} for a, b, c in self.skipped],
            "boundary": [p.to_dict() for p in self.boundary],
        }

    def lookup(self, mu_g: float, mu: float) -> BoundPoint | None:
        """The stored point nearest to ``(mu_g, mu)``."""
        if not self.points:
            return None
        arr = np.array([(p.mu_g, p.mu) for p in self.points])
        i = int(np.argmin(np.hypot(arr[:, 0] - mu_g, arr[:, 1] - mu)))
        return self.points[i]


def _cell(args):
    mu_g, mu = args
    res = bound_overlap(mu_g, mu)
    if res is not None:
        return res[1]
    try:
        floor = purity_bound_curve(purity_bound_parameter(mu_g))[1]
    except Exception:
        floor = math.nan
    reason = "below purity bound" if mu < floor else "unreachable"
    return (mu_g, mu, reason)


def total_bound(mu_g_values: Iterable[float], mu_values: Iterable[float], workers: int | None = None) -> BoundSurface:
    """Evaluate the bound on the product grid; unreachable cells are listed in ``skipped``."""
    mgs = [float(v) for v in mu_g_values]
    mus = [float(v) for v in mu_values]
    cells = [(a, b) for a in mgs for b in mus]
    results = _parallel.pmap(_cell, cells, workers)
    surf = BoundSurface([])
    for res in results:
        if isinstance(res, BoundPoint):
            surf.points.append(res)
        else:
            surf.skipped.append(res)
    for a in mgs:
        if 0 < a <= 1:
            surf.boundary.append(rank2_point(a))
    return surf
