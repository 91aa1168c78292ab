"""Minimum-purity sheet: Fock-diagonal extremal states with linear-plus-exponential weights.

At fixed reference purity ``mu_G`` the extremal weights are
``f(n) = A1 + A2 n + A3 g(n)`` on ``n_min <= n <= floor(x2)``, where
``g(n) = mu_G q^n / (1 + mu_G)`` and ``q = (1 - mu_G)/(1 + mu_G)``. The
continuous root ``x2`` of ``f`` parametrizes the curve; ``n_min`` is fixed by
sign conditions on ``f``.

Along the curve at fixed ``mu_G``, ``T`` grows with ``x2`` while ``mu`` falls
from the rank-2 value to the purity-bound minimum at ``x2 = y`` (where
``A3 = 0``) and then rises back to ``mu_G``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize

from .exceptions import DegenerateParametersError, InfeasibleRegionError, InvalidInputError
from .fock import FockDensityMatrix, from_diagonal
from .metrics import non_gaussianity, thermal_overlap

log = logging.getLogger(__name__)

DET_TOL = 1e-13
WEIGHT_TOL = 1e-12
# keeps bisection away from the integer points where the support changes
_EDGE = 1e-12
# on the two-level plateau the coefficients blow up as x2 -> n_min + 1
PLATEAU_COND = 1e4

__all__ = [
    "BoundPoint",
    "Region1Solution",
    "purity_bound_curve",
    "purity_bound_state",
    "purity_bound_approx",
    "purity_bound_parameter",
    "region1_exact",
    "region1_approx",
    "region1_state",
    "rank2_boundary",
    "rank2_point",
    "select_n_min",
    "region1_sweep",
    "region1_curve",
    "region1_overlap",
    "region1_min_purity",
    "points_to_csv",
    "points_to_json",
]

FAMILIES = ("appendixA", "region1_exact", "region1_approx", "rank2",
            "psi_a", "psi_b", "beta", "rho_1", "rho_2", "rho_3")


@dataclass(frozen=True)
class BoundPoint:
    mu_g: float
    mu: float
    overlap: float
    delta: float
    region: str  # "I" | "II"
    family: str
    rank: int
    params: dict = field(default_factory=dict)

    @classmethod
    def make(cls, mu_g, mu, overlap, region, family, rank, **params) -> "BoundPoint":
        return cls(float(mu_g), float(mu), float(overlap), non_gaussianity(mu, mu_g, overlap),
                   region, family, int(rank), params)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class Region1Solution:
    mu_g: float
    x2: float
    n_min: int
    coefficients: tuple[float, float, float]
    overlap: float
    mu: float
    weights: np.ndarray  # populations of levels n_min..n_max

    @property
    def n_max(self) -> int:
        return int(math.floor(self.x2))

    @property
    def rank(self) -> int:
        # the classification label used for the figure columns, not the matrix rank
        return self.n_max - self.n_min

    @property
    def delta(self) -> float:
        return non_gaussianity(self.mu, self.mu_g, self.overlap)

    def full_weights(self) -> np.ndarray:
        return np.concatenate([np.zeros(self.n_min), self.weights])

    def point(self, family: str = "region1_exact") -> BoundPoint:
        return BoundPoint.make(self.mu_g, self.mu, self.overlap, "I", family, self.rank,
                               x2=self.x2, n_min=self.n_min)


# -- purity-bounded curve -------------------------------------------------------------

def purity_bound_curve(y: float) -> tuple[float, float]:
    """Parametric purity-bounded relation, returns ``(mu_G, mu)`` for ``y >= 1``."""
    if not y >= 1:
        raise InvalidInputError(f"y must be >= 1, got {y}")
    n = math.floor(y)
    mu_g = 3 * (n - 2 * y) / (n * (5 + 4 * n) - 6 * (1 + n) * y)
    mu = 2 * (n + 2 * n * n - 6 * n * y + 6 * y * y) / (3 * (1 + n) * (n - 2 * y) ** 2)
    return mu_g, mu


def purity_bound_state(y: float) -> np.ndarray:
    """Linear weights ``P_n`` proportional to ``y - n`` on ``0..floor(y)`` (the ``A3 = 0`` state)."""
    if not y >= 1:
        raise InvalidInputError(f"y must be >= 1, got {y}")
    n = np.arange(math.floor(y) + 1)
    w = y - n
    return w / w.sum()


def purity_bound_parameter(mu_g: float) -> float:
    """Inverse of ``purity_bound_curve`` in its first output: the ``y`` reaching ``mu_g``."""
    if not 0 < mu_g <= 1:
        raise InvalidInputError(f"mu_g must lie in (0, 1], got {mu_g}")
    if mu_g == 1:
        return 1.0
    hi = 2.0 / mu_g + 2.0
    return optimize.brentq(lambda y: purity_bound_curve(y)[0] - mu_g, 1.0, hi, xtol=1e-14, rtol=1e-15)


def purity_bound_approx(mu_g: float) -> float:
    """Piecewise closed form of the purity bound; the two pieces meet at ``mu_G = 3/5``."""
    if not 0 < mu_g <= 1:
        raise InvalidInputError(f"mu_g must lie in (0, 1], got {mu_g}")
    if mu_g <= 0.6:
        return 8 * mu_g / (9 - mu_g * mu_g)
    return (1 - 4 * mu_g + 5 * mu_g * mu_g) / (2 * mu_g * mu_g)


# -- exact parametric solution -----------------------------------------------------------

def _check_mu_g(mu_g: float) -> None:
    if not 0 < mu_g < 1:
        raise InvalidInputError(f"mu_g must lie in (0, 1), got {mu_g}")


def _g(n, r: float, q: float):
    return r * q ** n / (r + 1)


def _system(r: float, x: float, nmin: int) -> tuple[list[list[float]], list[float]]:
    """The 3x3 system for ``(A1, A2, A3)``: root at ``x``, normalization, energy."""
    q = (1 - r) / (1 + r)
    N = math.floor(x)
    qa, qb = q ** nmin, q ** (N + 1)
    m = [
        [1.0, x, _g(x, r, q)],
        [N - nmin + 1, ((1 - nmin) * nmin + N * (N + 1)) / 2, (qa - qb) / 2],
        [-nmin * nmin + N * N + 2 * N + 1,
         (-4 * nmin ** 3 + 3 * nmin ** 2 + nmin + N * (4 * N * N + 9 * N + 5)) / 6,
         (qa * (2 * nmin * r + 1) - qb * (2 * (N + 1) * r + 1)) / (2 * r)],
    ]
    return m, [0.0, 1.0, 1.0 / r]


def _det3(m) -> float:
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def _solve3(m, b) -> tuple[float, float, float]:
    det = _det3(m)
    if abs(det) < DET_TOL:
        raise DegenerateParametersError(f"singular system, |det| = {abs(det):.2e}")
    out = []
    for j in range(3):
        mj = [[b[i] if k == j else m[i][k] for k in range(3)] for i in range(3)]
        out.append(_det3(mj) / det)
    return out[0], out[1], out[2]


def _closed_form(r: float, nmin: int, N: int, A1: float, A2: float, A3: float) -> tuple[float, float]:
    """Overlap and purity of the weights ``A1 + A2 n + A3 g(n)`` summed over ``nmin..N``."""
    q = (1 - r) / (1 + r)
    qa, qN = q ** nmin, q ** N
    T = (qa * (2 * A1 * r + 2 * A2 * nmin * r - A2 * r + A2 + A3 * r * r * qa)
         + (1 - r) / (r + 1) ** 2 * qN * (r * (A3 * (r - 1) * r * qN - 2 * A1 * (r + 1))
                                          - A2 * (r + 1) * (2 * N * r + r + 1))) / (2 * r)
    mu = (-(nmin - N - 1) * (6 * A1 * A1 + 6 * A1 * A2 * (nmin + N)
                             + A2 * A2 * (2 * nmin * N + nmin * (2 * nmin - 1) + 2 * N * N + N)) / 6
          + A3 / (4 * r) * qa * (r * (4 * A1 + A3 * r * qa) + A2 * ((4 * nmin - 2) * r + 2))
          - A3 * (r - 1) / (4 * r * (r + 1) ** 2) * qN
          * (r * (A3 * (r - 1) * r * qN - 4 * A1 * (r + 1)) - 2 * A2 * (r + 1) * (2 * N * r + r + 1)))
    return T, mu


def _feasible(r: float, x: float, nmin: int, A: Sequence[float]) -> tuple[bool, np.ndarray]:
    A1, A2, A3 = A
    q = (1 - r) / (1 + r)
    n = np.arange(nmin, math.floor(x) + 1)
    w = A1 + A2 * n + A3 * _g(n, r, q)
    ok = bool(w[0] > 0 and np.all(w >= -WEIGHT_TOL))
    if ok and nmin > 0:
        ok = A1 + A2 * (nmin - 1) + A3 * _g(nmin - 1, r, q) < 0
    return ok, w


def region1_exact(mu_g: float, x2: float, n_min: int = 0, check: bool = True) -> Region1Solution:
    """Solve for ``(A1, A2, A3)`` and evaluate the overlap and purity in closed form.

    For ``n_min + 1 < x2 < n_min + 2`` only two levels carry weight and the
    state is the rank-2 point whatever ``x2`` is; close to ``n_min + 1`` the
    coefficients diverge and the closed forms lose precision, so such inputs
    are rejected as degenerate.

    Raises ``DegenerateParametersError`` for a near-singular system and
    ``InfeasibleRegionError`` when the weights violate the sign conditions
    (pass ``check=False`` to skip that test).
    """
    _check_mu_g(mu_g)
    n_min = int(n_min)
    if n_min < 0:
        raise InvalidInputError("n_min must be non-negative")
    if not x2 > n_min + 1:
        raise InvalidInputError(f"x2 must exceed n_min + 1 = {n_min + 1}, got {x2}")
    m, b = _system(mu_g, x2, n_min)
    A = _solve3(m, b)
    if math.floor(x2) == n_min + 1 and np.linalg.cond(np.array(m)) > PLATEAU_COND:
        raise DegenerateParametersError(
            f"x2={x2} is too close to n_min + 1 on the two-level plateau; use rank2_point")
    ok, w = _feasible(mu_g, x2, n_min, A)
    if check and not ok:
        raise InfeasibleRegionError(f"n_min={n_min} infeasible at mu_g={mu_g}, x2={x2}")
    T, mu = _closed_form(mu_g, n_min, math.floor(x2), *A)
    return Region1Solution(mu_g, float(x2), n_min, A, T, mu, np.clip(w, 0.0, None))


def region1_approx(mu_g: float, x2: float) -> tuple[float, float]:
    """Closed-form ``(mu, T)`` of the ``n_min = 0`` family; exact whenever ``x2`` is an integer."""
    _check_mu_g(mu_g)
    if not x2 >= 2:
        raise InvalidInputError(f"x2 must be >= 2, got {x2}")
    r, x = mu_g, x2
    Y = ((1 - r) / (1 + r)) ** x
    c = (r + 1) * (2 * x * r + r - 3)
    D = Y * ((2 * x * x + 2 * x - 1) * r * r + (4 * x + 2) * r + 3) + c
    P = (-(2 * x + 1) ** 2 * r ** 4 + 4 * (4 * x ** 3 + 6 * x * x - 1) * r ** 3
         + 18 * (2 * x * x + 2 * x + 1) * r * r + 12 * (2 * x + 1) * r - 9)
    mu = r * (8 * (2 * x + 1) * r * Y * c + Y * Y * P + c * c) / (D * D)
    T = -r * (-4 * (2 * x + 1) * r * Y + (r - 1) * Y * Y * (2 * x * r + r + 3) - c) / D
    return mu, T


def select_n_min(mu_g: float, x2: float, hint: int | None = None) -> int:
    """Feasible ``n_min`` for ``(mu_g, x2)``.

    Without a hint the candidates are tried from 0 upwards, so the smallest
    feasible value is returned. With a hint the search fans out from it, which
    is much faster along a curve; the feasible value has been unique
    wherever it was checked.
    """
    _check_mu_g(mu_g)
    top = math.floor(x2)
    if x2 == top:
        top -= 1
    cands = range(0, top)
    if hint is not None:
        h = min(max(int(hint), 0), top - 1)
        cands = sorted(cands, key=lambda k: (abs(k - h), k))
    for k in cands:
        if not x2 > k + 1:
            continue
        try:
            m, b = _system(mu_g, x2, k)
            A = _solve3(m, b)
        except DegenerateParametersError:
            continue
        if _feasible(mu_g, x2, k, A)[0]:
            return k
    raise InfeasibleRegionError(f"no feasible n_min at mu_g={mu_g}, x2={x2}")


def region1_state(mu_g: float, x2: float, n_min: int | None = None, dim: int | None = None) -> FockDensityMatrix:
    """The extremal diagonal state itself."""
    if n_min is None:
        n_min = select_n_min(mu_g, x2)
    sol = region1_exact(mu_g, x2, n_min)
    full = sol.full_weights()
    if dim is not None and dim < full.size:
        raise InvalidInputError(f"dim={dim} cannot hold support up to n={full.size - 1}")
    return from_diagonal(full, dim)


# -- rank-2 boundary ----------------------------------------------------------------------

def rank2_boundary(n: int, a: float) -> BoundPoint:
    """``a|n><n| + (1-a)|n+1><n+1|``, the upper edge of the minimum-purity sheet."""
    if n < 0 or not 0 <= a <= 1:
        raise InvalidInputError("need n >= 0 and a in [0, 1]")
    mu = a * a + (1 - a) ** 2
    mu_g = 1.0 / (2 * n + 3 - 2 * a)
    w = np.zeros(n + 2)
    w[n], w[n + 1] = a, 1 - a
    rank = 1 if a in (0.0, 1.0) else 2
    return BoundPoint.make(mu_g, mu, thermal_overlap(w, mu_g), "I", "rank2", rank, n=n, a=a)


def rank2_point(mu_g: float) -> BoundPoint:
    """The rank-2 state with reference purity ``mu_g``."""
    if not 0 < mu_g <= 1:
        raise InvalidInputError(f"mu_g must lie in (0, 1], got {mu_g}")
    s = 1.0 / mu_g
    n = max(int(math.floor((s - 1) / 2)), 0)
    a = (2 * n + 3 - s) / 2
    if a <= 0:  # exact number-state boundary reached from below
        n, a = n + 1, 1.0
    return rank2_boundary(n, min(a, 1.0))


# -- curves and inversion ---------------------------------------------------------------

def _curve_eval(r: float, x: float, hint: int | None) -> tuple[float, float, int] | None:
    try:
        k = select_n_min(r, x, hint)
        m, b = _system(r, x, k)
        A = _solve3(m, b)
    except (InfeasibleRegionError, DegenerateParametersError):
        return None
    if math.floor(x) == k + 1:
        # two-level plateau: the weights are fixed, the coefficients are not well conditioned
        top = rank2_point(r)
        return top.overlap, top.mu, k
    T, mu = _closed_form(r, k, math.floor(x), *A)
    return T, mu, k


def region1_curve(mu_g: float, x2_values: Iterable[float]) -> list[Region1Solution | None]:
    """Solutions along ``x2`` at fixed ``mu_g`` with automatic ``n_min`` (``None`` where infeasible)."""
    out, hint = [], None
    for x in x2_values:
        try:
            k = select_n_min(mu_g, x, hint)
            sol = region1_exact(mu_g, x, k)
            hint = k
        except (InfeasibleRegionError, DegenerateParametersError):
            sol = None
        out.append(sol)
    return out


def _left_start(r: float) -> float:
    n0 = max(int(math.floor((1.0 / r - 1) / 2)), 0)
    return n0 + 1 + _EDGE


def region1_overlap(mu_g: float, mu: float, tol: float = 1e-13) -> tuple[float, float, int] | None:
    """Smallest overlap on the minimum-purity sheet at ``(mu_g, mu)``.

    Returns ``(T, x2, n_min)`` or ``None`` when no point of the curve at
    ``mu_g`` has purity ``mu``. The decreasing branch (``x2`` up to the
    purity-bound parameter ``y``) is searched first since the overlap grows
    with ``x2``; the increasing branch beyond ``y`` is used otherwise.
    When ``floor(x2) == n_min + 1`` the answer lies on the two-level plateau
    and the state is ``rank2_point(mu_g)``.
    """
    if not 0 < mu_g < 1 or not 0 < mu <= 1:
        return None
    y = purity_bound_parameter(mu_g)
    mu_pb = purity_bound_curve(y)[1]
    if mu < mu_pb - 1e-12:
        return None
    lo = _left_start(mu_g)
    top = rank2_point(mu_g)
    hint = None
    if mu <= top.mu + 1e-12 and y > lo:
        # mu(x2) is non-increasing on [lo, y]; infeasible points only occur near lo
        a, b = lo, y
        best = None
        for _ in range(200):
            mid = 0.5 * (a + b)
            ev = _curve_eval(mu_g, mid, hint)
            if ev is None or ev[1] > mu:
                a = mid
            else:
                b, best = mid, ev
                hint = ev[2]
            if b - a < tol * max(1.0, b):
                break
        if best is None:
            ev = _curve_eval(mu_g, b, None)
            if ev is None:
                return None
            best = ev
        return best[0], b, best[2]
    if mu < mu_g:
        # increasing branch: bracket by doubling
        a, b = max(y, lo), max(y, lo) * 2 + 2
        while True:
            ev = _curve_eval(mu_g, b, None)
            if ev is None or b > 5000:
                return None
            if ev[1] >= mu:
                break
            a, b = b, 2 * b
        hint = ev[2]
        best = ev
        for _ in range(200):
            mid = 0.5 * (a + b)
            ev = _curve_eval(mu_g, mid, hint)
            if ev is None:
                return None
            if ev[1] < mu:
                a = mid
            else:
                b, best, hint = mid, ev, ev[2]
            if b - a < tol * max(1.0, b):
                break
        return best[0], b, best[2]
    return None


def region1_min_purity(mu_g: float, overlap: float, tol: float = 1e-14) -> tuple[float, float, int] | None:
    """Minimum purity of a diagonal state with reference purity ``mu_g`` and overlap ``overlap``.

    Returns ``(mu, x2, n_min)``; ``None`` outside ``[T_rank2, mu_g)``. The
    overlap grows monotonically with ``x2`` so a bisection suffices. As in
    ``region1_overlap``, ``floor(x2) == n_min + 1`` denotes the rank-2 state.
    """
    if not 0 < mu_g < 1:
        return None
    top = rank2_point(mu_g)
    if overlap < top.overlap - 1e-13 or overlap >= mu_g:
        return None
    if overlap <= top.overlap:
        return top.mu, _left_start(mu_g), max(_segment_level(mu_g), 0)
    a = _left_start(mu_g)
    b = max(purity_bound_parameter(mu_g), a) + 1.0
    while True:
        ev = _curve_eval(mu_g, b, None)
        if ev is None or b > 5000:
            return None
        if ev[0] >= overlap:
            break
        a, b = b, 2 * b
    best, hint = ev, ev[2]
    for _ in range(200):
        mid = 0.5 * (a + b)
        ev = _curve_eval(mu_g, mid, hint)
        if ev is None or ev[0] < overlap:
            a = mid
        else:
            b, best, hint = mid, ev, ev[2]
        if b - a < tol * max(1.0, b):
            break
    return best[1], b, best[2]


def _segment_level(mu_g: float) -> int:
    return int(math.floor((1.0 / mu_g - 1) / 2))


def region1_sweep(mu_g_values: Iterable[float], x2_values: Iterable[float],
                  n_min: int | None = None) -> list[BoundPoint]:
    """Bound points on a ``(mu_g, x2)`` grid; infeasible cells are skipped and logged."""
    pts = []
    xs = list(x2_values)
    for r in mu_g_values:
        for x in xs:
            try:
                k = select_n_min(r, x) if n_min is None else n_min
                pts.append(region1_exact(r, x, k).point())
            except (InfeasibleRegionError, DegenerateParametersError, InvalidInputError) as exc:
                log.debug("skip mu_g=%g x2=%g: %s", r, x, exc)
    return pts


_CSV_COLS = ("mu_g", "mu", "overlap", "delta", "region", "family", "rank")


def points_to_csv(points: Sequence[BoundPoint], extra: Sequence[str] = ("n_min", "x2")) -> str:
    import csv
    import io

    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(list(_CSV_COLS) + list(extra))
    for p in points:
        row = [repr(p.mu_g), repr(p.mu), repr(p.overlap), repr(p.delta), p.region, p.family, p.rank]
        row += [p.params.get(k, "") for k in extra]
        wr.writerow(row)
    return buf.getvalue()


def points_to_json(points: Sequence[BoundPoint]) -> list[dict]:
    return [p.to_dict() for p in points]
