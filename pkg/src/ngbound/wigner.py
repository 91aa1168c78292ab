"""Wigner functions of truncated Fock states, Gaussian references and grid quadrature.

Normalization: ``iint W dx dp = 1`` and ``Tr(rho sigma) = 2 pi iint W_rho W_sigma dx dp``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import optimize

from .exceptions import GridUnderresolvedError, InvalidInputError, UnsupportedRangeError
from .fock import FockDensityMatrix

log = logging.getLogger(__name__)

EPS_W = 1e-9
MAX_LEVEL = 200
# the normalized recurrence starts from e^{-r^2}; past this radius that factor
# underflows, which is harmless for levels <= MAX_LEVEL (W is below 1e-50 there)
UNDERFLOW_RADIUS = 26.0

__all__ = [
    "CartesianGrid",
    "PolarGrid",
    "WignerGrid",
    "EPS_W",
    "wigner_eval",
    "wigner_on_grid",
    "thermal_wigner",
    "gaussian_wigner",
    "overlap_quadrature",
    "min_wigner",
    "auto_grid",
]


@dataclass(frozen=True)
class CartesianGrid:
    x_min: float = -6.0
    x_max: float = 6.0
    p_min: float = -6.0
    p_max: float = 6.0
    steps: int = 201

    kind = "cartesian"

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linspace(self.x_min, self.x_max, self.steps), np.linspace(self.p_min, self.p_max, self.steps)

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        xs, ps = self.axes()
        return np.meshgrid(xs, ps, indexing="ij")

    def weights(self) -> np.ndarray:
        """Trapezoid weights for ``iint f dx dp``."""
        xs, ps = self.axes()
        wx = np.full(xs.size, xs[1] - xs[0])
        wx[[0, -1]] *= 0.5
        wp = np.full(ps.size, ps[1] - ps[0])
        wp[[0, -1]] *= 0.5
        return np.outer(wx, wp)

    def refined(self, factor: int = 2) -> "CartesianGrid":
        return CartesianGrid(self.x_min, self.x_max, self.p_min, self.p_max, factor * (self.steps - 1) + 1)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "x_min": self.x_min, "x_max": self.x_max,
                "p_min": self.p_min, "p_max": self.p_max, "steps": self.steps}


@dataclass(frozen=True)
class PolarGrid:
    r_max: float = 6.0
    r_steps: int = 400
    phi_steps: int = 64

    kind = "polar"

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        rs = np.linspace(0.0, self.r_max, self.r_steps)
        phis = 2 * np.pi * np.arange(self.phi_steps) / self.phi_steps
        return rs, phis

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        rs, phis = self.axes()
        r, phi = np.meshgrid(rs, phis, indexing="ij")
        return r * np.cos(phi), r * np.sin(phi)

    def weights(self) -> np.ndarray:
        """Trapezoid in r (with the Jacobian r), periodic rectangle rule in phi.

        The origin node gets the Euler-Maclaurin end correction ``h^2/12``:
        ``d(r f)/dr = f(0)`` there, so plain trapezoid would be only O(h^2).
        """
        rs, _ = self.axes()
        h = rs[1] - rs[0]
        wr = np.full(rs.size, h) * rs
        wr[-1] *= 0.5
        wr[0] = h * h / 12
        return np.outer(wr, np.full(self.phi_steps, 2 * np.pi / self.phi_steps))

    def refined(self, factor: int = 2) -> "PolarGrid":
        return PolarGrid(self.r_max, factor * (self.r_steps - 1) + 1, factor * self.phi_steps)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "r_max": self.r_max, "r_steps": self.r_steps, "phi_steps": self.phi_steps}


@dataclass(frozen=True, eq=False)
class WignerGrid:
    spec: CartesianGrid | PolarGrid
    values: np.ndarray
    min_value: float = field(init=False)
    min_location: tuple[float, float] = field(init=False)

    def __post_init__(self):
        idx = np.unravel_index(np.argmin(self.values), self.values.shape)
        x, p = self.spec.points()
        object.__setattr__(self, "min_value", float(self.values[idx]))
        object.__setattr__(self, "min_location", (float(x[idx]), float(p[idx])))

    def integral(self) -> float:
        return float(np.sum(self.spec.weights() * self.values))

    def to_csv(self) -> str:
        x, p = self.spec.points()
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["x", "p", "W"])
        for row in zip(x.ravel(), p.ravel(), self.values.ravel()):
            w.writerow([f"{v:.12g}" for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        x, p = self.spec.points()
        return json.dumps({
            "grid": self.spec.to_dict(),
            "min_value": self.min_value,
            "min_location": list(self.min_location),
            "x": x.ravel().tolist(),
            "p": p.ravel().tolist(),
            "W": self.values.ravel().tolist(),
        })


def _check_range(dim: int, r_max: float) -> None:
    if dim - 1 > MAX_LEVEL:
        raise UnsupportedRangeError(f"Fock levels above {MAX_LEVEL} are not supported (dim={dim})")
    if r_max > UNDERFLOW_RADIUS:
        log.debug("grid reaches r=%.3g; W is flushed to zero beyond r=%g", r_max, UNDERFLOW_RADIUS)


def _trim(rho: FockDensityMatrix) -> np.ndarray:
    """Drop empty trailing levels so padded states cost nothing extra."""
    m = rho.elements
    nz = np.nonzero(np.any(np.abs(m) > 0, axis=0) | np.any(np.abs(m) > 0, axis=1))[0]
    top = int(nz[-1]) if nz.size else 0
    return m[: top + 1, : top + 1]


def wigner_eval(rho: FockDensityMatrix | np.ndarray, x, p) -> np.ndarray:
    """Evaluate ``W(x, p)`` for a Fock-basis density matrix.

    Uses the normalized Laguerre functions
    ``e^{-r^2} (sqrt2 z)^k sqrt(m!/(m+k)!) L_m^k(2 r^2)``, ``z = x + i p``,
    generated by a three-term recurrence in ``m`` for each off-diagonal
    order ``k``; no factorials or bare powers are formed.
    """
    m_arr = _trim(rho) if isinstance(rho, FockDensityMatrix) else np.asarray(rho, dtype=complex)
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    x, p = np.broadcast_arrays(x, p)
    dim = m_arr.shape[0]
    r2 = x * x + p * p
    _check_range(dim, float(np.sqrt(r2.max())) if r2.size else 0.0)
    t = 2.0 * r2
    z = (x + 1j * p) * np.sqrt(2.0)
    out = np.zeros(x.shape, dtype=float)
    s = np.exp(-r2).astype(complex)  # s_k = e^{-r^2} (sqrt2 z)^k / sqrt(k!)
    for k in range(dim):
        if k > 0:
            s = s * z / np.sqrt(k)
        diag = np.diagonal(m_arr, k)  # rho_{m, m+k}
        if not np.any(diag):
            continue
        acc = np.zeros(x.shape, dtype=complex)
        prev = np.zeros(x.shape, dtype=complex)
        cur = s.copy()
        sign = 1.0
        for m in range(dim - k):
            if diag[m] != 0:
                acc += sign * diag[m] * cur
            nxt = ((2 * m + 1 + k - t) * cur - np.sqrt(m * (m + k)) * prev) / np.sqrt((m + 1) * (m + 1 + k))
            prev, cur = cur, nxt
            sign = -sign
        out += acc.real if k == 0 else 2.0 * acc.real
    return out / np.pi


def wigner_on_grid(rho: FockDensityMatrix, spec: CartesianGrid | PolarGrid | None = None) -> WignerGrid:
    spec = spec if spec is not None else auto_grid(rho)
    x, p = spec.points()
    return WignerGrid(spec, wigner_eval(rho, x, p))


def thermal_wigner(mu_g: float, r) -> np.ndarray:
    if not 0 < mu_g <= 1:
        raise InvalidInputError(f"mu_g must lie in (0, 1], got {mu_g}")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise InvalidInputError("radius must be non-negative")
    return mu_g / np.pi * np.exp(-r * r * mu_g)


def gaussian_wigner(d, gamma, x, p) -> np.ndarray:
    """Normalized 2-D Gaussian with mean ``d`` and covariance ``gamma / 2``."""
    d = np.asarray(d, dtype=float)
    v = np.asarray(gamma, dtype=float) / 2.0
    det = float(np.linalg.det(v))
    if not det > 0:
        raise InvalidInputError("covariance matrix must be positive definite")
    inv = np.linalg.inv(v)
    dx = np.asarray(x, dtype=float) - d[0]
    dp = np.asarray(p, dtype=float) - d[1]
    quad = inv[0, 0] * dx * dx + 2 * inv[0, 1] * dx * dp + inv[1, 1] * dp * dp
    return np.exp(-0.5 * quad) / (2 * np.pi * math.sqrt(det))


def overlap_quadrature(values_a, values_b, spec: CartesianGrid | PolarGrid) -> float:
    """``2 pi iint W_a W_b`` on a shared grid."""
    a = np.asarray(values_a, dtype=float)
    b = np.asarray(values_b, dtype=float)
    w = spec.weights()
    if a.shape != w.shape or b.shape != w.shape:
        raise InvalidInputError(f"grid mismatch: {a.shape}, {b.shape} vs grid {w.shape}")
    return float(2 * np.pi * np.sum(w * a * b))


def auto_grid(rho: FockDensityMatrix, step: float = 0.06, margin: float = 6.0,
              center: Iterable[float] = (0.0, 0.0)) -> CartesianGrid:
    """Square Cartesian grid wide enough for the occupied Fock levels.

    The default ``[-6, 6]^2`` at 201 points is used whenever it suffices;
    larger states get a proportionally wider box at the same spacing.
    """
    top = rho.top_level(tol=0.0) if isinstance(rho, FockDensityMatrix) else int(rho)
    half = max(6.0, math.sqrt(2 * top + 1) + margin)
    cx, cp = center
    steps = int(math.ceil(2 * half / step)) + 1
    steps += (steps + 1) % 2  # odd, so the centre is a node
    return CartesianGrid(cx - half, cx + half, cp - half, cp + half, steps)


def min_wigner(rho: FockDensityMatrix, spec: CartesianGrid | PolarGrid | None = None,
               n_starts: int = 4) -> tuple[float, tuple[float, float]]:
    """Grid minimum of W followed by a local Nelder-Mead refinement.

    Refinement starts from the ``n_starts`` lowest grid nodes; the best
    refined value is returned with its location. A state counts as
    Wigner-nonnegative when the returned value is ``>= -EPS_W``.
    """
    spec = spec if spec is not None else auto_grid(rho, step=0.1)
    x, p = spec.points()
    vals = wigner_eval(rho, x, p)
    flat = np.argsort(vals.ravel())[:n_starts]
    best_val = float(vals.ravel()[flat[0]])
    best_loc = (float(x.ravel()[flat[0]]), float(p.ravel()[flat[0]]))
    m_arr = _trim(rho)

    def f(v):
        return float(wigner_eval(m_arr, v[0], v[1]))

    box = [(float(x.min()), float(x.max())), (float(p.min()), float(p.max()))]
    for i in flat:
        start = np.array([x.ravel()[i], p.ravel()[i]])
        res = optimize.minimize(f, start, method="Nelder-Mead", bounds=box,
                                options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 2000})
        if res.fun < best_val:
            best_val, best_loc = float(res.fun), (float(res.x[0]), float(res.x[1]))
    return best_val, best_loc


def normalization_error(rho: FockDensityMatrix, spec: CartesianGrid | PolarGrid) -> float:
    grid = wigner_on_grid(rho, spec)
    return abs(grid.integral() - 1.0)


def check_resolution(rho: FockDensityMatrix, spec: CartesianGrid | PolarGrid, tol: float = 1e-7) -> None:
    err = normalization_error(rho, spec)
    if err > tol:
        raise GridUnderresolvedError(f"Wigner normalization off by {err:.2e} on {spec}")
