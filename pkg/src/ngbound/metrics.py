"""Coordinates of the parameter space: reference purity, Gaussian overlap and non-Gaussianity."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import wigner
from .exceptions import GridUnderresolvedError, InvalidInputError
from .fock import DEFAULT_TAIL_TOL, FockDensityMatrix, covariance, moments, purity

SYMMETRY_TOL = 1e-9

__all__ = [
    "StateSummary",
    "reference_purity",
    "thermal_weights",
    "thermal_overlap",
    "gaussian_overlap_numeric",
    "non_gaussianity",
    "hilbert_schmidt_non_gaussianity",
    "summarize",
]


@dataclass(frozen=True, eq=False)
class StateSummary:
    mu: float
    mu_g: float
    overlap: float
    delta: float
    d: np.ndarray
    gamma: np.ndarray
    symmetric: bool
    method: str  # "thermal" | "quadrature"

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "mu_g": self.mu_g,
            "overlap": self.overlap,
            "delta": self.delta,
            "gamma": np.asarray(self.gamma).tolist(),
            "d": np.asarray(self.d).tolist(),
            "method": self.method,
        }


def reference_purity(gamma) -> float:
    """``1 / sqrt(det gamma)``; values above 1 signal an unphysical covariance."""
    g = np.asarray(gamma, dtype=float)
    det = g[0, 0] * g[1, 1] - abs(g[0, 1]) ** 2
    if not det > 0:
        raise InvalidInputError(f"covariance determinant must be positive, got {det}")
    return 1.0 / math.sqrt(det)


def thermal_weights(mu_g: float, n) -> np.ndarray:
    """Fock populations ``2 mu_g (1-mu_g)^n / (1+mu_g)^(n+1)`` of the thermal state."""
    n = np.asarray(n, dtype=float)
    return 2 * mu_g / (1 + mu_g) * ((1 - mu_g) / (1 + mu_g)) ** n


def thermal_overlap(weights, mu_g: float) -> float:
    """``Tr(rho rho_G)`` for a phase-symmetric state with populations ``weights``."""
    if not 0 < mu_g <= 1:
        raise InvalidInputError(f"mu_g must lie in (0, 1], got {mu_g}")
    w = np.asarray(weights, dtype=float)
    return float(np.dot(w, thermal_weights(mu_g, np.arange(w.size))))


def gaussian_overlap_numeric(rho: FockDensityMatrix, spec=None, tail_tol: float = DEFAULT_TAIL_TOL,
                             resolution_tol: float = 1e-7) -> float:
    """``Tr(rho rho_G)`` by phase-space quadrature against the reference Gaussian.

    The reference Gaussian shares the mean and covariance of ``rho``; no
    symmetry is assumed. Raises ``GridUnderresolvedError`` when the grid fails
    to integrate ``W`` to one within ``resolution_tol``.
    """
    mo = moments(rho, tail_tol)
    gamma = covariance(rho, tail_tol)
    if spec is None:
        spec = wigner.auto_grid(rho, center=mo.mean)
    x, p = spec.points()
    w_rho = wigner.wigner_eval(rho, x, p)
    weights = spec.weights()
    norm_err = abs(float(np.sum(weights * w_rho)) - 1.0)
    if norm_err > resolution_tol:
        raise GridUnderresolvedError(f"Wigner normalization error {norm_err:.2e} exceeds {resolution_tol:g}")
    w_g = wigner.gaussian_wigner(mo.mean, gamma, x, p)
    return wigner.overlap_quadrature(w_rho, w_g, spec)


def non_gaussianity(mu: float, mu_g: float, overlap: float) -> float:
    """Normalized Hilbert-Schmidt distance ``(mu_G + mu - 2 T) / (2 mu)``."""
    return (mu_g + mu - 2 * overlap) / (2 * mu)


def hilbert_schmidt_non_gaussianity(rho: FockDensityMatrix, mu_g: float | None = None) -> float:
    """``Tr((rho - rho_G)^2) / (2 mu)`` with ``rho_G`` built as a Fock-basis thermal matrix.

    Only meaningful for symmetric-class states (zero mean, isotropic covariance).
    The thermal matrix is carried on a basis large enough for its tail.
    """
    if mu_g is None:
        mu_g = reference_purity(covariance(rho))
    q = (1 - mu_g) / (1 + mu_g)
    dim = rho.dim
    if q > 0:
        dim = max(dim, int(math.ceil(math.log(1e-17) / math.log(q))) + 1)
    diff = np.zeros((dim, dim), dtype=complex)
    diff[: rho.dim, : rho.dim] = rho.elements
    diff -= np.diag(thermal_weights(mu_g, np.arange(dim)))
    mu = purity(rho)
    return float(np.sum(np.abs(diff) ** 2)) / (2 * mu)


def summarize(rho: FockDensityMatrix, spec=None, tail_tol: float = DEFAULT_TAIL_TOL,
              force_quadrature: bool = False) -> StateSummary:
    """All coordinates of ``rho``; closed-form overlap for symmetric states, quadrature otherwise."""
    mo = moments(rho, tail_tol)
    gamma = covariance(rho, tail_tol)
    mu = purity(rho)
    mu_g = reference_purity(gamma)
    symmetric = bool(
        np.all(np.abs(mo.mean) < SYMMETRY_TOL)
        and abs(gamma[0, 0] - gamma[1, 1]) < SYMMETRY_TOL
        and abs(gamma[0, 1]) < SYMMETRY_TOL
    )
    if symmetric and not force_quadrature:
        overlap = thermal_overlap(rho.diagonal, mu_g)
        method = "thermal"
    else:
        overlap = gaussian_overlap_numeric(rho, spec, tail_tol)
        method = "quadrature"
    return StateSummary(
        mu=mu,
        mu_g=mu_g,
        overlap=overlap,
        delta=non_gaussianity(mu, mu_g, overlap),
        d=mo.mean,
        gamma=gamma,
        symmetric=symmetric,
        method=method,
    )
