"""Single-mode density matrices in a truncated Fock basis.

Quadrature convention (hbar = 1)::

    x = (a + a^dag) / sqrt(2),    p = (a - a^dag) / (i sqrt(2))

so the vacuum has covariance ``diag(1, 1)`` and a thermal state of mean photon
number ``nbar`` has reference purity ``1 / (2 nbar + 1)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .exceptions import CutoffTooSmallError, InvalidInputError, InvalidStateError

EPS_HERMITIAN = 1e-12
EPS_TRACE = 1e-10
EPS_PSD = 1e-10
DEFAULT_TAIL_TOL = 1e-8
DEFAULT_DIM = 64

__all__ = [
    "FockDensityMatrix",
    "ValidationReport",
    "Moments",
    "from_diagonal",
    "from_pure",
    "from_matrix",
    "thermal_state",
    "validate",
    "purity",
    "moments",
    "covariance",
    "phase_average",
    "state_from_json",
    "state_to_json",
    "load_state",
]


@dataclass(frozen=True, eq=False)
class FockDensityMatrix:
    """Immutable complex density matrix on the basis ``|0>, ..., |dim-1>``.

    ``truncated`` marks states obtained by cutting an infinite Fock series
    (thermal states, for instance); only those are subject to the tail-mass
    convergence check, since finite superpositions are represented exactly.
    """

    elements: np.ndarray
    truncated: bool = False
    _is_diagonal: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        arr = np.array(self.elements, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise InvalidStateError(f"density matrix must be square and non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidStateError("density matrix has non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "elements", arr)
        off = arr - np.diag(np.diag(arr))
        object.__setattr__(self, "_is_diagonal", not np.any(off))

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @property
    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.elements)).copy()

    @property
    def is_diagonal(self) -> bool:
        return self._is_diagonal

    @property
    def tail_mass(self) -> float:
        return float(np.sum(self.diagonal[-2:]))

    def padded(self, dim: int) -> "FockDensityMatrix":
        """Return the same state embedded in a larger basis."""
        if dim < self.dim:
            raise InvalidInputError(f"cannot pad a dim-{self.dim} state down to {dim}")
        out = np.zeros((dim, dim), dtype=complex)
        out[: self.dim, : self.dim] = self.elements
        return FockDensityMatrix(out, truncated=self.truncated)

    def top_level(self, tol: float = 1e-14) -> int:
        """Highest Fock level carrying population above ``tol``."""
        occupied = np.nonzero(self.diagonal > tol)[0]
        return int(occupied[-1]) if occupied.size else 0

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.elements, dtype=dtype)


@dataclass(frozen=True)
class ValidationReport:
    hermiticity_defect: float
    min_eigenvalue: float
    trace_defect: float
    tail_mass: float
    tail_tol: float = DEFAULT_TAIL_TOL

    @property
    def hermitian(self) -> bool:
        return self.hermiticity_defect <= EPS_HERMITIAN

    @property
    def positive(self) -> bool:
        return self.min_eigenvalue >= -EPS_PSD

    @property
    def normalized(self) -> bool:
        return self.trace_defect <= EPS_TRACE

    @property
    def converged(self) -> bool:
        return self.tail_mass < self.tail_tol

    @property
    def ok(self) -> bool:
        return self.hermitian and self.positive and self.normalized

    def failures(self) -> list[str]:
        names = []
        for name in ("hermitian", "positive", "normalized"):
            if not getattr(self, name):
                names.append(name)
        return names


@dataclass(frozen=True, eq=False)
class Moments:
    """First and second quadrature moments of a state."""

    mean: np.ndarray  # (<x>, <p>)
    xx: float
    pp: float
    xp_sym: float  # <xp + px> / 2
    n_mean: float


def from_diagonal(weights: Sequence[float], dim: int | None = None) -> FockDensityMatrix:
    """Mixture of number states with the given (unnormalized) weights."""
    w = np.asarray(weights, dtype=float).ravel()
    if w.size == 0 or not np.all(np.isfinite(w)):
        raise InvalidInputError("weights must be a non-empty finite sequence")
    if np.any(w < -EPS_PSD):
        raise InvalidInputError(f"negative weight {w.min():.3g} below tolerance")
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total <= 0:
        raise InvalidInputError("at least one weight must be positive")
    w = w / total
    if dim is not None:
        if dim < w.size:
            raise InvalidInputError(f"dim={dim} smaller than number of weights {w.size}")
        w = np.pad(w, (0, dim - w.size))
    return FockDensityMatrix(np.diag(w.astype(complex)))


def from_pure(amplitudes: Sequence[complex], dim: int | None = None) -> FockDensityMatrix:
    """Projector onto the normalized superposition ``sum_n psi_n |n>``."""
    psi = np.asarray(amplitudes, dtype=complex).ravel()
    if psi.size == 0 or not np.all(np.isfinite(psi)):
        raise InvalidInputError("amplitudes must be a non-empty finite sequence")
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise InvalidInputError("zero vector is not a state")
    psi = psi / norm
    if dim is not None:
        if dim < psi.size:
            raise InvalidInputError(f"dim={dim} smaller than number of amplitudes {psi.size}")
        psi = np.pad(psi, (0, dim - psi.size))
    return FockDensityMatrix(np.outer(psi, psi.conj()))


def from_matrix(matrix, normalize: bool = False) -> FockDensityMatrix:
    """Wrap an explicit matrix. No positivity check here; use :func:`validate`."""
    arr = np.asarray(matrix, dtype=complex)
    if normalize:
        tr = np.trace(arr).real
        if tr <= 0:
            raise InvalidStateError("matrix has non-positive trace")
        arr = arr / tr
    return FockDensityMatrix(arr)


def thermal_state(mu_g: float, dim: int | None = None, tail_tol: float = 1e-14) -> FockDensityMatrix:
    """Thermal state of reference purity ``mu_g``, truncated and renormalized.

    Without ``dim`` the cutoff is chosen so that the discarded mass is below
    ``tail_tol``.
    """
    if not 0 < mu_g <= 1:
        raise InvalidInputError(f"mu_g must lie in (0, 1], got {mu_g}")
    q = (1 - mu_g) / (1 + mu_g)
    if dim is None:
        dim = 3 if q == 0 else max(3, int(np.ceil(np.log(tail_tol) / np.log(q))) + 2)
    n = np.arange(dim)
    w = 2 * mu_g / (1 + mu_g) * q**n
    out = from_diagonal(w)
    return FockDensityMatrix(out.elements, truncated=True)


def validate(rho: FockDensityMatrix, tail_tol: float = DEFAULT_TAIL_TOL) -> ValidationReport:
    m = rho.elements
    herm = float(np.max(np.abs(m - m.conj().T)))
    sym = (m + m.conj().T) / 2
    min_eig = float(np.linalg.eigvalsh(sym).min())
    trace_defect = float(abs(np.trace(m) - 1))
    tail = float(np.sum(np.real(np.diag(m))[-2:])) if rho.dim > 1 else float(np.real(m[0, 0]))
    return ValidationReport(herm, min_eig, trace_defect, tail, tail_tol)


def purity(rho: FockDensityMatrix) -> float:
    """``Tr(rho^2) = sum_mn |rho_mn|^2`` (assumes Hermitian input)."""
    return float(np.sum(np.abs(rho.elements) ** 2))


def _check_tail(rho: FockDensityMatrix, tail_tol: float) -> None:
    if rho.truncated and rho.tail_mass >= tail_tol:
        raise CutoffTooSmallError(
            f"tail mass {rho.tail_mass:.3g} in the last two levels exceeds {tail_tol:g}; raise the cutoff"
        )


def moments(rho: FockDensityMatrix, tail_tol: float = DEFAULT_TAIL_TOL) -> Moments:
    _check_tail(rho, tail_tol)
    m = rho.elements
    n = np.arange(rho.dim)
    # <a> = sum_n rho_{n+1,n} sqrt(n+1), <a^2> = sum_n rho_{n+2,n} sqrt((n+1)(n+2))
    a1 = np.sum(np.diagonal(m, -1) * np.sqrt(n[1:])) if rho.dim > 1 else 0j
    a2 = np.sum(np.diagonal(m, -2) * np.sqrt(n[1:-1] * n[2:])) if rho.dim > 2 else 0j
    n_mean = float(np.sum(n * np.real(np.diag(m))))
    mean = np.array([np.sqrt(2) * a1.real, np.sqrt(2) * a1.imag])
    xx = n_mean + 0.5 + a2.real
    pp = n_mean + 0.5 - a2.real
    return Moments(mean=mean, xx=float(xx), pp=float(pp), xp_sym=float(a2.imag), n_mean=n_mean)


def covariance(rho: FockDensityMatrix, tail_tol: float = DEFAULT_TAIL_TOL) -> np.ndarray:
    """Covariance matrix in the anticommutator convention (vacuum -> identity)."""
    mo = moments(rho, tail_tol)
    dx, dp = mo.mean
    return 2 * np.array(
        [
            [mo.xx - dx * dx, mo.xp_sym - dx * dp],
            [mo.xp_sym - dx * dp, mo.pp - dp * dp],
        ]
    )


def phase_average(rho: FockDensityMatrix) -> FockDensityMatrix:
    """Average of ``e^{i t n} rho e^{-i t n}`` over ``t``: keeps only the diagonal."""
    return FockDensityMatrix(np.diag(np.diag(rho.elements)), truncated=rho.truncated)


# -- JSON state format -------------------------------------------------------

_STATE_KEYS = ("diagonal", "pure", "matrix")


def _complex_list(items, what: str, ndim: int) -> np.ndarray:
    try:
        arr = np.asarray(items, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidStateError(f"'{what}' entries must be [re, im] pairs") from exc
    if arr.ndim != ndim or arr.shape[-1:] != (2,):
        raise InvalidStateError(f"'{what}' entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def state_from_json(payload: Mapping[str, Any]) -> FockDensityMatrix:
    """Parse ``{"dim": d, "diagonal"|"pure"|"matrix": ...}``."""
    if not isinstance(payload, Mapping):
        raise InvalidStateError("state JSON must be an object")
    present = [k for k in _STATE_KEYS if k in payload]
    if len(present) != 1:
        raise InvalidStateError(f"exactly one of {_STATE_KEYS} required, found {present}")
    key = present[0]
    dim = payload.get("dim")
    if dim is not None and (not isinstance(dim, int) or dim <= 0):
        raise InvalidStateError("'dim' must be a positive integer")
    try:
        if key == "diagonal":
            return from_diagonal(payload[key], dim=dim)
        if key == "pure":
            return from_pure(_complex_list(payload[key], key, 2), dim=dim)
        mat = _complex_list(payload[key], key, 3)
        if mat.ndim != 2:
            raise InvalidStateError("'matrix' must be a list of rows")
        rho = from_matrix(mat)
        return rho.padded(dim) if dim is not None else rho
    except InvalidInputError as exc:
        raise InvalidStateError(str(exc)) from exc


def state_to_json(rho: FockDensityMatrix) -> dict:
    if rho.is_diagonal:
        return {"dim": rho.dim, "diagonal": rho.diagonal.tolist()}
    m = rho.elements
    return {"dim": rho.dim, "matrix": [[[z.real, z.imag] for z in row] for row in m]}


def load_state(path: str | Path) -> FockDensityMatrix:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidStateError(f"malformed JSON in {path}: {exc}") from exc
    return state_from_json(payload)
