"""Reference implementations kept deliberately separate from the library code paths."""

import math

import numpy as np
from scipy.linalg import sqrtm
from scipy.special import eval_genlaguerre, gammaln


def fock_wigner(m: int, n: int, x, p):
    """Matrix element ``W_{|m><n|}(x, p)`` from the closed Laguerre formula (factorials via gammaln).

    Normalized so that ``iint W_{|n><n|} = 1``.
    """
    x, p = np.broadcast_arrays(np.asarray(x, float), np.asarray(p, float))
    r2 = x * x + p * p
    if m >= n:
        k = m - n
        z = np.sqrt(2.0) * (x - 1j * p)
        lo = n
    else:
        k = n - m
        z = np.sqrt(2.0) * (x + 1j * p)
        lo = m
    pref = np.exp(0.5 * (gammaln(lo + 1) - gammaln(lo + k + 1)))
    return ((-1) ** lo / np.pi * pref * z**k * np.exp(-r2) * eval_genlaguerre(lo, k, 2 * r2))


def wigner_reference(rho: np.ndarray, x, p):
    """``sum_{mn} rho_{mn} W_{|m><n|}``; ``rho_{mn}`` multiplies the ``|m><n|`` function."""
    rho = np.asarray(rho)
    out = 0
    for m in range(rho.shape[0]):
        for n in range(rho.shape[0]):
            if rho[m, n] != 0:
                out = out + rho[m, n] * fock_wigner(m, n, x, p)
    return np.real(out)


def ladder(dim: int):
    a = np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)
    x = (a + a.conj().T) / np.sqrt(2)
    p = (a - a.conj().T) / (1j * np.sqrt(2))
    return a, x, p


def gaussian_fock(d, gamma, dim: int = 160) -> np.ndarray:
    """Gaussian state with mean ``d`` and covariance ``gamma`` as a Fock matrix.

    Built as ``exp(-1/2 (r - d)^T K (r - d))`` from the symplectic normal form,
    independent of any Wigner or thermal-weight formula.
    """
    gamma = np.asarray(gamma, float)
    nu = math.sqrt(np.linalg.det(gamma))
    s = np.real(sqrtm(gamma / nu))
    beta = 2 * math.atanh(1 / nu) if nu > 1 + 1e-12 else 60.0
    si = np.linalg.inv(s)
    k = beta * si.T @ si
    _, x, p = ladder(dim)
    r = [x - d[0] * np.eye(dim), p - d[1] * np.eye(dim)]
    h = 0.5 * sum(k[i, j] * r[i] @ r[j] for i in range(2) for j in range(2))
    h = (h + h.conj().T) / 2
    w, v = np.linalg.eigh(h)
    w -= w.min()
    out = (v * np.exp(-w)) @ v.conj().T
    return out / np.trace(out)


def embed(m: np.ndarray, dim: int) -> np.ndarray:
    out = np.zeros((dim, dim), complex)
    out[: m.shape[0], : m.shape[0]] = m
    return out


def moments_reference(rho: np.ndarray):
    """Mean and covariance ``gamma = 2 * sym. covariance`` by explicit operator products."""
    dim = rho.shape[0] + 2
    m = embed(rho, dim)
    _, x, p = ladder(dim)
    ev = lambda op: np.real(np.trace(m @ op))
    mx, mp = ev(x), ev(p)
    xx = ev(x @ x) - mx * mx
    pp = ev(p @ p) - mp * mp
    xp = ev((x @ p + p @ x) / 2) - mx * mp
    return np.array([mx, mp]), 2 * np.array([[xx, xp], [xp, pp]])


def thermal_matrix(mu_g: float, dim: int) -> np.ndarray:
    """Thermal state as ``exp(-beta n)`` normalized on a large basis."""
    nbar = (1 / mu_g - 1) / 2
    if nbar == 0:
        w = np.zeros(dim)
        w[0] = 1
    else:
        beta = math.log((nbar + 1) / nbar)
        w = np.exp(-beta * np.arange(dim))
        w /= w.sum()
    return np.diag(w)
