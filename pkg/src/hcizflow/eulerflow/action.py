"""Pointwise action density m^2/rho + (pi^2/3) rho^3, its conjugate and proximal map."""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["action_density", "conjugate_action", "prox_action", "fenchel_young_parts"]

PI2 = np.pi ** 2


def action_density(rho: np.ndarray, m: np.ndarray) -> np.ndarray:
    """m^2/rho + (pi^2/3) rho^3 with 0/0 = 0; +inf for rho < 0 or (rho = 0, m != 0)."""
    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    out = np.full(np.broadcast(rho, m).shape, np.inf)
    pos = rho > 0
    out[pos] = (m[pos] ** 2 / rho[pos]) + PI2 / 3 * rho[pos] ** 3
    zero = (rho == 0) & (m == 0)
    out[zero] = 0.0
    return out


def conjugate_action(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Convex conjugate in (rho, m): (2 / (3 pi)) * max(a + b^2/4, 0)^(3/2)."""
    A = np.clip(a + 0.25 * b * b, 0.0, None)
    return 2.0 / (3.0 * np.pi) * A ** 1.5


@njit(cache=True)
def _prox_kernel(a, b2, lam, start, use_start, tol, max_iter, out):
    iters = 0
    for k in range(a.size):
        hi = max(a[k], 0.0) + b2[k] / (4.0 * lam)
        if a[k] + b2[k] / (4.0 * lam) <= 0.0:
            out[k] = 0.0
            continue
        lo = 0.0
        x = hi
        if use_start:
            x = min(max(start[k], lo), hi)
        scale = 1.0 + hi
        for it in range(1, max_iter + 1):
            q = x + 2.0 * lam
            g = -lam * b2[k] / (q * q) + lam * PI2 * x * x + x - a[k]
            dg = 2.0 * lam * b2[k] / (q * q * q) + 2.0 * lam * PI2 * x + 1.0
            if g > 0.0:
                hi = x
            else:
                lo = x
            xn = x - g / dg
            if xn < lo or xn > hi:
                xn = 0.5 * (lo + hi)
            step = abs(xn - x)
            x = xn
            if it > iters:
                iters = it
            if step < tol * scale:
                break
        out[k] = x
    return iters


def prox_action(rho_hat: np.ndarray, m_hat: np.ndarray, lam: float,
                start: np.ndarray | None = None, tol: float = 1e-12,
                max_iter: int = 100) -> tuple[np.ndarray, np.ndarray, int]:
    """argmin over (rho, m) of lam * action + |(rho, m) - (rho_hat, m_hat)|^2 / 2.

    For fixed rho the optimal momentum is m_hat * rho / (rho + 2 lam); the
    remaining scalar equation in rho is solved by Newton's method safeguarded
    by bisection on a bracket, one independent problem per entry. When
    rho_hat + m_hat^2 / (4 lam) <= 0 the minimizer is (0, 0). Returns the
    minimizer and the largest Newton iteration count.
    """
    rho_hat = np.ascontiguousarray(rho_hat, dtype=float)
    m_hat = np.ascontiguousarray(m_hat, dtype=float)
    r = np.empty_like(rho_hat)
    use = start is not None
    st = np.ascontiguousarray(start, dtype=float) if use else rho_hat
    it = _prox_kernel(rho_hat.ravel(), (m_hat * m_hat).ravel(), float(lam), st.ravel(), use,
                      tol, max_iter, r.ravel())
    m = m_hat * r / (r + 2 * lam)
    return r, m, int(it)


def fenchel_young_parts(rho, m, a, b):
    """Split the pointwise Fenchel-Young gap f(rho,m) + f*(a,b) - a rho - b m.

    Returns ``(velocity_part, density_part, hj_part)``:
    rho (m/rho - b/2)^2, (pi^2/3)(rho - r)^2 (rho + 2r) with
    r = sqrt(max(a + b^2/4, 0))/pi, and rho * max(-(a + b^2/4), 0). The three
    are nonnegative and add up to the gap.
    """
    rho = np.asarray(rho, dtype=float)
    A = a + 0.25 * b * b
    r_eps = np.sqrt(np.clip(A, 0.0, None)) / np.pi
    # (m - rho b/2)^2 / rho equals rho (u - b/2)^2 without forming u, which overflows for tiny rho
    pos = rho > 0
    vel = np.where(pos, (m - 0.5 * b * rho) ** 2 / np.where(pos, rho, 1.0), 0.0)
    den = PI2 / 3 * (rho - r_eps) ** 2 * (rho + 2 * r_eps)
    hj = rho * np.clip(-A, 0.0, None)
    return vel, den, hj
