"""Pure numpy implementations of the hot kernels.

Signatures match ``_ckernels`` exactly; :mod:`spltrack.kernels` picks one.
"""
import numpy as np


def guided_weights(losses, cs, rhos, lam, xi):
    losses = np.asarray(losses, dtype=float)
    cs = np.asarray(cs, dtype=float)
    rhos = np.asarray(rhos, dtype=float)
    eff = losses + xi * cs
    out = rhos * (1.0 - eff / lam)
    out[eff >= lam] = 0.0
    return out


def two_peaks(values, radius):
    """Primary peak and best cell outside its toroidal Chebyshev window.

    Ties resolve to the first cell in row-major order. Returns
    ``(g1, r1, c1, g2, r2, c2)``; ``r2 == -1`` when every cell is inside
    the window.
    """
    values = np.asarray(values, dtype=float)
    h, w = values.shape
    flat = int(np.argmax(values))
    r1, c1 = divmod(flat, w)
    g1 = float(values[r1, c1])
    dr = np.abs(np.arange(h) - r1)
    dr = np.minimum(dr, h - dr)
    dc = np.abs(np.arange(w) - c1)
    dc = np.minimum(dc, w - dc)
    outside = (dr[:, None] > radius) | (dc[None, :] > radius)
    if not outside.any():
        return g1, r1, c1, 0.0, -1, -1
    masked = np.where(outside, values, -np.inf)
    flat2 = int(np.argmax(masked))
    r2, c2 = divmod(flat2, w)
    return g1, r1, c1, float(values[r2, c2]), r2, c2


def _bisect_coordinate(a, b, iters):
    # minimize a*x**2 + b*x over [0, 1] with a > 0 by bisecting on the slope
    if b >= 0.0:
        return 0.0
    if 2.0 * a + b <= 0.0:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if 2.0 * a * mid + b > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def coordinate_descent(quad, lin, max_sweeps=100, tol=1e-14, iters=200):
    """Projected coordinate descent for ``sum(quad*v**2 + lin*v)`` on ``[0,1]^t``.

    Each coordinate is minimized by bisection on its slope and sweeps
    repeat until no coordinate moves more than ``tol``. Returns
    ``(v, sweeps)``. ``quad`` must be strictly positive.
    """
    quad = np.asarray(quad, dtype=float)
    lin = np.asarray(lin, dtype=float)
    t = quad.shape[0]
    v = np.zeros(t)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        delta = 0.0
        for k in range(t):
            new = _bisect_coordinate(quad[k], lin[k], iters)
            delta = max(delta, abs(new - v[k]))
            v[k] = new
        if delta <= tol:
            break
    return v, sweeps


def spectral_losses(filt, xhat, yhat):
    """Per-sample mean squared spatial error of ``conj(filt) * xhat`` vs ``yhat``.

    Uses Parseval, so no inverse transform is taken. ``xhat`` and ``yhat``
    are stacks of shape ``(n, h, w)``.
    """
    xhat = np.asarray(xhat)
    yhat = np.asarray(yhat)
    n, h, w = xhat.shape
    resid = np.conj(filt)[None] * xhat - yhat
    return np.sum(resid.real ** 2 + resid.imag ** 2, axis=(1, 2)) / float(h * w) ** 2


def weighted_spectra(v, xhat, yhat):
    """Numerator and denominator sums of the weighted per-frequency normal equations."""
    v = np.asarray(v, dtype=float)
    num = np.tensordot(v, np.conj(yhat) * xhat, axes=1)
    den = np.tensordot(v, xhat.real ** 2 + xhat.imag ** 2, axes=1)
    return num, den
