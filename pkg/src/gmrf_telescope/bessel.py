"""Bessel functions J0, J1 and oscillatory Hankel-type integrals.

Power series below ``x = 12``, Hankel asymptotic expansion above.
"""

import math

import numpy as np

SERIES_LIMIT = 12.0

# Gauss-Legendre rules on [-1, 1]
_GL20 = np.polynomial.legendre.leggauss(20)
_GL10 = np.polynomial.legendre.leggauss(10)


def _series(n, x):
    half = 0.5 * x
    term = half ** n / math.factorial(n)
    total = term.copy()
    q = -half * half
    for k in range(1, 80):
        term = term * q / (k * (k + n))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _asymptotic(n, x):
    mu = 4.0 * n * n
    p = np.ones_like(x)
    q = np.zeros_like(x)
    coef = np.ones_like(x)
    prev = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 40):
        coef = coef * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        mag = np.abs(coef)
        # stop each x at the smallest term of the divergent series
        active &= mag < prev
        prev = np.where(active, mag, prev)
        term = np.where(active, coef, 0.0)
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2:
            q += sign * term
        else:
            p += sign * term
        if not np.any(active):
            break
    chi = x - (0.5 * n + 0.25) * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def besselj(n, x):
    """J_n(x) for n in {0, 1}, elementwise."""
    if n not in (0, 1):
        raise ValueError("only orders 0 and 1 are implemented")
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    out = np.empty_like(ax)
    small = ax < SERIES_LIMIT
    if np.any(small):
        out[small] = _series(n, ax[small])
    if np.any(~small):
        out[~small] = _asymptotic(n, ax[~small])
    if n == 1:
        out = np.where(x < 0, -out, out)
    return out if out.ndim else float(out)


def j0(x):
    return besselj(0, x)


def j1(x):
    return besselj(1, x)


class QuadratureError(RuntimeError):
    pass


def _chunk_sums(f, a, b):
    """20- and 10-point Gauss-Legendre sums of ``f`` on each ``[a_i, b_i]``."""
    mid = 0.5 * (a + b)[:, None]
    half = 0.5 * (b - a)[:, None]
    hi = (f(mid + half * _GL20[0]) * _GL20[1]).sum(axis=1) * half[:, 0]
    lo = (f(mid + half * _GL10[0]) * _GL10[1]).sum(axis=1) * half[:, 0]
    return hi, lo


def integrate_chunks(f, a, b, tol, depth=0):
    """Per-chunk integrals, bisecting chunks whose two rules disagree."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    hi, lo = _chunk_sums(f, a, b)
    bad = np.abs(hi - lo) > tol
    if np.any(bad):
        if depth > 40:
            raise QuadratureError("adaptive subdivision did not converge")
        ab, bb = a[bad], b[bad]
        m = 0.5 * (ab + bb)
        left = integrate_chunks(f, ab, m, 0.5 * tol, depth + 1)
        right = integrate_chunks(f, m, bb, 0.5 * tol, depth + 1)
        hi[bad] = left + right
    return hi


def hankel_integral(weight, order, t, tol=1e-10, tail=None, batch=64, max_chunks=2_000_000):
    """``int_0^inf weight(b) J_order(b t) db`` for a smooth, decaying weight.

    The range is cut at powers of two up to the first zero of the Bessel
    factor, then at its approximate zeros ``((k + order/2 - 1/4) pi) / t`` so
    that chunk contributions alternate. The sum stops once the mean of the
    last two partial sums (the alternating-series remainder estimate) moves
    by less than ``tol``.

    For ``t == 0`` the integrand is non-oscillatory; ``tail(B)`` must then
    return ``int_B^inf weight(b) J_order(0) db`` in closed form.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if order == 1 and t == 0:
        return 0.0
    f = lambda b: weight(b) * besselj(order, b * t)
    if t == 0:
        if tail is None:
            raise ValueError("t == 0 needs a closed-form tail")
        edges = np.concatenate([[0.0], 2.0 ** np.arange(-4, 21)])
        body = integrate_chunks(f, edges[:-1], edges[1:], tol * 1e-2).sum()
        return float(body + tail(edges[-1]))

    first_zero = (1 + 0.5 * order - 0.25) * np.pi / t
    edges = [0.0]
    e = 2.0 ** -4
    while e < first_zero:
        edges.append(e)
        e *= 2.0
    edges.append(first_zero)
    total = integrate_chunks(f, np.array(edges[:-1]), np.array(edges[1:]), tol * 1e-2).sum()

    k = 1
    prev_avg = None
    partial = total
    done = 0
    while done < max_chunks:
        ks = np.arange(k, k + batch)
        lo = (ks + 0.5 * order - 0.25) * np.pi / t
        hi = (ks + 1 + 0.5 * order - 0.25) * np.pi / t
        parts = integrate_chunks(f, lo, hi, tol * 1e-2)
        sums = partial + np.cumsum(parts)
        prevs = np.concatenate([[partial], sums[:-1]])
        avgs = 0.5 * (sums + prevs)
        for i in range(batch):
            if prev_avg is not None and abs(avgs[i] - prev_avg) < tol and abs(parts[i]) < tol * 1e3:
                return float(avgs[i])
            prev_avg = avgs[i]
        partial = sums[-1]
        k += batch
        done += batch
    raise QuadratureError(f"oscillatory tail did not converge for t={t}")
