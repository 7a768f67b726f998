"""Independent brute-force references built from scipy.integrate.quad.

Nothing here touches the package's assembled matrices; the package is only
imported for the normalization constant.
"""

import numpy as np
from scipy.integrate import quad

from fracfde.fraclap import normalization_constant


def _pieces(a, b, breaks):
    pts = sorted({a, b, *[t for t in breaks if a < t < b]})
    return list(zip(pts[:-1], pts[1:]))


def fraclap_at(f, x, sigma, support, kinks=()):
    """``(-Lap)^s f(x)`` in 1D for ``f`` vanishing outside ``support``.

    Uses the symmetric form ``C int_0^inf (2f(x) - f(x+t) - f(x-t)) t^(-1-2s) dt``;
    the first piece carries the algebraic weight so the integrable
    endpoint singularity is treated exactly.
    """
    C = normalization_constant(1, sigma)
    lo, hi = support
    fx = f(x)
    reach = max(abs(hi - x), abs(x - lo))
    breaks = [abs(k - x) for k in (*kinks, lo, hi)]
    first = min([b for b in breaks if b > 0] + [reach])

    def g(t):
        t = max(t, 1e-15)
        return (2 * fx - f(x + t) - f(x - t)) / t

    total, _ = quad(g, 0.0, first, weight="alg", wvar=(-2 * sigma, 0.0), epsabs=1e-12, epsrel=1e-10, limit=500)
    for a, b in _pieces(first, reach, breaks):
        val, _ = quad(lambda t: g(t) * t ** (-2 * sigma), a, b, epsabs=1e-12, epsrel=1e-10, limit=500)
        total += val
    total += 2 * fx * reach ** (-2 * sigma) / (2 * sigma)
    return C * total


def seminorm_double(f, sigma, support, kinks=()):
    """``(C/2) int int (f(x)-f(y))^2 |x-y|^(-1-2s) dx dy`` over the real line."""
    C = normalization_constant(1, sigma)
    lo, hi = support
    s = 2 * sigma

    def inner(x):
        # y = x + t over the support; diagonal handled by the substitution.
        tot = 0.0
        breaks = [k - x for k in kinks] + [0.0]
        for a, b in _pieces(lo - x, hi - x, breaks):
            val, _ = quad(lambda t: (f(x) - f(x + t)) ** 2 * abs(t) ** (-1 - s), a, b,
                          epsabs=1e-13, epsrel=1e-11, limit=200)
            tot += val
        # y outside the support: f(y) = 0.
        tot += f(x) ** 2 * ((x - lo) ** (-s) + (hi - x) ** (-s)) / s
        return tot

    # the exterior part counts twice (x outside, y inside and vice versa)
    total = 0.0
    for a, b in _pieces(lo, hi, list(kinks)):
        val, _ = quad(lambda x: inner(x), a, b, epsabs=1e-12, epsrel=1e-10, limit=200)
        total += val
    ext = 0.0
    for a, b in _pieces(lo, hi, list(kinks)):
        val, _ = quad(lambda x: f(x) ** 2 * ((x - lo) ** (-s) + (hi - x) ** (-s)) / s, a, b,
                      epsabs=1e-13, epsrel=1e-11, limit=200)
        ext += val
    return 0.5 * C * (total + ext)


def tent_fn(width=0.5):
    return lambda x: max(0.0, 1.0 - abs(x) / width)
