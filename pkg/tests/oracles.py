"""Independent reference computations used only by the test suite.

Each oracle deliberately takes a different route than the library code it
checks (pair-offset sums instead of CDF antiderivatives, Monte Carlo instead
of quadrature, explicit interval wrapping instead of frequency identities).
"""

from __future__ import annotations

import numpy as np
from scipy.special import sici

TAU = 2.0 * np.pi


def tent_overlap(c: float, h: float, lo: float, hi: float) -> float:
    """Integral of max(0, h - |u - c|) over [lo, hi]."""
    a = max(lo - c, -h)
    b = min(hi - c, h)
    if b <= a:
        return 0.0

    def anti(s: float) -> float:
        return h * s + 0.5 * s * s if s <= 0 else h * s - 0.5 * s * s

    return anti(b) - anti(a)


def brute_correlation(mu, r: float) -> float:
    """Correlation integral by direct summation over cell-pair offsets."""
    h = mu.cell_width
    dens = mu.weights / h
    K = len(dens)
    jmax = int(np.ceil(r / h)) + 1
    total = 0.0
    for j in range(-jmax, jmax + 1):
        area = tent_overlap(j * h, h, -r, r)
        if area == 0.0:
            continue
        if j >= 0:
            s = float(np.dot(dens[: K - j], dens[j:]))
        else:
            s = float(np.dot(dens[-j:], dens[: K + j]))
        total += s * area
    return total


def cantor_transform(xi: float, depth: int = 60) -> complex:
    """Transform of the equal-weight base-3 digit-set {0,2} measure via its
    self-similarity product: e(xi/2) * prod_j cos(2 pi xi 3^-j)."""
    phase = np.exp(1j * np.pi * xi)  # e(xi/2)
    prod = 1.0
    for j in range(1, depth + 1):
        prod *= np.cos(TAU * xi / 3.0 ** j)
    return phase * prod


def mc_scaled_sq(mu, b: float, m: int, pairs: int,
                 rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo estimate (mean, standard error) of the scale-averaged
    squared transform, via the pair identity: the average over t in [0,1] of
    e(m b^t (Y - Y')) for independent Y, Y' ~ mu.

    Each pair integral is evaluated in closed form through the sine/cosine
    integrals: int_0^1 e(c b^t) dt = (1/ln b) * [Ci + i Si](c u)|_{u=1}^{b}.
    """
    from hostlab.measures import sample_points

    ys = sample_points(mu, pairs, rng)
    yps = sample_points(mu, pairs, rng)
    c = TAU * m * (ys - yps)
    vals = np.empty(pairs, dtype=np.float64)
    nz = np.abs(c) > 1e-12
    cz = c[nz]
    si_b, ci_b = sici(np.abs(cz) * b)
    si_1, ci_1 = sici(np.abs(cz))
    real = (ci_b - ci_1) / np.log(b)
    vals[nz] = real          # imaginary part pairs off in expectation
    vals[~nz] = 1.0
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(pairs))
    return mean, se


def direct_pushforward_transform(gen, past, xdigits, nprime: int, k: int,
                                 b: int, n: int, m: int, depth: int = 6) -> complex:
    """Transform of the n-step xb image of the k-scaled conditional measure
    restricted to the cylinder of x's first n' digits, computed directly on
    the cylinder's absolute position (no time-change schedule involved).

    The multiplier a^k b^n is an integer, so the mod-1 pushforward transform
    at frequency m equals the line transform at m a^k b^n.
    """
    from hostlab.measures import conditional_on_past

    a = gen.base
    prefix = list(xdigits[:nprime])
    K = 0
    for d in prefix:
        K = K * a + d
    nu = conditional_on_past(gen, past.extended_by(prefix), depth) if nprime \
        else conditional_on_past(gen, past, depth)
    h0 = float(a) ** -(nprime + depth)
    xi = m * (a ** k) * (b ** n)
    cells = np.flatnonzero(nu.weights)
    centers = (K * float(a) ** depth + cells + 0.5) * h0
    val = np.dot(nu.weights[cells], np.exp(1j * TAU * xi * centers))
    return complex(val * np.sinc(xi * h0))


def wrapped_transform(mu, scale: float, m: int) -> complex:
    """Transform of the scaled measure wrapped onto [0,1), by explicitly
    splitting every scaled cell at integer boundaries and integrating e_m on
    each wrapped piece."""
    h = mu.cell_width
    total = 0.0 + 0.0j
    for k, wk in enumerate(mu.weights):
        if wk == 0.0:
            continue
        lo = scale * k * h
        hi = scale * (k + 1) * h
        dens = wk / (hi - lo)
        a = lo
        while a < hi - 1e-15:
            b = min(np.floor(a + 1.0 + 1e-12), hi)
            frac_a = a - np.floor(a)
            width = b - a
            # integral of e(m x) over the wrapped piece [frac_a, frac_a+width)
            piece = (np.exp(1j * TAU * m * (frac_a + width)) -
                     np.exp(1j * TAU * m * frac_a)) / (1j * TAU * m)
            total += dens * piece
            a = b
    return total
