"""Radial kernels for odd space dimensions and robust real-line zero finding.

Provides the regular and outgoing radial kernels in odd dimension d >= 3
(reduced to integer-order spherical Bessel functions), the Riccati-Bessel
family psi_l = x j_l, chi_l = -x y_l, xi_l = x h_l, scaled evaluation that
stays finite deep in the evanescent regime l >> x, a Wronskian residual,
and a bracketing zero finder used for cavity and box spectra.

All functions are pure; there is no mutable module state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special as _sp

__all__ = [
    "RadialOrder",
    "ZeroList",
    "j_dl",
    "hankel1_dl",
    "hankel2_dl",
    "riccati",
    "riccati_deriv",
    "riccati_psi_scaled",
    "riccati_chi_scaled",
    "wronskian_check",
    "find_zeros",
]

# Mantissas are renormalized by 2**+-_SHIFT whenever a recurrence leaves
# [2**-_SHIFT, 2**_SHIFT]; true value = mantissa * 2**exponent throughout.
_SHIFT = 600
_BIG = 2.0**_SHIFT


@dataclass(frozen=True)
class RadialOrder:
    """Angular order of a radial kernel: odd dimension d >= 3, degree l >= 0."""

    d: int
    l: int

    def __post_init__(self) -> None:
        if self.d < 3 or self.d % 2 == 0:
            raise ValueError(f"only odd dimensions d >= 3 are supported, got d={self.d}")
        if self.l < 0:
            raise ValueError(f"angular degree must be nonnegative, got l={self.l}")

    @property
    def nu(self) -> float:
        """Effective cylinder-Bessel order l + (d-2)/2 (a half-integer)."""
        return self.l + (self.d - 2) / 2

    @property
    def reduced_l(self) -> int:
        """Order of the equivalent three-dimensional spherical kernel."""
        return self.l + (self.d - 3) // 2


def j_dl(order: RadialOrder, x):
    """Regular radial kernel in dimension d: x**((3-d)/2) * j_m(x), m = order.reduced_l.

    For d = 3 this is the ordinary spherical Bessel function j_l.  Accepts
    scalars or arrays of positive x.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0.0):
        raise ValueError("argument of j_dl must be positive")
    val = _sp.spherical_jn(order.reduced_l, xa)
    if order.d != 3:
        val = val * xa ** ((3 - order.d) / 2)
    return val if val.ndim else float(val)


def _sph_hankel_closed(m: int, z: complex, kind: int) -> complex:
    """Spherical Hankel function of integer order m from its closed form.

    h^(1,2)_m(z) = (∓i)^(m+1) (e^(±iz)/z) * sum_{k<=m} (±i)^k (m+k)!/(k!(m-k)!(2z)^k),
    a finite sum, exact up to rounding.  The growing sum is rescaled internally
    so only the final assembly can overflow.
    """
    if z == 0:
        raise ValueError("spherical Hankel functions are singular at z = 0")
    sgn = 1j if kind == 1 else -1j
    term = 1.0 + 0.0j
    total = term
    shift = 0
    for k in range(1, m + 1):
        term *= sgn * (m + k) * (m - k + 1) / (2.0 * k * z)
        total += term
        if max(abs(total.real), abs(total.imag), abs(term.real), abs(term.imag)) > _BIG:
            term /= _BIG
            total /= _BIG
            shift += _SHIFT
    # fold the removed powers of two into the exponential's real part
    w = sgn * z + shift * math.log(2.0)
    pref = (-sgn) ** (m + 1)
    return pref * total * np.exp(w) / z


def hankel1_dl(order: RadialOrder, z) -> complex:
    """Outgoing radial kernel: z**((3-d)/2) * h^(1)_m(z), m = order.reduced_l.

    Valid for any complex z != 0 (principal branch of the power for d > 3).
    """
    z = complex(z)
    if z == 0:
        raise ValueError("argument of hankel1_dl must be nonzero")
    val = _sph_hankel_closed(order.reduced_l, z, 1)
    if order.d != 3:
        val = val * z ** ((3 - order.d) / 2)
    return val


def hankel2_dl(order: RadialOrder, z) -> complex:
    """Incoming radial kernel, the conjugate branch of :func:`hankel1_dl`."""
    z = complex(z)
    if z == 0:
        raise ValueError("argument of hankel2_dl must be nonzero")
    val = _sph_hankel_closed(order.reduced_l, z, 2)
    if order.d != 3:
        val = val * z ** ((3 - order.d) / 2)
    return val


# ---------------------------------------------------------------------------
# Riccati-Bessel functions (d = 3 convention)
# ---------------------------------------------------------------------------

_RICCATI_KINDS = ("J", "Y", "H1", "H2")


def riccati_jy(l: int, x):
    """(psi, psi', chi, chi') at x for integer l >= 0, vectorized over x.

    psi_l = x j_l, chi_l = -x y_l.  Double precision; values underflow or
    overflow honestly outside ~1e+-308 (use the scaled variants there).
    """
    if l < 0:
        raise ValueError("l must be nonnegative")
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0.0):
        raise ValueError("argument must be positive")
    j = _sp.spherical_jn(l, xa)
    jp = _sp.spherical_jn(l, xa, derivative=True)
    y = _sp.spherical_yn(l, xa)
    yp = _sp.spherical_yn(l, xa, derivative=True)
    return xa * j, j + xa * jp, -xa * y, -(y + xa * yp)


def riccati(kind: str, l: int, x) -> complex:
    """Riccati-Bessel value: J -> psi, Y -> chi, H1 -> psi - i chi, H2 -> psi + i chi."""
    psi, _, chi, _ = riccati_jy(l, x)
    return _riccati_combine(kind, psi, chi)


def riccati_deriv(kind: str, l: int, x) -> complex:
    """Derivative of the Riccati-Bessel value with respect to its argument."""
    _, dpsi, _, dchi = riccati_jy(l, x)
    return _riccati_combine(kind, dpsi, dchi)


def _riccati_combine(kind, p, c):
    if kind == "J":
        return p if np.ndim(p) else float(p)
    if kind == "Y":
        return c if np.ndim(c) else float(c)
    if kind == "H1":
        v = p - 1j * c
    elif kind == "H2":
        v = p + 1j * c
    else:
        raise ValueError(f"kind must be one of {_RICCATI_KINDS}, got {kind!r}")
    return v if np.ndim(v) else complex(v)


def _frexp_pair(a: float, b: float, e: int):
    """Renormalize (a, b, e) so max(|a|, |b|) is in [0.5, 1)."""
    m = max(abs(a), abs(b))
    if m == 0.0 or not math.isfinite(m):
        return a, b, e
    _, k = math.frexp(m)
    return math.ldexp(a, -k), math.ldexp(b, -k), e + k


def riccati_psi_scaled(l: int, x: float):
    """(psi_l, psi_l', e) with true values = value * 2**e; finite for any l, x > 0.

    Downward (Miller) recurrence normalized against psi_0 = sin x or
    psi_1 = sin x / x - cos x, whichever is better conditioned.  Stable for
    l >> x where the direct values leave the double range.
    """
    if x <= 0.0:
        raise ValueError("argument must be positive")
    s, c = math.sin(x), math.cos(x)
    if l == 0:
        return _frexp_pair(s, c, 0)
    if l == 1:
        psi1 = s / x - c
        # psi_1' = psi_0 - psi_1 / x
        return _frexp_pair(psi1, s - psi1 / x, 0)

    nstart = max(l, int(x)) + int(math.sqrt(40.0 * (max(l, int(x)) + 1))) + 20
    fp = 0.0          # f_{n+1}
    fc = 1e-280       # f_n, arbitrary tiny seed at n = nstart
    removed = 0       # true (unnormalized) u_n = f_n * 2**removed_at_n
    rec = {}          # n -> (mantissa, exponent) of u_n
    want = (l, l - 1, 1, 0)
    for n in range(nstart, -1, -1):
        if n in want:
            m, k = math.frexp(fc)
            rec[n] = (m, k + removed)
        if n == 0:
            break
        fn1 = (2 * n + 1) / x * fc - fp
        fp, fc = fc, fn1
        af = abs(fc)
        if af > _BIG:
            fc = math.ldexp(fc, -_SHIFT)
            fp = math.ldexp(fp, -_SHIFT)
            removed += _SHIFT
        elif 0.0 < af < 1.0 / _BIG:
            fc = math.ldexp(fc, _SHIFT)
            fp = math.ldexp(fp, _SHIFT)
            removed -= _SHIFT

    # normalize against the better-conditioned closed-form reference
    if abs(s) >= 0.5:
        ref, (mr, er) = s, rec[0]
    else:
        ref, (mr, er) = s / x - c, rec[1]
    ml, el = rec[l]
    mp, ep = rec[l - 1]
    e_common = max(el, ep)
    pl = ref * (ml / mr) * math.ldexp(1.0, el - e_common)
    plm1 = ref * (mp / mr) * math.ldexp(1.0, ep - e_common)
    return _frexp_pair(pl, plm1 - (l / x) * pl, e_common - er)


def riccati_chi_scaled(l: int, x: float):
    """(chi_l, chi_l', e) with true values = value * 2**e; finite for any l, x > 0.

    Upward recurrence from chi_0 = cos x, which is stable because chi is the
    dominant solution in increasing l.
    """
    if x <= 0.0:
        raise ValueError("argument must be positive")
    s, c = math.sin(x), math.cos(x)
    if l == 0:
        return _frexp_pair(c, -s, 0)
    prev = c              # chi_0
    cur = c / x + s       # chi_1
    added = 0             # true value = f * 2**added
    for n in range(1, l):
        nxt = (2 * n + 1) / x * cur - prev
        prev, cur = cur, nxt
        if abs(cur) > _BIG:
            cur = math.ldexp(cur, -_SHIFT)
            prev = math.ldexp(prev, -_SHIFT)
            added += _SHIFT
    return _frexp_pair(cur, prev - (l / x) * cur, added)


def wronskian_check(l: int, x: float) -> float:
    """Residual |chi_l psi_l' - chi_l' psi_l - 1| at x.

    The exact Riccati-Bessel Wronskian chi psi' - chi' psi equals 1 for the
    convention chi = -x y; the residual measures implementation error only.
    Evaluated through the scaled recurrences, so it stays meaningful even
    where psi underflows and chi overflows the double range.
    """
    p, dp, ep = riccati_psi_scaled(l, x)
    ch, dch, ec = riccati_chi_scaled(l, x)
    w = math.ldexp(ch * dp - dch * p, ep + ec)
    return abs(w - 1.0)


# ---------------------------------------------------------------------------
# Zero finding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroList:
    """All zeros of a target on an interval, each refined to ``tolerance``.

    ``anomalies`` lists grid abscissas where |f| dips near zero without a
    bracketing sign change (near-tangencies); they are reported rather than
    silently skipped.
    """

    values: tuple[float, ...]
    target: str
    tolerance: float
    interval: tuple[float, float]
    anomalies: tuple[float, ...] = ()

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def find_zeros(
    fn: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    *,
    grid: float = 0.25,
    tol: float = 1e-12,
    dfn: Callable[[np.ndarray], np.ndarray] | None = None,
    target: str = "f",
) -> ZeroList:
    """Locate every zero of a continuous vectorized ``fn`` on [lo, hi].

    The grid spacing must be below the minimal zero gap so that every zero is
    bracketed by a sign change; brackets are then shrunk by vectorized
    bisection and optionally polished with one guarded Newton step when a
    derivative is supplied.
    """
    if not (hi > lo):
        raise ValueError("empty interval")
    if grid <= 0 or tol <= 0:
        raise ValueError("grid and tol must be positive")
    n = max(int(math.ceil((hi - lo) / grid)) + 1, 8)
    xs = np.linspace(lo, hi, n)
    ys = np.asarray(fn(xs), dtype=float)
    if not np.all(np.isfinite(ys)):
        bad = xs[~np.isfinite(ys)]
        raise ValueError(f"target {target!r} not finite at grid points near x={bad[:3]}")

    exact = xs[ys == 0.0]
    sign = np.sign(ys)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    a = xs[idx].copy()
    b = xs[idx + 1].copy()
    fa = ys[idx].copy()

    span = xs[1] - xs[0] if n > 1 else hi - lo
    nit = min(80, int(math.ceil(math.log2(max(span / tol, 2.0)))) + 4)
    for _ in range(nit):
        mid = 0.5 * (a + b)
        fm = np.asarray(fn(mid), dtype=float)
        hit = fm == 0.0
        left = fa * fm > 0
        a = np.where(left, mid, a)
        fa = np.where(left, fm, fa)
        b = np.where(left, b, mid)
        if np.any(hit):
            a = np.where(hit, mid, a)
            b = np.where(hit, mid, b)
    roots = 0.5 * (a + b)

    if dfn is not None and roots.size:
        fr = np.asarray(fn(roots), dtype=float)
        dr = np.asarray(dfn(roots), dtype=float)
        safe = dr != 0.0
        step = np.zeros_like(roots)
        step[safe] = fr[safe] / dr[safe]
        polished = roots - step
        ok = (polished >= a) & (polished <= b)
        roots = np.where(ok, polished, roots)

    values = np.sort(np.concatenate([roots, exact]))

    # near-tangency report: interior |f| minima below scale without sign change
    anomalies: list[float] = []
    if n > 4:
        scale = float(np.max(np.abs(ys))) or 1.0
        small = np.abs(ys) < 1e-10 * scale
        for i in np.nonzero(small)[0]:
            if 0 < i < n - 1 and ys[i] != 0.0 and sign[i - 1] == sign[i + 1] == sign[i]:
                anomalies.append(float(xs[i]))

    return ZeroList(
        values=tuple(float(v) for v in values),
        target=target,
        tolerance=tol,
        interval=(float(lo), float(hi)),
        anomalies=tuple(anomalies),
    )
