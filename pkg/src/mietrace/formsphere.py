"""Exact exterior-algebra-valued polynomials and vector spherical harmonics.

Coefficients are exact rationals, so every identity verified here (nilpotency
of the radial wedge, the anticommutator, idempotency of the tangential
projection on the sphere, the degree-shift containment) is an algebraic fact,
not a floating-point approximation.

Conventions: polynomials live in d variables x_0..x_{d-1}; a p-form monomial
is keyed by (exponent vector, strictly increasing index tuple).  theta is
exterior multiplication by r dr = sum_j x_j dx_j, theta_star is interior
multiplication by the same covector, and P = theta_star . theta is the
tangential projection once restricted to the unit sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "FormPolynomial",
    "HarmonicDecomposition",
    "ChannelMultiplicity",
    "DegreeShiftReport",
    "laplacian",
    "theta",
    "theta_star",
    "tangential_projection",
    "harmonic_project",
    "reduce_mod_sphere",
    "harmonic_basis",
    "harmonic_dim",
    "degree_shift_check",
    "channel_multiplicities",
]

Key = tuple[tuple[int, ...], tuple[int, ...]]


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    raise TypeError(f"coefficients must be exact (int or Fraction), got {type(c).__name__}")


def _insert_index(idx: tuple[int, ...], j: int):
    """(sign, idx with j wedged in), or (0, ()) if j already present."""
    if j in idx:
        return 0, ()
    pos = sum(1 for i in idx if i < j)
    return (-1) ** pos, idx[:pos] + (j,) + idx[pos:]


def _remove_index(idx: tuple[int, ...], j: int):
    """(sign, idx with j contracted out), or (0, ()) if j absent."""
    if j not in idx:
        return 0, ()
    pos = idx.index(j)
    return (-1) ** pos, idx[:pos] + idx[pos + 1 :]


class FormPolynomial:
    """Polynomial with values in the exterior algebra, exact rational coefficients."""

    __slots__ = ("d", "terms")

    def __init__(self, d: int, terms: dict[Key, Fraction] | None = None):
        if d < 1:
            raise ValueError("need at least one variable")
        self.d = d
        self.terms: dict[Key, Fraction] = {}
        if terms:
            for key, c in terms.items():
                c = _as_fraction(c)
                if c:
                    self.terms[key] = c

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, d: int) -> "FormPolynomial":
        return cls(d)

    @classmethod
    def scalar(cls, d: int, c) -> "FormPolynomial":
        return cls(d, {((0,) * d, ()): _as_fraction(c)})

    @classmethod
    def monomial(cls, d: int, expo, idx=(), coeff=1) -> "FormPolynomial":
        expo = tuple(expo)
        idx = tuple(idx)
        if len(expo) != d or any(e < 0 for e in expo):
            raise ValueError("bad exponent vector")
        if any(not 0 <= i < d for i in idx) or list(idx) != sorted(set(idx)):
            raise ValueError("index tuple must be strictly increasing in range(d)")
        return cls(d, {(expo, idx): _as_fraction(coeff)})

    @classmethod
    def variable(cls, d: int, j: int) -> "FormPolynomial":
        expo = [0] * d
        expo[j] = 1
        return cls.monomial(d, expo)

    @classmethod
    def dx(cls, d: int, i: int) -> "FormPolynomial":
        return cls.monomial(d, (0,) * d, (i,))

    # -- ring structure ------------------------------------------------------

    def _check(self, other: "FormPolynomial") -> None:
        if self.d != other.d:
            raise ValueError("mixed ambient dimensions")

    def __add__(self, other: "FormPolynomial") -> "FormPolynomial":
        self._check(other)
        out = dict(self.terms)
        for key, c in other.terms.items():
            s = out.get(key, 0) + c
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return FormPolynomial(self.d, out)

    def __neg__(self) -> "FormPolynomial":
        return FormPolynomial(self.d, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "FormPolynomial") -> "FormPolynomial":
        return self + (-other)

    def __mul__(self, other) -> "FormPolynomial":
        if isinstance(other, (int, Fraction)):
            c0 = _as_fraction(other)
            return FormPolynomial(self.d, {k: c * c0 for k, c in self.terms.items()})
        self._check(other)
        out: dict[Key, Fraction] = {}
        for (e1, i1), c1 in self.terms.items():
            for (e2, i2), c2 in other.terms.items():
                sign, idx = _wedge(i1, i2)
                if sign == 0:
                    continue
                expo = tuple(a + b for a, b in zip(e1, e2))
                key = (expo, idx)
                s = out.get(key, 0) + sign * c1 * c2
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return FormPolynomial(self.d, out)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "FormPolynomial":
        return self * (Fraction(1) / _as_fraction(other))

    def __eq__(self, other) -> bool:
        return isinstance(other, FormPolynomial) and self.d == other.d and self.terms == other.terms

    def __hash__(self):
        raise TypeError("FormPolynomial is not hashable")

    # -- structure queries ----------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def form_degrees(self) -> set[int]:
        return {len(idx) for _, idx in self.terms}

    def poly_degrees(self) -> set[int]:
        return {sum(expo) for expo, _ in self.terms}

    def degree(self) -> int:
        """Homogeneity degree; raises for mixed-degree input."""
        degs = self.poly_degrees()
        if len(degs) != 1:
            raise ValueError(f"polynomial is not homogeneous, degrees {sorted(degs)}")
        return degs.pop()

    def homogeneous_parts(self) -> dict[int, "FormPolynomial"]:
        parts: dict[int, dict[Key, Fraction]] = {}
        for (expo, idx), c in self.terms.items():
            parts.setdefault(sum(expo), {})[(expo, idx)] = c
        return {k: FormPolynomial(self.d, t) for k, t in sorted(parts.items())}

    # -- calculus -------------------------------------------------------------

    def partial(self, j: int) -> "FormPolynomial":
        out: dict[Key, Fraction] = {}
        for (expo, idx), c in self.terms.items():
            e = expo[j]
            if e == 0:
                continue
            ne = list(expo)
            ne[j] = e - 1
            key = (tuple(ne), idx)
            s = out.get(key, 0) + c * e
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return FormPolynomial(self.d, out)

    def laplacian(self) -> "FormPolynomial":
        out: dict[Key, Fraction] = {}
        for (expo, idx), c in self.terms.items():
            for j, e in enumerate(expo):
                if e < 2:
                    continue
                ne = list(expo)
                ne[j] = e - 2
                key = (tuple(ne), idx)
                s = out.get(key, 0) + c * e * (e - 1)
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return FormPolynomial(self.d, out)

    def theta(self) -> "FormPolynomial":
        """Exterior multiplication by r dr = sum_j x_j dx_j."""
        out: dict[Key, Fraction] = {}
        for (expo, idx), c in self.terms.items():
            for j in range(self.d):
                sign, nidx = _insert_index(idx, j)
                if sign == 0:
                    continue
                ne = list(expo)
                ne[j] += 1
                key = (tuple(ne), nidx)
                s = out.get(key, 0) + sign * c
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return FormPolynomial(self.d, out)

    def theta_star(self) -> "FormPolynomial":
        """Interior multiplication by r dr."""
        out: dict[Key, Fraction] = {}
        for (expo, idx), c in self.terms.items():
            for j in idx:
                sign, nidx = _remove_index(idx, j)
                ne = list(expo)
                ne[j] += 1
                key = (tuple(ne), nidx)
                s = out.get(key, 0) + sign * c
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return FormPolynomial(self.d, out)

    def __repr__(self) -> str:
        if self.is_zero:
            return "0"
        bits = []
        for (expo, idx), c in sorted(self.terms.items()):
            mono = "".join(f"x{j}^{e}" if e > 1 else f"x{j}" for j, e in enumerate(expo) if e)
            form = ("dx" + "^dx".join(str(i) for i in idx)) if idx else ""
            bits.append(f"{c}*{mono or '1'}{('*' + form) if form else ''}")
        return " + ".join(bits)


def _wedge(i1: tuple[int, ...], i2: tuple[int, ...]):
    if not i1:
        return 1, i2
    if not i2:
        return 1, i1
    sign = 1
    out = list(i1)
    for j in i2:
        s, merged = _insert_index(tuple(out), j)
        if s == 0:
            return 0, ()
        sign *= s
        out = list(merged)
    return sign, tuple(out)


def laplacian(p: FormPolynomial) -> FormPolynomial:
    """Componentwise flat Laplacian."""
    return p.laplacian()


def theta(p: FormPolynomial) -> FormPolynomial:
    return p.theta()


def theta_star(p: FormPolynomial) -> FormPolynomial:
    return p.theta_star()


def tangential_projection(p: FormPolynomial) -> FormPolynomial:
    """P = theta_star . theta; the tangential projection after restriction to r = 1."""
    return p.theta().theta_star()


@lru_cache(maxsize=None)
def _r2(d: int) -> FormPolynomial:
    out = FormPolynomial.zero(d)
    for j in range(d):
        out = out + FormPolynomial.variable(d, j) * FormPolynomial.variable(d, j)
    return out


@lru_cache(maxsize=None)
def _r2_pow(d: int, k: int) -> FormPolynomial:
    if k == 0:
        return FormPolynomial.scalar(d, 1)
    return _r2_pow(d, k - 1) * _r2(d)


# ---------------------------------------------------------------------------
# Harmonic decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HarmonicDecomposition:
    """p = sum_k |x|^(2k) h_k with every h_k exactly harmonic of degree l - 2k."""

    degree: int
    components: tuple[tuple[int, FormPolynomial], ...]

    def assemble(self) -> FormPolynomial:
        if not self.components:
            raise ValueError("empty decomposition has no ambient dimension")
        d = self.components[0][1].d
        out = FormPolynomial.zero(d)
        for k, h in self.components:
            out = out + _r2_pow(d, k) * h
        return out

    def component(self, k: int) -> FormPolynomial | None:
        for kk, h in self.components:
            if kk == k:
                return h
        return None

    def occurring_degrees(self) -> tuple[int, ...]:
        return tuple(sorted(self.degree - 2 * k for k, _ in self.components))


def _project_levels(p: FormPolynomial, l: int) -> dict[int, FormPolynomial]:
    if p.is_zero:
        return {}
    q = p.laplacian()
    if q.is_zero:
        return {0: p}
    comps: dict[int, FormPolynomial] = {}
    rest = FormPolynomial.zero(p.d)
    for j, g in _project_levels(q, l - 2).items():
        k = j + 1
        ck = 2 * k * (2 * l - 2 * k + p.d - 2)
        h = g * Fraction(1, ck)
        comps[k] = h
        rest = rest + _r2_pow(p.d, k) * h
    h0 = p - rest
    if not h0.is_zero:
        comps[0] = h0
    return comps


def harmonic_project(p: FormPolynomial) -> HarmonicDecomposition:
    """Exact decomposition of a homogeneous p into |x|^(2k)-weighted harmonics.

    Verified on construction: every component has exactly zero Laplacian and
    the reassembly reproduces the input exactly.
    """
    if p.is_zero:
        return HarmonicDecomposition(degree=0, components=())
    l = p.degree()
    comps = _project_levels(p, l)
    for k, h in comps.items():
        if not h.laplacian().is_zero:
            raise AssertionError(f"component at level {k} is not harmonic")
    dec = HarmonicDecomposition(degree=l, components=tuple(sorted(comps.items())))
    if dec.assemble() != p:
        raise AssertionError("harmonic decomposition does not reassemble to its input")
    return dec


def reduce_mod_sphere(p: FormPolynomial) -> FormPolynomial:
    """Canonical representative of p modulo the ideal (|x|^2 - 1).

    Every homogeneous part is split into radial powers times harmonics and the
    radial powers are replaced by 1; the result is the unique representative
    that is a sum of harmonics of pairwise distinct parities and degrees.
    """
    out = FormPolynomial.zero(p.d)
    for _, part in p.homogeneous_parts().items():
        for _, h in harmonic_project(part).components:
            out = out + h
    return out


# ---------------------------------------------------------------------------
# Harmonic bases and dimensions
# ---------------------------------------------------------------------------


def harmonic_dim(d: int, l: int) -> int:
    """dim of the degree-l spherical harmonics on S^(d-1), by the closed formula.

    For l <= 8 the value is cross-checked against the explicit verified basis.
    """
    if d < 1 or l < 0:
        raise ValueError("need d >= 1 and l >= 0")
    n = _harmonic_dim_formula(d, l)
    if l <= 8 and d <= 6:
        if len(harmonic_basis(d, l)) != n:
            raise AssertionError(f"basis enumeration disagrees with formula at (d={d}, l={l})")
    return n


def _harmonic_dim_formula(d: int, l: int) -> int:
    if d == 1:
        return 1 if l <= 1 else 0
    a = math.comb(l + d - 1, d - 1)
    b = math.comb(l + d - 3, d - 1) if l + d - 3 >= d - 1 else 0
    return a - b


def _vertical_coeffs(u: int, m: int, nv: int) -> list[Fraction]:
    """Coefficients a_j of sum_j a_j t^(u-2j) s^j with Delta(F q) = 0.

    t is the last active variable, s = |x'|^2 over the first nv-1 variables,
    q a harmonic of degree m in those variables.
    """
    a = [Fraction(1)]
    for j in range((u) // 2):
        num = (u - 2 * j) * (u - 2 * j - 1)
        den = 2 * (j + 1) * (2 * j + 2 * m + nv - 1)
        a.append(-a[-1] * Fraction(num, den))
    return a


def _scalar_basis(d: int, nv: int, l: int) -> list[FormPolynomial]:
    if nv == 1:
        if l == 0:
            return [FormPolynomial.scalar(d, 1)]
        if l == 1:
            return [FormPolynomial.variable(d, 0)]
        return []
    out: list[FormPolynomial] = []
    t = FormPolynomial.variable(d, nv - 1)
    s = FormPolynomial.zero(d)
    for i in range(nv - 1):
        s = s + FormPolynomial.variable(d, i) * FormPolynomial.variable(d, i)
    t_pow = {0: FormPolynomial.scalar(d, 1)}
    s_pow = {0: FormPolynomial.scalar(d, 1)}

    def pw(table, base, k):
        if k not in table:
            table[k] = pw(table, base, k - 1) * base
        return table[k]

    for m in range(l + 1):
        u = l - m
        coeffs = _vertical_coeffs(u, m, nv)
        for q in _scalar_basis(d, nv - 1, m):
            f = FormPolynomial.zero(d)
            for j, aj in enumerate(coeffs):
                f = f + aj * (pw(t_pow, t, u - 2 * j) * pw(s_pow, s, j))
            out.append(f * q)
    return out


_MODP = 2_147_483_647


def _modp_value(c: Fraction, p: int = _MODP) -> int:
    den = c.denominator % p
    if den == 0:
        raise ArithmeticError("denominator divisible by the verification prime")
    return (c.numerator % p) * pow(den, p - 2, p) % p


def _modp_rank(columns: list[dict], p: int = _MODP) -> int:
    """Rank over F_p of the matrix whose columns are sparse Fraction vectors."""
    keys = sorted({k for col in columns for k in col})
    pos = {k: i for i, k in enumerate(keys)}
    mat = np.zeros((len(keys), len(columns)), dtype=np.int64)
    for j, col in enumerate(columns):
        for k, c in col.items():
            mat[pos[k], j] = _modp_value(c, p)
    rank = 0
    for col in range(mat.shape[1]):
        piv = np.nonzero(mat[rank:, col])[0]
        if piv.size == 0:
            continue
        r = rank + piv[0]
        mat[[rank, r]] = mat[[r, rank]]
        inv = pow(int(mat[rank, col]), p - 2, p)
        mat[rank] = mat[rank] * inv % p
        rows = np.nonzero(mat[:, col])[0]
        rows = rows[rows != rank]
        mat[rows] = (mat[rows] - np.outer(mat[rows, col], mat[rank])) % p
        rank += 1
        if rank == mat.shape[0]:
            break
    return rank


@lru_cache(maxsize=None)
def harmonic_basis(d: int, l: int) -> tuple[FormPolynomial, ...]:
    """Verified basis of the scalar harmonics of degree l in d variables.

    Construction is the classical separation into a vertical coefficient
    polynomial times a lower-dimensional harmonic; each element is checked to
    have exactly zero Laplacian and the family is checked to be linearly
    independent modulo a large prime.
    """
    elems = _scalar_basis(d, d, l)
    for h in elems:
        if not h.laplacian().is_zero:
            raise AssertionError(f"basis construction produced a non-harmonic at (d={d}, l={l})")
        if not h.is_zero and h.degree() != l:
            raise AssertionError("basis element has wrong degree")
    if elems:
        cols = [{key: c for key, c in h.terms.items()} for h in elems]
        if _modp_rank(cols) != len(elems):
            raise AssertionError(f"basis not independent at (d={d}, l={l})")
    if len(elems) != _harmonic_dim_formula(d, l):
        raise AssertionError(f"basis count disagrees with the dimension formula at (d={d}, l={l})")
    return tuple(elems)


# ---------------------------------------------------------------------------
# Degree-shift verification
# ---------------------------------------------------------------------------
#
# The inner loop works on denominator-cleared integer polynomials: harmonic
# containment is scale-invariant, and plain int arithmetic keeps the full
# (d, p, l) sweep fast.  Integer scalar polynomials are dicts exponent -> int.


@dataclass(frozen=True)
class DegreeShiftReport:
    """Outcome of the exact tangential-projection degree containment check."""

    d: int
    p: int
    l: int
    passed: bool
    basis_dim: int
    n_elements: int
    occurring_degrees: tuple[int, ...]
    offenders: tuple[tuple[int, tuple[int, ...], tuple[int, ...]], ...]  # (basis idx, form idx, stray degrees)


def _index_tuples(d: int, p: int):
    import itertools

    return list(itertools.combinations(range(d), p))


def _ip_add_scaled(acc: dict, q: dict, c: int) -> None:
    if c == 0:
        return
    for e, v in q.items():
        s = acc.get(e, 0) + c * v
        if s:
            acc[e] = s
        else:
            del acc[e]


def _ip_mul_var(q: dict, j: int) -> dict:
    out = {}
    for e, v in q.items():
        ne = list(e)
        ne[j] += 1
        out[tuple(ne)] = v
    return out


def _ip_partial(q: dict, j: int) -> dict:
    out = {}
    for e, v in q.items():
        k = e[j]
        if k:
            ne = list(e)
            ne[j] = k - 1
            out[tuple(ne)] = v * k
    return out


def _ip_laplacian(q: dict, d: int) -> dict:
    out: dict = {}
    for e, v in q.items():
        for j in range(d):
            k = e[j]
            if k >= 2:
                ne = list(e)
                ne[j] = k - 2
                key = tuple(ne)
                s = out.get(key, 0) + v * k * (k - 1)
                if s:
                    out[key] = s
                else:
                    del out[key]
    return out


def _ip_mul_r2(q: dict, d: int) -> dict:
    out: dict = {}
    for e, v in q.items():
        for j in range(d):
            ne = list(e)
            ne[j] += 2
            key = tuple(ne)
            s = out.get(key, 0) + v
            if s:
                out[key] = s
            else:
                del out[key]
    return out


def _step_denominator(d: int, deg: int) -> int:
    """Division constant of the one-step harmonic subtraction, or 1 when the
    step needs no subtraction (x_j p already harmonic)."""
    c = d + 2 * deg - 2
    return c if c > 0 else 1


def _harmonic_step(q: dict, deg: int, j: int, d: int) -> tuple[dict, dict]:
    """x_j q = (A + |x|^2 B) / c for harmonic q of degree deg, denominator-cleared.

    Returns (A, B) with c = _step_denominator(d, deg): A = c x_j q - |x|^2 d_j q,
    B = d_j q; both harmonic whenever q is.
    """
    c = d + 2 * deg - 2
    if c <= 0:
        return _ip_mul_var(q, j), {}
    dq = _ip_partial(q, j)
    a: dict = {}
    _ip_add_scaled(a, _ip_mul_var(q, j), c)
    _ip_add_scaled(a, _ip_mul_r2(dq, d), -1)
    return a, dq


@lru_cache(maxsize=None)
def _int_basis(d: int, l: int) -> tuple[tuple[dict, int], ...]:
    """Denominator-cleared copies of harmonic_basis(d, l): (int poly, scale)."""
    out = []
    for h in harmonic_basis(d, l):
        den = math.lcm(*(c.denominator for c in h.terms.values())) if h.terms else 1
        q = {expo: int(c * den) for (expo, _), c in h.terms.items()}
        out.append((q, den))
    return tuple(out)


_XX_CACHE: dict[tuple[int, int], dict] = {}


def _xx_levels(d: int, l: int, hi: int, j: int, k: int) -> tuple[dict, dict, dict]:
    """Integer level components of x_j x_k h_hi: value = (L0 + |x|^2 L1 + |x|^4 L2) / scale.

    The common positive scale c0 c1 c2 (times the basis clearing factor)
    depends only on (d, l); vanishing of a level is therefore scale-free.
    Each level is verified exactly harmonic once and then cached.
    """
    cell = _XX_CACHE.setdefault((d, l), {})
    key = (hi, j, k) if j <= k else (hi, k, j)
    got = cell.get(key)
    if got is not None:
        return got
    h, _ = _int_basis(d, l)[key[0]]
    c1 = _step_denominator(d, l + 1)
    c2 = _step_denominator(d, l - 1)
    a, b = _harmonic_step(h, l, key[2], d)           # x_k h = (a + |x|^2 b)/c0
    a1, b1 = _harmonic_step(a, l + 1, key[1], d)     # x_j a = (a1 + |x|^2 b1)/c1
    a2, b2 = _harmonic_step(b, l - 1, key[1], d)     # x_j b = (a2 + |x|^2 b2)/c2
    lev0: dict = {}
    _ip_add_scaled(lev0, a1, c2)
    lev1: dict = {}
    _ip_add_scaled(lev1, b1, c2)
    _ip_add_scaled(lev1, a2, c1)
    lev2: dict = {}
    _ip_add_scaled(lev2, b2, c1)
    for lev in (lev0, lev1, lev2):
        if _ip_laplacian(lev, d):
            raise AssertionError(f"subtraction step produced a non-harmonic at (d={d}, l={l})")
    got = (lev0, lev1, lev2)
    cell[key] = got
    return got


def _xx_scale(d: int, l: int, hi: int) -> int:
    c0 = _step_denominator(d, l)
    c1 = _step_denominator(d, l + 1)
    c2 = _step_denominator(d, l - 1)
    return c0 * c1 * c2 * _int_basis(d, l)[hi][1]


def degree_shift_check(d: int, p: int, l: int) -> DegreeShiftReport:
    """Check that P maps degree-l Lambda^p-valued harmonics into degrees {l-2, l, l+2}.

    Works on an explicit basis in exact arithmetic.  For every basis element
    h dx^I the image P(h dx^I) is a signed sum of x_j x_k h dx^J; each scalar
    factor carries an exact three-level harmonic decomposition (cached per
    (j, k) and shared across form degrees), so a stray radial level beyond
    |x|^4 in any recombined component is detected exactly.  A deterministic
    sample of elements is additionally cross-checked against P evaluated
    directly through the form algebra.
    """
    if not (d >= 2 and 0 <= p <= d and l >= 0):
        raise ValueError("need d >= 2, 0 <= p <= d, l >= 0")
    sbasis = harmonic_basis(d, l)
    idx_tuples = _index_tuples(d, p)
    allowed = {deg for deg in (l - 2, l, l + 2) if deg >= 0}

    occurring: set[int] = set()
    offenders: list[tuple[int, tuple[int, ...], tuple[int, ...]]] = []
    n_elements = 0
    sample_stride = max(1, (len(sbasis) * len(idx_tuples)) // 24)
    for hi, h in enumerate(sbasis):
        for idx in idx_tuples:
            n_elements += 1
            # P(h dx^idx) = sum over admissible (j, k) of sign * x_j x_k h dx^J
            pieces: list[tuple[int, int, int, tuple[int, ...]]] = []
            for j in range(d):
                s1, widx = _insert_index(idx, j)
                if s1 == 0:
                    continue
                for k in widx:
                    s2, out_idx = _remove_index(widx, k)
                    pieces.append((s1 * s2, j, k, out_idx))

            # combine per output index tuple and radial level, all integer
            levels: dict[tuple[int, tuple[int, ...]], dict] = {}
            for sign, j, k, out_idx in pieces:
                for lev, g in enumerate(_xx_levels(d, l, hi, j, k)):
                    if not g:
                        continue
                    acc = levels.setdefault((lev, out_idx), {})
                    _ip_add_scaled(acc, g, sign)
            present = {lev for (lev, _), g in levels.items() if g}

            if (n_elements - 1) % sample_stride == 0:
                _cross_check_element(d, l, hi, h, idx, levels)

            degs = tuple(sorted(l + 2 - 2 * lev for lev in present))
            occurring.update(degs)
            stray = tuple(g for g in degs if g not in allowed)
            if stray:
                offenders.append((hi, idx, stray))

    return DegreeShiftReport(
        d=d,
        p=p,
        l=l,
        passed=not offenders,
        basis_dim=len(sbasis),
        n_elements=n_elements,
        occurring_degrees=tuple(sorted(occurring)),
        offenders=tuple(offenders),
    )


def _cross_check_element(d, l, hi, h, idx, levels) -> None:
    """Recombine the integer levels and compare with P applied directly."""
    scale = _xx_scale(d, l, hi)
    recombined = FormPolynomial.zero(d)
    for (lev, out_idx), g in levels.items():
        if not g:
            continue
        as_form = FormPolynomial(d, {(expo, out_idx): Fraction(v) for expo, v in g.items()})
        recombined = recombined + _r2_pow(d, lev) * as_form
    direct = tangential_projection(h * FormPolynomial.monomial(d, (0,) * d, idx)) * scale
    if recombined != direct:
        raise AssertionError(
            f"cached decomposition disagrees with direct projection at (d={d}, l={l}, element {hi})"
        )


# ---------------------------------------------------------------------------
# Channel multiplicities (d = 3)
# ---------------------------------------------------------------------------


_FAMILIES = ("tangential-1", "tangential-2", "normal")


@dataclass(frozen=True)
class ChannelMultiplicity:
    d: int
    p: int
    l: int
    family: str
    count: int


def channel_multiplicities(p: int, l: int, d: int = 3) -> tuple[ChannelMultiplicity, ...]:
    """Per-family channel counts for Lambda^p-valued data on S^2.

    For p = 1: two tangential families (l >= 1) plus the longitudinal family
    (l >= 0), each of size 2l + 1.  p = 2 and p = 3 are the dual pictures:
    the p = 2 normal block carries the two tangential families and its
    tangential block the dual scalar family; p = 3 carries the dual scalar
    family only.
    """
    if d != 3:
        raise ValueError("channel tables are provided for d = 3 only")
    if not (0 <= p <= 3 and l >= 0):
        raise ValueError("need 0 <= p <= 3 and l >= 0")
    m = 2 * l + 1
    if p == 0:
        counts = (m, 0, 0)
    elif p == 1:
        counts = (m if l >= 1 else 0, m if l >= 1 else 0, m)
    elif p == 2:
        counts = (m, 0, 2 * m if l >= 1 else 0)
    else:
        counts = (0, 0, m)
    total = sum(counts)
    expected = math.comb(3, p) * m if (p in (0, 3) or l >= 1) else 1
    if total != expected:
        raise AssertionError("multiplicity table is inconsistent with the harmonic dimension")
    return tuple(
        ChannelMultiplicity(d=d, p=p, l=l, family=f, count=c)
        for f, c in zip(_FAMILIES, counts)
    )
