"""Partial-wave channels for the perfectly conducting ball of radius a in R^3.

Each channel is one scalar scattering problem (fixed angular degree and
polarization); radial symmetry makes the full scattering matrix the
multiplicity-weighted direct sum of channel values

    dirichlet / normal : S = -xi2_l(lam a) / xi1_l(lam a)
    tm                 : S = -xi2_l'(lam a) / xi1_l'(lam a)

with xi(1,2) = psi -+ i chi the Riccati-Hankel pair.  The longitudinal
("normal") block of one-forms coincides with the scalar Dirichlet block;
degree-2 and degree-3 channels are the dual pictures and are exposed for
symmetry tests only.

Phase shifts are unwrapped continuously from delta(0+) = 0; derivatives come
from closed forms via the Riccati Wronskian, with a finite-difference
fallback used by the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import formsphere, specfun

__all__ = [
    "Channel",
    "PhaseShiftCurve",
    "InteriorSpectrum",
    "ChannelSelection",
    "PhaseUnwrapError",
    "s_value",
    "s_values",
    "phase_shift",
    "phase_shift_derivative",
    "phase_curve",
    "interior_eigenvalues",
    "channels_for",
]

POL_DIRICHLET = "dirichlet"   # TE-type: radial function vanishes at r = a
POL_TM = "tm"                 # radial derivative vanishes at r = a
POL_NORMAL = "normal"         # longitudinal block, equals the scalar channel
POL_NEUMANN = "neumann"       # dual scalar family ((u/r)' = 0), symmetry tests only

_POLS = (POL_DIRICHLET, POL_TM, POL_NORMAL, POL_NEUMANN)

# boundary-condition kind per (p, pol); the value is used to pick the radial pair
_BC_PSI = "psi"
_BC_DPSI = "dpsi"
_BC_ROBIN = "robin"


class PhaseUnwrapError(RuntimeError):
    """An unresolved branch jump while unwrapping a phase-shift curve."""


@dataclass(frozen=True)
class Channel:
    """One partial-wave scattering problem for the ball of radius a."""

    pol: str
    l: int
    p: int = 1
    a: float = 1.0
    mult: int = -1

    def __post_init__(self) -> None:
        if self.pol not in _POLS:
            raise ValueError(f"pol must be one of {_POLS}")
        if self.l < 0 or self.a <= 0:
            raise ValueError("need l >= 0 and a > 0")
        if self.p not in (0, 1, 2, 3):
            raise ValueError("form degree must be 0..3")
        allowed_pols = {
            0: (POL_DIRICHLET,),
            1: (POL_DIRICHLET, POL_TM, POL_NORMAL),
            2: (POL_DIRICHLET, POL_TM, POL_NEUMANN),
            3: (POL_NORMAL,),
        }[self.p]
        if self.pol not in allowed_pols:
            raise ValueError(f"degree-{self.p} channels admit polarizations {allowed_pols}")
        if self.p in (1, 2) and self.pol in (POL_DIRICHLET, POL_TM) and self.l < 1:
            raise ValueError("tangential channels need l >= 1")
        if self.mult == -1:
            object.__setattr__(self, "mult", 2 * self.l + 1)

    @property
    def bc(self) -> str:
        if self.pol in (POL_DIRICHLET, POL_NORMAL) and self.p != 3:
            return _BC_PSI
        if self.pol == POL_TM:
            return _BC_DPSI
        return _BC_ROBIN  # neumann family and its p = 3 shadow

    def label(self) -> str:
        tag = {POL_DIRICHLET: "D" if self.p == 0 else "TE", POL_TM: "TM",
               POL_NORMAL: "N", POL_NEUMANN: "NEU"}[self.pol]
        return f"{tag}{self.l}"


def _bc_pair(ch: Channel, x: np.ndarray):
    """Real pair (A, B) with S = -(A + iB)/(A - iB) at argument x = lam * a."""
    psi, dpsi, chi, dchi = specfun.riccati_jy(ch.l, x)
    if ch.bc == _BC_PSI:
        return psi, chi
    if ch.bc == _BC_DPSI:
        return dpsi, dchi
    return dpsi - psi / x, dchi - chi / x


def _bc_pair_scaled(ch: Channel, x: float):
    """Scaled (A, B, e) for the evanescent regime; true values = value * 2**e."""
    p, dp, ep = specfun.riccati_psi_scaled(ch.l, x)
    c, dc, ec = specfun.riccati_chi_scaled(ch.l, x)
    if ch.bc == _BC_PSI:
        a_m, ea = p, ep
        b_m, eb = c, ec
    elif ch.bc == _BC_DPSI:
        a_m, ea = dp, ep
        b_m, eb = dc, ec
    else:
        a_m, ea = dp - p / x, ep
        b_m, eb = dc - c / x, ec
    e = max(ea, eb)
    return math.ldexp(a_m, ea - e), math.ldexp(b_m, eb - e), e


def s_value(ch: Channel, lam: float) -> complex:
    """Scattering-matrix eigenvalue of the channel at lam > 0; |S| = 1."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    x = lam * ch.a
    A, B = _bc_pair(ch, x)
    A, B = float(A), float(B)
    m = max(abs(A), abs(B))
    if not (math.isfinite(m) and 1e-150 < m < 1e150):
        A, B, _ = _bc_pair_scaled(ch, x)
        m = max(abs(A), abs(B))
    A /= m
    B /= m
    return -(A + 1j * B) / (A - 1j * B)


def s_values(ch: Channel, lam: np.ndarray) -> np.ndarray:
    """Vectorized s_value over a grid of positive lam."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("lam must be positive")
    A, B = _bc_pair(ch, lam * ch.a)
    m = np.maximum(np.abs(A), np.abs(B))
    ok = np.isfinite(m) & (m > 1e-150) & (m < 1e150)
    out = np.empty(lam.shape, dtype=complex)
    An, Bn = np.where(ok, A, 1.0) / np.where(ok, m, 1.0), np.where(ok, B, 1.0) / np.where(ok, m, 1.0)
    out[...] = -(An + 1j * Bn) / (An - 1j * Bn)
    for i in np.nonzero(~ok.ravel())[0]:
        out.ravel()[i] = s_value(ch, float(lam.ravel()[i]))
    return out


def phase_shift_derivative(ch: Channel, lam) -> float | np.ndarray:
    """d(delta)/d(lam), in closed form through the Riccati Wronskian.

    For the Dirichlet pair the numerator is the Wronskian itself; for the
    derivative pairs it is 1 - l(l+1)/x^2 by the radial equation.
    """
    la = np.asarray(lam, dtype=float)
    if np.any(la <= 0):
        raise ValueError("lam must be positive")
    x = la * ch.a
    A, B = _bc_pair(ch, x)
    if ch.bc == _BC_PSI:
        w = np.ones_like(x)
    else:
        w = 1.0 - ch.l * (ch.l + 1) / (x * x)
    m = np.maximum(np.abs(A), np.abs(B))
    m = np.where((m == 0) | ~np.isfinite(m), 1.0, m)
    den = (A / m) ** 2 + (B / m) ** 2
    with np.errstate(over="ignore", under="ignore"):
        val = -(ch.a * w / m) / m / den
    val = np.where(np.isfinite(val), val, 0.0)
    return val if val.ndim else float(val)


def _tan_ratio(ch: Channel, lam: float) -> float:
    x = lam * ch.a
    A, B = _bc_pair(ch, x)
    A, B = float(A), float(B)
    if not (math.isfinite(A) and math.isfinite(B)) or max(abs(A), abs(B)) > 1e150:
        A, B, _ = _bc_pair_scaled(ch, x)
    with np.errstate(divide="ignore"):
        return float(np.float64(-A) / np.float64(B))


def _march(ch: Channel, lam_grid: np.ndarray, collect=None) -> float:
    """Continuous phase along an increasing grid starting near 0.

    Branch counting uses the closed-form derivative to predict each step and
    snaps the principal value atan(-A/B) onto the pi-lattice; steps that
    cannot be resolved within pi/3 are bisected, and persistent failures
    raise PhaseUnwrapError.
    """
    lam0 = lam_grid[0]
    delta = math.atan(_tan_ratio(ch, lam0))
    if collect is not None:
        collect(lam0, delta, float(phase_shift_derivative(ch, lam0)))
    prev = lam0
    queue = list(lam_grid[1:])
    i = 0
    guard = 0
    while i < len(queue):
        lam = queue[i]
        h = lam - prev
        dprev = float(phase_shift_derivative(ch, prev))
        pred = delta + dprev * h
        principal = math.atan(_tan_ratio(ch, lam))
        k = round((pred - principal) / math.pi)
        cand = principal + k * math.pi
        if abs(cand - pred) > math.pi / 3 and h > 1e-12 * max(1.0, lam):
            queue.insert(i, prev + 0.5 * h)
            guard += 1
            if guard > 10_000:
                raise PhaseUnwrapError(
                    f"phase refinement stalled for {ch.label()} near lam={lam:.6g}"
                )
            continue
        if abs(cand - pred) > math.pi / 2:
            raise PhaseUnwrapError(
                f"unresolved pi-jump for {ch.label()} at lam={lam:.6g}: "
                f"predicted {pred:.6g}, snapped {cand:.6g}"
            )
        delta, prev = cand, lam
        if collect is not None:
            collect(lam, delta, float(phase_shift_derivative(ch, lam)))
        i += 1
    return delta


def _anchor(ch: Channel, lam: float) -> float:
    return min(1e-3 / ch.a, 0.5 * lam)


def phase_shift(ch: Channel, lam: float) -> float:
    """Unwrapped phase shift with delta(0+) = 0."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    lam0 = _anchor(ch, lam)
    if lam <= lam0:
        return math.atan(_tan_ratio(ch, lam))
    step = 0.4 * math.pi / ch.a
    n = max(2, int(math.ceil((lam - lam0) / step)) + 1)
    grid = np.linspace(lam0, lam, n)
    return _march(ch, grid)


@dataclass(frozen=True)
class PhaseShiftCurve:
    """Sampled continuous phase curve (lam, delta, delta') for one channel."""

    channel: Channel
    lam: np.ndarray
    delta: np.ndarray
    ddelta: np.ndarray

    def validate(self, s_tol: float = 1e-10) -> float:
        """Max |e^(2 i delta) - S| over the samples; also enforces jump < pi/2."""
        jumps = np.abs(np.diff(self.delta))
        if jumps.size and float(jumps.max()) >= math.pi / 2:
            raise PhaseUnwrapError(
                f"adjacent samples jump by {jumps.max():.3f} >= pi/2 for {self.channel.label()}"
            )
        s = s_values(self.channel, self.lam)
        resid = float(np.max(np.abs(np.exp(2j * self.delta) - s)))
        if resid > s_tol:
            raise PhaseUnwrapError(
                f"curve does not reproduce S for {self.channel.label()}: residual {resid:.3e}"
            )
        return resid


def phase_curve(ch: Channel, lam_max: float, n_min: int = 64) -> PhaseShiftCurve:
    """Build a continuous phase curve on (0, lam_max]."""
    if lam_max <= 0:
        raise ValueError("lam_max must be positive")
    lam0 = _anchor(ch, lam_max)
    step = min(0.4 * math.pi / ch.a, (lam_max - lam0) / max(n_min - 1, 1))
    n = max(2, int(math.ceil((lam_max - lam0) / step)) + 1)
    grid = np.linspace(lam0, lam_max, n)
    rows: list[tuple[float, float, float]] = []
    _march(ch, grid, collect=lambda l, d, dd: rows.append((l, d, dd)))
    arr = np.asarray(rows, dtype=float)
    curve = PhaseShiftCurve(channel=ch, lam=arr[:, 0], delta=arr[:, 1], ddelta=arr[:, 2])
    curve.validate()
    return curve


# ---------------------------------------------------------------------------
# Interior spectra
# ---------------------------------------------------------------------------

FAMILY_DIRICHLET = "dirichlet"
FAMILY_TE = "maxwell-te"
FAMILY_TM = "maxwell-tm"

_FAMILIES = (FAMILY_DIRICHLET, FAMILY_TE, FAMILY_TM)


@dataclass(frozen=True)
class InteriorSpectrum:
    """Cavity eigenvalue parameters mu <= cutoff with their multiplicities."""

    family: str
    a: float
    cutoff: float
    entries: tuple[tuple[int, float, int], ...]  # (l, mu, mult)

    def weighted_sum(self, f) -> float:
        """sum mult * mu^2 f(mu); the mu = 0 modes never enter (weight vanishes)."""
        return float(sum(m * mu * mu * f(mu) for _, mu, m in self.entries))


def interior_eigenvalues(family: str, a: float, lam_max: float, *, grid: float = 0.25) -> InteriorSpectrum:
    """All cavity eigenvalue parameters mu <= lam_max for the given family.

    dirichlet: zeros of psi_l (l >= 0); maxwell-te: zeros of psi_l (l >= 1);
    maxwell-tm: zeros of psi_l' (l >= 1).  Multiplicity 2l + 1 per degree.
    Completeness is enforced by gap sanity checks on the refined zeros.
    """
    if family not in _FAMILIES:
        raise ValueError(f"family must be one of {_FAMILIES}")
    if a <= 0 or lam_max <= 0:
        raise ValueError("need a > 0 and lam_max > 0")
    xmax = lam_max * a
    l = 0 if family == FAMILY_DIRICHLET else 1
    entries: list[tuple[int, float, int]] = []
    while True:
        if family == FAMILY_TM:
            target = lambda xs, l=l: specfun.riccati_jy(l, xs)[1]
        else:
            target = lambda xs, l=l: specfun.riccati_jy(l, xs)[0]
        lo = max(0.05, 0.25 * grid)
        if lo >= xmax:
            break
        zl = specfun.find_zeros(target, lo, xmax, grid=grid, target=f"{family} l={l}")
        if zl.anomalies:
            raise RuntimeError(f"near-tangent sign anomaly in {family} l={l}: {zl.anomalies}")
        xs = zl.as_array()
        if xs.size == 0:
            break
        gaps = np.diff(xs)
        if gaps.size and (gaps.min() < 2.4 or gaps.max() > 5.0):
            raise RuntimeError(f"implausible zero spacing for {family} l={l}")
        for x in xs:
            entries.append((l, float(x) / a, 2 * l + 1))
        l += 1
    entries.sort(key=lambda t: (t[1], t[0]))
    return InteriorSpectrum(family=family, a=a, cutoff=lam_max, entries=tuple(entries))


# ---------------------------------------------------------------------------
# Channel selection with tail accounting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelSelection:
    """Channels kept for a trace computation, plus the omitted-tail estimate."""

    p: int
    q: str
    a: float
    tail_tol: float
    lambda_f: float
    l_max: int
    channels: tuple[Channel, ...]
    tail_bound: float


def _low_energy_amplitude(l: int, x: float) -> float:
    """Crude |delta_l| bound ~ x^(2l+1) / ((2l+1)!! (2l-1)!!) used for tails."""
    if x <= 0:
        return 0.0
    log_df = 0.0
    for k in range(3, 2 * l + 2, 2):
        log_df += math.log(k)
    log_df2 = 0.0
    for k in range(3, 2 * l, 2):
        log_df2 += math.log(k)
    t = (2 * l + 1) * math.log(x) - log_df - log_df2
    return math.exp(t) if t < 700 else math.inf


def channels_for(p: int, f, a: float, tail_tol: float, q: str = "delta_d") -> ChannelSelection:
    """Channels with l <= l_max = ceil(X + 4 X^(1/3) + 8), X = a * support of lam^2 f.

    q = "delta_d" keeps the tangential families (TE and TM for p = 1, the
    scalar family for p = 0); q = "d_delta" keeps the longitudinal family.
    The omitted tail is bounded through the low-energy suppression law and
    reported, never silently dropped.
    """
    if q not in ("delta_d", "d_delta"):
        raise ValueError("q must be 'delta_d' or 'd_delta'")
    if p not in (0, 1):
        raise ValueError("trace channels are provided for p in {0, 1}")
    if tail_tol <= 0:
        raise ValueError("tail_tol must be positive")
    lam_f = f.support_radius(tail_tol)
    X = lam_f * a
    l_max = int(math.ceil(X + 4.0 * X ** (1.0 / 3.0) + 8.0)) if X > 0 else 8

    channels: list[Channel] = []
    if p == 0:
        if q == "delta_d":
            channels = [Channel(POL_DIRICHLET, l, p=0, a=a) for l in range(l_max + 1)]
        else:
            channels = []  # d delta vanishes on functions
    else:
        if q == "delta_d":
            for l in range(1, l_max + 1):
                channels.append(Channel(POL_DIRICHLET, l, p=1, a=a))
                channels.append(Channel(POL_TM, l, p=1, a=a))
        else:
            channels = [Channel(POL_NORMAL, l, p=1, a=a) for l in range(l_max + 1)]

    # multiplicities must agree with the harmonic tables
    fam_index = {POL_DIRICHLET: 0, POL_TM: 1, POL_NORMAL: 2}
    for ch in channels:
        table = formsphere.channel_multiplicities(p, ch.l)
        if table[fam_index[ch.pol]].count != ch.mult:
            raise AssertionError("channel multiplicity disagrees with the harmonic table")

    # omitted tail: per-channel phase bound times the integrated weight
    # (1/pi) int |(lam^2 f)'| dlam, summed with multiplicities over 40 extra l
    lam_hi = max(lam_f, 1e-6)
    grid = np.linspace(1e-6, lam_hi, 2048)
    w = grid * grid * f(grid)
    weight_var = float(np.sum(np.abs(np.diff(w))))
    tail = 0.0
    n_fams = 2 if (p == 1 and q == "delta_d") else 1
    for l in range(l_max + 1, l_max + 41):
        amp = _low_energy_amplitude(l, X)
        tail += n_fams * (2 * l + 1) * 2.0 * amp * weight_var / math.pi
    return ChannelSelection(
        p=p,
        q=q,
        a=a,
        tail_tol=tail_tol,
        lambda_f=lam_f,
        l_max=l_max,
        channels=tuple(channels),
        tail_bound=tail,
    )
