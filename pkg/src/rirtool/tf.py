"""Rational transfer functions: evaluation, L-infinity norm, PIP and loop algebra."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import poly
from .errors import (
    AxisPole,
    CancellationDetected,
    Improper,
    PoleAtOrigin,
    PoleHit,
    ZeroPolynomial,
)
from .poly import RealPolynomial

REAL_ZERO_TOL = 1e-8
CANCEL_TOL = 1e-6


def _poly(x) -> RealPolynomial:
    return x if isinstance(x, RealPolynomial) else RealPolynomial(x)


@dataclass(frozen=True, eq=False)
class RationalTF:
    """num(s)/den(s) kept in coprime form with a monic denominator."""

    num: RealPolynomial
    den: RealPolynomial

    def __init__(self, num, den=1.0, reduce: bool = True):
        n, d = _poly(num), _poly(den)
        if d.is_zero():
            raise ZeroPolynomial("transfer function denominator is zero")
        if n.is_zero():
            n, d = RealPolynomial([0.0]), RealPolynomial([1.0])
        elif reduce and n.degree > 0 and d.degree > 0:
            g = poly.gcd(n, d)
            if g.degree > 0:
                n, _ = divmod(n, g)
                d, _ = divmod(d, g)
        lead = d.lead
        object.__setattr__(self, "num", RealPolynomial(n.coeffs / lead))
        object.__setattr__(self, "den", RealPolynomial(d.coeffs / lead))

    def __repr__(self) -> str:
        return f"RationalTF(num={self.num.coeffs.tolist()}, den={self.den.coeffs.tolist()})"

    @property
    def relative_degree(self) -> int:
        return self.den.degree - self.num.degree if not self.num.is_zero() else self.den.degree + 1

    def is_proper(self) -> bool:
        return self.num.is_zero() or self.num.degree <= self.den.degree

    def is_strictly_proper(self) -> bool:
        return self.num.is_zero() or self.num.degree < self.den.degree

    def poles(self, tau_axis: float = poly.TAU_AXIS) -> poly.RootSet:
        return poly.roots(self.den, tau_axis) if self.den.degree else poly.RootSet(np.zeros(0, complex), ())

    def zeros(self, tau_axis: float = poly.TAU_AXIS) -> poly.RootSet:
        if self.num.is_zero() or self.num.degree == 0:
            return poly.RootSet(np.zeros(0, complex), ())
        return poly.roots(self.num, tau_axis)

    def __call__(self, s):
        return evaluate(self, s)

    # algebra ---------------------------------------------------------------
    def __mul__(self, other):
        if isinstance(other, RationalTF):
            return RationalTF(self.num * other.num, self.den * other.den)
        return RationalTF(self.num * float(other), self.den)

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, RationalTF):
            other = RationalTF([float(other)])
        return RationalTF(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalTF(-self.num, self.den, reduce=False)

    def __sub__(self, other):
        return self + (-other if isinstance(other, RationalTF) else -float(other))

    def to_dict(self) -> dict:
        return {"num": self.num.coeffs.tolist(), "den": self.den.coeffs.tolist()}


@dataclass(frozen=True)
class NormConfig:
    tau_axis: float = poly.TAU_AXIS
    imag_tol: float = 1e-7
    closed_form: bool = True  # use the third-order cubic when it applies


@dataclass(frozen=True)
class NormResult:
    linf: float
    omega_peak: float
    certified: bool = False
    candidates: tuple = field(default=(), repr=False)


def parse_tf(text: str) -> RationalTF:
    """Parse ``"num: c0,c1,...; den: d0,d1,..."`` (ascending powers of s)."""
    parts = {}
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        m = re.fullmatch(r"(num|den)\s*:\s*(.+)", chunk)
        if not m:
            raise ValueError(f"cannot parse transfer function fragment {chunk!r}")
        parts[m.group(1)] = [float(v) for v in m.group(2).split(",")]
    if set(parts) != {"num", "den"}:
        raise ValueError("transfer function text needs both 'num:' and 'den:' parts")
    return RationalTF(parts["num"], parts["den"])


def format_tf(g: RationalTF) -> str:
    fmt = lambda c: ",".join(repr(float(v)) for v in c)
    return f"num: {fmt(g.num.coeffs)}; den: {fmt(g.den.coeffs)}"


def evaluate(g: RationalTF, s):
    """g(s) with reversed-coefficient evaluation for |s| > 1 to avoid overflow."""
    s = np.asarray(s, dtype=complex)
    n, d = g.num.coeffs, g.den.coeffs
    big = np.abs(s) > 1.0
    out = np.empty(s.shape, dtype=complex)
    if np.any(~big):
        sl = s[~big]
        dv = np.polynomial.polynomial.polyval(sl, d)
        nv = np.polynomial.polynomial.polyval(sl, n)
        _check_pole(dv, np.polynomial.polynomial.polyval(np.abs(sl), np.abs(d)))
        out[~big] = nv / dv
    if np.any(big):
        sb = s[big]
        z = 1.0 / sb
        dv = np.polynomial.polynomial.polyval(z, d[::-1])
        nv = np.polynomial.polynomial.polyval(z, n[::-1])
        _check_pole(dv, np.polynomial.polynomial.polyval(np.abs(z), np.abs(d[::-1])))
        out[big] = nv / dv * sb ** (n.size - d.size)
    return out[()] if out.ndim == 0 else out


def _check_pole(dv, scale):
    if np.any(np.abs(dv) <= 1e-15 * scale):
        raise PoleHit("evaluation point coincides with a pole")


def _abs2_in_omega_sq(c: np.ndarray) -> np.ndarray:
    """Coefficients (ascending in W = w^2) of |c(jw)|^2."""
    neg = c * (-1.0) ** np.arange(c.size)
    prod = np.polynomial.polynomial.polymul(c, neg)
    even = prod[0::2]
    return even * (-1.0) ** np.arange(even.size)


def _require_no_axis_poles(g: RationalTF, tau_axis: float) -> poly.RootSet:
    ps = g.poles(tau_axis)
    if ps.counts[2]:
        raise AxisPole("transfer function has poles on the imaginary axis")
    return ps


def linf_norm(g: RationalTF, cfg: NormConfig = NormConfig()) -> NormResult:
    """sup over w of |g(jw)| by enumerating stationary points of |g|^2 in W = w^2."""
    if not g.is_proper():
        raise Improper("L-infinity norm of an improper transfer function is unbounded")
    _require_no_axis_poles(g, cfg.tau_axis)
    if g.num.is_zero():
        return NormResult(0.0, 0.0)

    from .rir_fixed import ThirdOrderCoeffs, condition2_check, peak_frequency_cubic

    third = ThirdOrderCoeffs.from_tf(g) if cfg.closed_form else None
    if third is not None and condition2_check(third):
        wp = peak_frequency_cubic(third)
        return NormResult(float(abs(evaluate(g, 1j * wp))), wp, certified=True, candidates=(wp,))

    N = RealPolynomial(_abs2_in_omega_sq(g.num.coeffs))
    D = RealPolynomial(_abs2_in_omega_sq(g.den.coeffs))
    t1, t2 = N.deriv() * D, N * D.deriv()
    scale = max(t1.norm(), t2.norm())
    c = (t1 - t2).coeffs.copy()
    if np.all(np.abs(c) <= 1e-12 * scale):
        c[:] = 0.0
    if N.degree == D.degree and c.size == N.degree + D.degree:
        c = c[:-1]  # leading terms cancel exactly; anything else small is a real coefficient
    while c.size > 1 and c[-1] == 0.0:
        c = c[:-1]
    stat = RealPolynomial(c)
    cand = [0.0]
    if stat.degree > 0:
        for W in poly.roots(stat).roots:
            if W.real > 0 and abs(W.imag) <= cfg.imag_tol * max(1.0, abs(W)):
                cand.append(float(np.sqrt(W.real)))
    vals = np.abs(evaluate(g, 1j * np.asarray(cand)))
    i = int(np.argmax(vals))
    best, wbest = float(vals[i]), cand[i]
    if g.num.degree == g.den.degree:
        at_inf = abs(g.num.lead / g.den.lead)
        if at_inf > best * (1 + 1e-12):
            best, wbest = at_inf, float("inf")
    return NormResult(best, wbest, certified=False, candidates=tuple(cand))


def pip(g: RationalTF, tau_axis: float = poly.TAU_AXIS) -> bool:
    """Parity interlacing: even count of real ORHP poles between real closed-RHP zeros."""
    ps = _require_no_axis_poles(g, tau_axis)
    real_tol = lambda z: abs(z.imag) <= REAL_ZERO_TOL * (1 + abs(z))
    zs = [z.real for z in g.zeros(tau_axis).roots if real_tol(z) and z.real >= -tau_axis * max(1.0, abs(z))]
    if g.is_strictly_proper():
        zs.append(np.inf)
    pr = [p.real for p, t in zip(ps.roots, ps.tags) if t == poly.ORHP and real_tol(p)]
    zs.sort()
    for lo, hi in zip(zs[:-1], zs[1:]):
        if sum(1 for p in pr if lo < p < hi) % 2:
            return False
    return True


def static_gain(g: RationalTF) -> float:
    d0 = g.den.coeffs[0]
    if abs(d0) <= 1e-14 * g.den.norm():
        raise PoleAtOrigin("transfer function has a pole at s = 0")
    return float(g.num.coeffs[0] / d0)


def _shared_unstable_root(a: RealPolynomial, b: RealPolynomial, tau_axis: float):
    if a.is_zero() or b.is_zero() or a.degree == 0 or b.degree == 0:
        return None
    ra = [r for r in poly.roots(a, tau_axis).roots if r.real >= -tau_axis * max(1.0, abs(r))]
    if not ra:
        return None
    rb = poly.roots(b, tau_axis).roots
    for r in ra:
        if np.any(np.abs(rb - r) <= CANCEL_TOL * (1 + abs(r))):
            return r
    return None


def feedback_charpoly(g: RationalTF, d: RationalTF, tau_axis: float = poly.TAU_AXIS) -> RealPolynomial:
    """Characteristic polynomial den_d*den_g - num_d*num_g of the positive-feedback loop.

    Raises CancellationDetected if g and d share a closed right-half-plane root
    between a pole of one and a zero of the other.
    """
    for a, b in ((g.den, d.num), (g.num, d.den)):
        r = _shared_unstable_root(a, b, tau_axis)
        if r is not None:
            raise CancellationDetected(r)
    return d.den * g.den - d.num * g.num


def charpoly_coeffs(g: RationalTF, d_num: Sequence[float], d_den: Sequence[float]) -> np.ndarray:
    """Raw coefficients of the loop polynomial without cancellation checks (hot paths)."""
    P = np.polynomial.polynomial
    return P.polysub(P.polymul(d_den, g.den.coeffs), P.polymul(d_num, g.num.coeffs))
