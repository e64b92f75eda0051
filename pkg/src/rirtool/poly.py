"""Real-coefficient polynomials: arithmetic, roots and half-plane tests.

Coefficients are stored in ascending degree order, ``c[0] + c[1] s + ...``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import NonConvergence, ZeroPolynomial

TAU_AXIS = 1e-8
TAU_PIVOT = 1e-10
GCD_RTOL = 1e-10

OLHP = "OLHP"
ORHP = "ORHP"
AXIS = "AXIS"


def _as_coeffs(coeffs) -> np.ndarray:
    c = np.atleast_1d(np.asarray(coeffs, dtype=float)).copy()
    if c.ndim != 1:
        raise ValueError("polynomial coefficients must be one-dimensional")
    if c.size == 0:
        c = np.zeros(1)
    if not np.all(np.isfinite(c)):
        raise ValueError("polynomial coefficients must be finite")
    nz = np.flatnonzero(c)
    c = c[: nz[-1] + 1] if nz.size else np.zeros(1)
    c.flags.writeable = False
    return c


@dataclass(frozen=True, eq=False)
class RealPolynomial:
    """Immutable real polynomial with ascending coefficients."""

    coeffs: np.ndarray

    def __init__(self, coeffs: Iterable[float] | float):
        object.__setattr__(self, "coeffs", _as_coeffs(coeffs))

    @classmethod
    def from_roots(cls, roots: Sequence[complex], lead: float = 1.0) -> "RealPolynomial":
        c = npoly.polyfromroots(list(roots)) if len(roots) else np.ones(1)
        return cls(lead * np.real_if_close(c, tol=1e6).real)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def lead(self) -> float:
        return float(self.coeffs[-1])

    def is_zero(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 0.0

    def norm(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def __call__(self, s):
        return npoly.polyval(s, self.coeffs)

    def __repr__(self) -> str:
        return f"RealPolynomial({self.coeffs.tolist()})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, RealPolynomial):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self) -> int:
        return hash(self.coeffs.tobytes())

    # arithmetic -----------------------------------------------------------
    @staticmethod
    def _coerce(other) -> np.ndarray:
        if isinstance(other, RealPolynomial):
            return other.coeffs
        return np.atleast_1d(np.asarray(other, dtype=float))

    def __add__(self, other):
        return RealPolynomial(npoly.polyadd(self.coeffs, self._coerce(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return RealPolynomial(npoly.polysub(self.coeffs, self._coerce(other)))

    def __rsub__(self, other):
        return RealPolynomial(npoly.polysub(self._coerce(other), self.coeffs))

    def __mul__(self, other):
        return RealPolynomial(npoly.polymul(self.coeffs, self._coerce(other)))

    __rmul__ = __mul__

    def __neg__(self):
        return RealPolynomial(-self.coeffs)

    def __divmod__(self, other):
        den = self._coerce(other)
        if not np.any(den):
            raise ZeroPolynomial("division by the zero polynomial")
        q, r = npoly.polydiv(self.coeffs, den)
        return RealPolynomial(q), RealPolynomial(r)

    def deriv(self) -> "RealPolynomial":
        if self.degree == 0:
            return RealPolynomial([0.0])
        return RealPolynomial(npoly.polyder(self.coeffs))

    def monic(self) -> "RealPolynomial":
        _require_nonzero(self)
        return RealPolynomial(self.coeffs / self.lead)

    def trim(self, rtol: float) -> "RealPolynomial":
        """Drop leading coefficients that are negligible relative to the largest one."""
        c = np.array(self.coeffs)
        scale = np.max(np.abs(c))
        while c.size > 1 and abs(c[-1]) <= rtol * scale:
            c = c[:-1]
        return RealPolynomial(c)

    def scaled_residual(self, s) -> np.ndarray:
        """|p(s)| divided by the evaluation-scale sum of |c_i||s|^i."""
        s = np.asarray(s)
        scale = npoly.polyval(np.abs(s), np.abs(self.coeffs))
        return np.abs(self(s)) / np.where(scale > 0, scale, 1.0)


def _require_nonzero(p: RealPolynomial) -> None:
    if p.is_zero():
        raise ZeroPolynomial("operation requires a nonzero polynomial")


@dataclass(frozen=True)
class RootSet:
    roots: np.ndarray
    tags: tuple[str, ...]
    tau_axis: float = TAU_AXIS

    @property
    def counts(self) -> tuple[int, int, int]:
        return (self.tags.count(OLHP), self.tags.count(ORHP), self.tags.count(AXIS))

    def __len__(self) -> int:
        return len(self.roots)


def tag_root(r: complex, tau_axis: float = TAU_AXIS) -> str:
    if abs(r.real) <= tau_axis * max(1.0, abs(r)):
        return AXIS
    return OLHP if r.real < 0 else ORHP


def _enforce_conjugates(r: np.ndarray) -> np.ndarray:
    r = r.astype(complex).copy()
    small = np.abs(r.imag) <= 1e-12 * np.maximum(1.0, np.abs(r))
    r[small] = r[small].real
    upper = [i for i in range(r.size) if r[i].imag > 0]
    lower = [i for i in range(r.size) if r[i].imag < 0]
    for i in upper:
        if not lower:
            break
        j = min(lower, key=lambda jj: abs(r[jj] - np.conj(r[i])))
        lower.remove(j)
        avg = 0.5 * (r[i] + np.conj(r[j]))
        r[i], r[j] = avg, np.conj(avg)
    return r


def companion_roots(c: np.ndarray) -> np.ndarray:
    """Eigenvalues of the companion matrix of ascending coefficients ``c``."""
    n = c.size - 1
    if n < 1:
        return np.zeros(0, dtype=complex)
    m = c[:-1] / c[-1]
    comp = np.zeros((n, n))
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -m
    try:
        return np.linalg.eigvals(comp)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(str(exc)) from exc


def roots(p: RealPolynomial, tau_axis: float = TAU_AXIS) -> RootSet:
    """All complex roots of ``p``, polished by one Newton step and tagged by half-plane."""
    _require_nonzero(p)
    c = p.monic().coeffs
    nzero = int(np.flatnonzero(c)[0])
    found = companion_roots(np.asarray(c[nzero:]))
    dp = p.deriv()
    polished = []
    for r in found:
        f = p(r)
        d = dp(r)
        if d != 0:
            cand = r - f / d
            if abs(p(cand)) < abs(f):
                r = cand
        polished.append(r)
    out = np.concatenate([np.zeros(nzero, dtype=complex), np.asarray(polished, dtype=complex)])
    out = _enforce_conjugates(out)
    order = np.lexsort((out.imag, out.real))
    out = out[order]
    out.flags.writeable = False
    return RootSet(out, tuple(tag_root(r, tau_axis) for r in out), tau_axis)


def classify(p: RealPolynomial, tau_axis: float = TAU_AXIS) -> tuple[int, int, int]:
    """(n_olhp, n_orhp, n_axis) counts of the roots of ``p``."""
    _require_nonzero(p)
    if p.degree == 0:
        return (0, 0, 0)
    return roots(p, tau_axis).counts


def hurwitz(p: RealPolynomial, tau_pivot: float = TAU_PIVOT, tau_axis: float = TAU_AXIS) -> bool:
    """True iff every root of ``p`` lies strictly in the open left half-plane.

    Routh tabulation; falls back on explicit roots when a pivot is nearly zero.
    """
    _require_nonzero(p)
    if p.degree == 0:
        return True
    a = p.coeffs[::-1] / p.lead
    if np.any(a <= 0):
        return False
    n = p.degree
    prev = a[0::2].astype(float)
    cur = a[1::2].astype(float)
    for _ in range(n):
        scale = max(np.max(np.abs(cur)) if cur.size else 0.0, np.max(np.abs(prev)))
        if cur.size == 0:
            break
        if abs(cur[0]) <= tau_pivot * scale:
            return classify(p, tau_axis) == (n, 0, 0)
        if cur[0] < 0:
            return False
        m = max(prev.size - 1, cur.size - 1)
        nxt = np.zeros(m)
        for i in range(m):
            p_next = prev[i + 1] if i + 1 < prev.size else 0.0
            c_next = cur[i + 1] if i + 1 < cur.size else 0.0
            nxt[i] = p_next - prev[0] / cur[0] * c_next
        prev, cur = cur, nxt[: max(0, m)]
        while cur.size and cur[-1] == 0 and cur.size > 1:
            cur = cur[:-1]
    return True


def gcd(a: RealPolynomial, b: RealPolynomial, rtol: float = GCD_RTOL) -> RealPolynomial:
    """Monic greatest common divisor by Euclid with relative remainder cutoff."""
    _require_nonzero(a)
    _require_nonzero(b)
    x = a.coeffs / a.norm()
    y = b.coeffs / b.norm()
    if x.size < y.size:
        x, y = y, x
    while y.size > 1:
        _, r = npoly.polydiv(x, y)
        r = np.atleast_1d(r)
        if np.max(np.abs(r)) <= rtol * max(1.0, np.max(np.abs(x))):
            return RealPolynomial(y / y[-1])
        r = RealPolynomial(r).trim(1e-14).coeffs
        x, y = y, r / np.max(np.abs(r))
    return RealPolynomial([1.0])
