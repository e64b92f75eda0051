"""Robust instability radius of a fixed unstable plant.

Lower bounds come from the peak gain and (for an odd number of unstable
poles) the static gain.  Upper bounds come from first-order all-pass
perturbations that place a single closed-loop mode on the imaginary axis
at a critical frequency; sweeping that frequency gives the least upper bound
available from this perturbation class.  Third-order plants with a linear
numerator have closed-form exact answers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import poly
from .errors import (
    AxisPole,
    CancellationDetected,
    InconsistentSystem,
    NonPositiveSolution,
    NoPositiveRoot,
    NoStrictification,
    PhaseSingular,
    PreconditionError,
    StableInput,
    ZeroAtOmega,
)
from .poly import RealPolynomial
from .tf import RationalTF, evaluate, feedback_charpoly, linf_norm, pip, static_gain

PEAK_GAIN = "PEAK_GAIN"
STATIC_GAIN = "STATIC_GAIN"
SWEEP = "SWEEP"

EXACT_RTOL = 1e-6
PHASE_EPS = 1e-12
GOLDEN_ITERS = 30


def default_omega_grid() -> np.ndarray:
    return np.concatenate([[0.0], np.logspace(-3, 3, 2000)])


def tau_marginal(omega_c: float) -> float:
    return 1e-6 * (1.0 + omega_c)


@dataclass(frozen=True)
class AllPass1:
    """b (s - a)/(s + a) with a >= 0; a == 0 is the constant b."""

    a: float
    b: float
    omega_c: Optional[float] = None

    @property
    def tf(self) -> RationalTF:
        if self.a == 0.0:
            return RationalTF([self.b])
        return RationalTF([-self.b * self.a, self.b], [self.a, 1.0])

    @property
    def hinf(self) -> float:
        return abs(self.b)

    def __call__(self, s):
        if self.a == 0.0:
            return self.b + 0j * np.asarray(s)
        return self.b * (s - self.a) / (s + self.a)

    def scaled(self, factor: float) -> "AllPass1":
        return AllPass1(self.a, self.b * factor, self.omega_c)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "omega_c": self.omega_c, **self.tf.to_dict()}


@dataclass(frozen=True)
class StabilityReport:
    ok: bool
    omega_c: float
    counts: tuple[int, int, int]
    roots: np.ndarray = field(repr=False)
    marginal_error: float = float("nan")


@dataclass(frozen=True)
class RirResult:
    rho_lower: float
    rho_upper: float
    exact: bool
    certificate: Optional[AllPass1]
    bound_source: str
    pip_ok: bool
    rho_p: float = float("nan")
    rho_o: Optional[float] = None
    omega_p: float = float("nan")
    sweep: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        inf_str = lambda v: "inf" if v is not None and math.isinf(v) else v
        return {
            "rho_lower": self.rho_lower,
            "rho_upper": inf_str(self.rho_upper),
            "exact": self.exact,
            "bound_source": self.bound_source,
            "pip_ok": self.pip_ok,
            "rho_p": self.rho_p,
            "rho_o": self.rho_o,
            "omega_p": inf_str(self.omega_p),
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
        }


@dataclass(frozen=True)
class ThirdOrderCoeffs:
    """g(s) = (zeta s - k)/(s^3 + p s^2 + q s + ell)."""

    zeta: float
    k: float
    p: float
    q: float
    ell: float

    @classmethod
    def from_tf(cls, g: RationalTF) -> Optional["ThirdOrderCoeffs"]:
        if g.den.degree != 3 or g.num.is_zero() or g.num.degree > 1:
            return None
        n = g.num.coeffs
        d = g.den.coeffs
        k = -float(n[0])
        if k == 0.0:
            return None
        zeta = float(n[1]) if n.size > 1 else 0.0
        return cls(zeta, k, float(d[2]), float(d[1]), float(d[0]))

    @property
    def tf(self) -> RationalTF:
        return RationalTF([-self.k, self.zeta], [self.ell, self.q, self.p, 1.0])

    @property
    def f2(self) -> float:
        return self.p**2 - 2 * self.q

    @property
    def f1(self) -> float:
        return 2 * self.p * self.ell - self.q**2

    @property
    def f0(self) -> float:
        return self.ell**2

    def inv_gain_sq(self, W):
        """|1/g(jw)|^2 as a function of W = w^2."""
        return (W**3 + self.f2 * W**2 - self.f1 * W + self.f0) / (self.zeta**2 * W + self.k**2)


# bounds ---------------------------------------------------------------------


def _unstable_plant_poles(g: RationalTF) -> poly.RootSet:
    if not g.is_strictly_proper():
        raise PreconditionError("plant must be strictly proper")
    ps = g.poles()
    n_olhp, n_orhp, n_axis = ps.counts
    if n_axis:
        raise AxisPole("plant has poles on the imaginary axis")
    if n_orhp == 0:
        raise StableInput("plant has no open right-half-plane pole")
    return ps


def lower_bounds(g: RationalTF) -> tuple[float, Optional[float]]:
    """(rho_p, rho_o): inverse peak gain, and inverse static gain when the ORHP pole count is odd."""
    ps = _unstable_plant_poles(g)
    rho_p = 1.0 / linf_norm(g).linf
    rho_o = None
    if ps.counts[1] % 2 == 1:
        g0 = abs(static_gain(g))
        rho_o = math.inf if g0 == 0 else 1.0 / g0
    return rho_p, rho_o


def critical_gain(g: RationalTF, omega_c: float) -> complex:
    s = 1j * omega_c
    nv = g.num(s)
    if abs(nv) <= 1e-14 * np.polynomial.polynomial.polyval(abs(s), np.abs(g.num.coeffs)):
        raise ZeroAtOmega(f"plant vanishes at w = {omega_c}")
    return complex(1.0 / evaluate(g, s))


def _allpass_params(delta_c, omega_c):
    """Vectorized (a, b, valid) for the stable first-order all-pass through delta_c at j*omega_c."""
    delta_c = np.asarray(delta_c, dtype=complex)
    omega_c = np.asarray(omega_c, dtype=float)
    ang = np.angle(delta_c)
    ang = np.where(ang > math.pi - PHASE_EPS, ang - 2 * math.pi, ang)
    phi = ang / 2
    mag = np.abs(delta_c)
    pos = phi >= 0
    with np.errstate(over="ignore", invalid="ignore"):
        a = np.where(pos, omega_c * np.tan(phi), omega_c * np.tan(phi + math.pi / 2))
    b = np.where(pos, mag, -mag)
    valid = (math.pi / 2 - phi) >= PHASE_EPS
    zero = omega_c == 0
    a = np.where(zero, 0.0, a)
    b = np.where(zero, delta_c.real, b)
    valid = np.where(zero, np.abs(delta_c.imag) <= 1e-12 * np.maximum(mag, 1e-300), valid)
    return a, b, valid


def allpass_from_critical(delta_c: complex, omega_c: float) -> AllPass1:
    """The unique stable b(s-a)/(s+a) taking the value delta_c at s = j*omega_c."""
    if omega_c < 0:
        raise ValueError("critical frequency must be nonnegative")
    a, b, valid = _allpass_params(delta_c, omega_c)
    if not bool(valid):
        if omega_c == 0:
            raise PhaseSingular("critical gain at w = 0 must be real")
        raise PhaseSingular(f"phase of {delta_c} needs a -> infinity at w = {omega_c}")
    ap = AllPass1(float(a), float(b), float(omega_c))
    err = abs(ap(1j * omega_c) - delta_c)
    if err > 1e-10 * max(abs(delta_c), 1e-300):
        raise PhaseSingular(f"all-pass misses the critical gain by {err:.3g}")
    return ap


# stability checks -------------------------------------------------------------


def _marginal_check(r: np.ndarray, omega_c: float, tau_axis: float) -> tuple[bool, float]:
    tol = tau_marginal(omega_c)
    targets = [0j] if omega_c == 0 else [1j * omega_c, -1j * omega_c]
    used = np.zeros(r.size, dtype=bool)
    worst = 0.0
    for t in targets:
        dist = np.abs(r - t)
        hits = np.flatnonzero(dist <= tol)
        if hits.size != 1:
            return False, float(dist.min()) if dist.size else math.inf
        used[hits[0]] = True
        worst = max(worst, float(dist[hits[0]]))
    rest = r[~used]
    ok = bool(np.all(rest.real < -tau_axis * np.maximum(1.0, np.abs(rest))))
    return ok, worst


def omega_c_stability(g: RationalTF, d: RationalTF, omega_c: float,
                      tau_axis: float = poly.TAU_AXIS) -> StabilityReport:
    """All loop roots in the OLHP except exactly +-j*omega_c (a single origin root when omega_c = 0)."""
    cp = feedback_charpoly(g, d, tau_axis)
    rs = poly.roots(cp, tau_axis)
    ok, err = _marginal_check(np.asarray(rs.roots), omega_c, tau_axis)
    return StabilityReport(ok, float(omega_c), rs.counts, rs.roots, err)


def stabilizes(g: RationalTF, d: RationalTF, tau_axis: float = poly.TAU_AXIS) -> bool:
    """Internal stabilization: stable proper d, no unstable cancellation, loop roots in the OLHP."""
    if not d.is_proper():
        return False
    if d.den.degree and poly.classify(d.den, tau_axis)[0] != d.den.degree:
        return False
    try:
        cp = feedback_charpoly(g, d, tau_axis)
    except CancellationDetected:
        return False
    return poly.classify(cp, tau_axis) == (cp.degree, 0, 0)


def strictify(g: RationalTF, d0: RationalTF, d1: Optional[RationalTF] = None,
              eps_grid: Optional[Sequence[float]] = None) -> tuple[RationalTF, float]:
    """Smallest grid |eps| for which d0 + eps*d1 internally stabilizes g (both signs tried).

    Without an explicit d1 the constant 1 is tried first, then 1/(s+1).
    """
    if eps_grid is None:
        scale = linf_norm(d0).linf or 1.0
        eps_grid = [m * scale for m in (1e-5, 1e-4, 1e-3, 1e-2)]
    mags = sorted({abs(float(e)) for e in eps_grid if e != 0})
    signed = [s * m for m in mags for s in (1.0, -1.0)]
    candidates = [d1] if d1 is not None else [RationalTF([1.0]), RationalTF([1.0], [1.0, 1.0])]
    for cand in candidates:
        for eps in signed:
            d_eps = d0 + cand * eps
            if stabilizes(g, d_eps):
                return d_eps, eps
    raise NoStrictification("no grid perturbation strictly stabilizes; likely several axis modes")


# sweep ------------------------------------------------------------------------


def _batch_loop_roots(g: RationalTF, a: np.ndarray, b: np.ndarray) -> list[np.ndarray]:
    """Loop roots for each all-pass (a_i, b_i) using stacked companion eigenvalues."""
    P = np.polynomial.polynomial
    den, num = g.den.coeffs, g.num.coeffs
    out: list[np.ndarray] = [None] * a.size  # type: ignore[list-item]
    const = a == 0.0
    groups = []
    if np.any(const):
        idx = np.flatnonzero(const)
        rows = [P.polysub(den, b[i] * num) for i in idx]
        groups.append((idx, rows))
    if np.any(~const):
        idx = np.flatnonzero(~const)
        sden = P.polymulx(den)
        snum = P.polymulx(num)
        rows = [P.polysub(P.polyadd(sden, a[i] * den), b[i] * P.polysub(snum, a[i] * num)) for i in idx]
        groups.append((idx, rows))
    for idx, rows in groups:
        width = max(len(r) for r in rows)
        C = np.zeros((len(rows), width))
        for j, r in enumerate(rows):
            C[j, : len(r)] = r
        n = width - 1
        lead = C[:, -1:]
        comp = np.zeros((len(rows), n, n))
        comp[:, 1:, :-1] = np.eye(n - 1)
        comp[:, :, -1] = -C[:, :-1] / lead
        eig = np.linalg.eigvals(comp)
        for j, i in enumerate(idx):
            out[i] = eig[j]
    return out


def _stable_at(g: RationalTF, omega: float, tau_axis: float) -> Optional[AllPass1]:
    try:
        dc = critical_gain(g, omega)
        ap = allpass_from_critical(dc, omega)
    except (ZeroAtOmega, PhaseSingular):
        return None
    rep = omega_c_stability(g, ap.tf, omega, tau_axis)
    return ap if rep.ok else None


def _golden_min(f, lo: float, hi: float, iters: int = GOLDEN_ITERS) -> float:
    r = (math.sqrt(5) - 1) / 2
    c, d = hi - r * (hi - lo), lo + r * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - r * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + r * (hi - lo)
            fd = f(d)
    return c if fc < fd else d


def sweep_upper_bound(g: RationalTF, omega_grid: Optional[Sequence[float]] = None,
                      tau_axis: float = poly.TAU_AXIS) -> RirResult:
    """Least |b| over critical frequencies whose all-pass achieves omega_c-stability."""
    rho_p, rho_o = lower_bounds(g)
    lower = max(rho_p, rho_o) if rho_o is not None else rho_p
    norm = linf_norm(g)
    if not pip(g, tau_axis):
        return RirResult(lower, math.inf, False, None, SWEEP, False, rho_p, rho_o, norm.omega_peak)

    grid = default_omega_grid() if omega_grid is None else np.asarray(sorted(set(map(float, omega_grid))))
    gv = evaluate(g, 1j * grid)
    nz = np.abs(gv) > 0
    a = np.zeros(grid.size)
    b = np.zeros(grid.size)
    valid = np.zeros(grid.size, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        aa, bb, vv = _allpass_params(1.0 / gv[nz], grid[nz])
    a[nz], b[nz], valid[nz] = aa, bb, vv
    valid &= np.isfinite(a)
    ok = np.zeros(grid.size, dtype=bool)
    idx = np.flatnonzero(valid)
    if idx.size:
        roots = _batch_loop_roots(g, a[idx], b[idx])
        for j, i in enumerate(idx):
            ok[i] = _marginal_check(roots[j], grid[i], tau_axis)[0]
    samples = tuple((float(w), float(abs(bi)), bool(o)) for w, bi, o in zip(grid, b, ok))

    best: Optional[AllPass1] = None
    if np.any(ok):
        i = int(np.flatnonzero(ok)[np.argmin(np.abs(b[ok]))])
        best = AllPass1(float(a[i]), float(b[i]), float(grid[i]))
        if grid[i] > 0:
            lo = grid[i - 1] if i > 0 and grid[i - 1] > 0 else grid[i] / 1.01
            hi = grid[i + 1] if i + 1 < grid.size else grid[i] * 1.01
            w_ref = _golden_min(lambda w: 1.0 / abs(evaluate(g, 1j * w)), lo, hi)
            ap = _stable_at(g, w_ref, tau_axis)
            if ap is not None and ap.hinf < best.hinf:
                best = ap
    if math.isfinite(norm.omega_peak):
        ap = _stable_at(g, norm.omega_peak, tau_axis)
        if ap is not None and (best is None or ap.hinf <= best.hinf):
            best = ap

    if best is None:
        return RirResult(lower, math.inf, False, None, SWEEP, True, rho_p, rho_o, norm.omega_peak, samples)
    upper = best.hinf
    exact = upper - lower <= EXACT_RTOL * lower
    source = SWEEP
    if exact:
        source = STATIC_GAIN if best.omega_c == 0 and rho_o is not None else PEAK_GAIN
    return RirResult(lower, upper, exact, best, source, True, rho_p, rho_o, norm.omega_peak, samples)


# third-order class --------------------------------------------------------------


def condition1_check(c: ThirdOrderCoeffs) -> bool:
    """p > 0, ell < 0, q + zeta*ell/k > 0: the constant -ell/k is an origin-marginal stabilizer."""
    return c.p > 0 and c.ell < 0 and c.q + c.zeta * c.ell / c.k > 0


def condition2_check(c: ThirdOrderCoeffs) -> bool:
    """p > 0, ell > p q, q^2 < 2 p ell: sufficient for peak-frequency all-pass marginal stabilization."""
    return c.p > 0 and c.ell > c.p * c.q and c.q**2 < 2 * c.p * c.ell


def peak_frequency_cubic(c: ThirdOrderCoeffs) -> float:
    """Peak frequency from the unique positive root of the stationarity cubic in W = w^2."""
    z2, k2 = c.zeta**2, c.k**2
    H = RealPolynomial([-(z2 * c.f0 + k2 * c.f1), 2 * k2 * c.f2, z2 * c.f2 + 3 * k2, 2 * z2])
    if H.is_zero() or H.degree == 0:
        raise NoPositiveRoot("stationarity polynomial is constant")
    rs = poly.roots(H).roots
    pos = [r.real for r in rs if r.real > 0 and abs(r.imag) <= 1e-9 * max(1.0, abs(r))]
    if not pos:
        raise NoPositiveRoot("stationarity cubic has no positive root")
    W = min(pos, key=c.inv_gain_sq)
    dH = H.deriv()
    for _ in range(3):
        step = H(W) / dH(W) if dH(W) != 0 else 0.0
        if not math.isfinite(step) or abs(step) > 0.5 * W:
            break
        W -= step
    return math.sqrt(W)


def marginal_factorization(c: ThirdOrderCoeffs) -> tuple[float, float, float, float]:
    """(a, sigma1, sigma0, b) with loop polynomial (s^2 + W_p)(s^2 + sigma1 s + sigma0)."""
    if not condition2_check(c):
        raise PreconditionError("coefficients do not satisfy the peak-gain inequalities")
    wp = peak_frequency_cubic(c)
    Wp = wp * wp
    g = c.tf
    ap = allpass_from_critical(critical_gain(g, wp), wp)
    a, b = ap.a, ap.b
    A = np.array([
        [-1.0, 1.0, 0.0],
        [-c.p, 0.0, 1.0],
        [-(c.q + c.zeta * b), Wp, 0.0],
        [c.k * b - c.ell, 0.0, Wp],
    ])
    rhs = np.array([c.p, c.q - c.zeta * b - Wp, c.ell + c.k * b, 0.0])
    sv = np.linalg.svd(np.column_stack([A, rhs]), compute_uv=False)
    if sv[-1] > 1e-8 * sv[0]:
        raise InconsistentSystem(f"augmented system not singular (ratio {sv[-1] / sv[0]:.3g})")
    x, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    a_fit, s1, s0 = map(float, x)
    if not (a_fit > 0 and s1 > 0 and s0 > 0):
        raise NonPositiveSolution(f"a={a_fit}, sigma1={s1}, sigma0={s0}")
    P = np.polynomial.polynomial
    quartic = P.polymul([Wp, 0.0, 1.0], [s0, s1, 1.0])
    expected = P.polysub(P.polymul([c.ell, c.q, c.p, 1.0], [a_fit, 1.0]),
                         b * P.polymul([-c.k, c.zeta], [-a_fit, 1.0]))
    scale = max(np.max(np.abs(expected)), 1.0)
    if np.max(np.abs(quartic - expected)) > 1e-8 * scale:
        raise InconsistentSystem("factorized quartic does not reproduce the loop polynomial")
    return a_fit, s1, s0, b


def third_order_exact(g: RationalTF) -> Optional[RirResult]:
    """Closed-form exact radius for (zeta s - k)/cubic plants meeting either inequality set."""
    c = ThirdOrderCoeffs.from_tf(g)
    if c is None:
        return None
    if condition1_check(c):
        rho_o = abs(c.ell / c.k)
        rho_p = 1.0 / linf_norm(g).linf
        cert = AllPass1(0.0, -c.ell / c.k, 0.0)
        return RirResult(rho_o, rho_o, True, cert, STATIC_GAIN, pip(g), rho_p, rho_o, 0.0)
    if condition2_check(c):
        a, _, _, b = marginal_factorization(c)
        wp = peak_frequency_cubic(c)
        rho_p = abs(b)
        return RirResult(rho_p, rho_p, True, AllPass1(a, b, wp), PEAK_GAIN, pip(g), rho_p, None, wp)
    return None
