"""Robust instability radius for plant families g_e(s) indexed by the perturbation's static gain.

A perturbation with static gain e moves the equilibrium, so the relevant
plant is g_e.  Inside the interval E* around 0 where |e| < rho_p(e), and
provided every g_e there is peak-gain certifiable with an even nonzero
number of unstable poles, the radius is the infimum of rho_p(e) over E*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import poly
from .errors import (
    EpsTooSmall,
    NoStabilizingXi,
    OriginViolation,
    PreconditionError,
    RirError,
    SmallGainViolated,
)
from .rir_fixed import (
    AllPass1,
    ThirdOrderCoeffs,
    allpass_from_critical,
    condition2_check,
    critical_gain,
    omega_c_stability,
    stabilizes,
)
from .tf import RationalTF, linf_norm, static_gain

XI_GRID = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4)
# slack on boundary inequalities that are evaluated at 4-digit boundary points
BOUNDARY_SLACK = 1e-4


@dataclass(frozen=True)
class ParamFamily:
    generator: Callable[[float], RationalTF]
    domain: tuple[float, float]
    name: str = "family"

    def __post_init__(self):
        lo, hi = self.domain
        if not lo < 0 < hi:
            raise ValueError("family domain must be an open interval containing 0")

    def __call__(self, e: float) -> RationalTF:
        return self.generator(e)


@dataclass(frozen=True)
class ParamSample:
    e: float
    rho_p: float = float("nan")
    rho_o: Optional[float] = None
    n_orhp: int = 0
    cond_a: bool = False
    cond_b: bool = False
    hyperbolic: bool = False
    omega_p: float = float("nan")
    error: Optional[str] = None

    @property
    def inside(self) -> bool:
        """|e| < rho_p(e) on a hyperbolically unstable plant."""
        return self.hyperbolic and math.isfinite(self.rho_p) and abs(self.e) < self.rho_p


@dataclass(frozen=True)
class AdjustedPerturbation:
    """Static-gain-adjusted certificate ((s + xi*gamma)/(s + xi)) * (1+eps) b (s-a)/(s+a)."""

    tf: RationalTF
    a: float
    b: float
    eps: float
    gamma: float
    xi: float
    hinf: float
    static_gain: float
    stabilizing: Optional[bool] = None

    def to_dict(self) -> dict:
        return {
            "a": self.a, "b": self.b, "eps": self.eps, "gamma": self.gamma, "xi": self.xi,
            "hinf": self.hinf, "static_gain": self.static_gain, "stabilizing": self.stabilizing,
            **self.tf.to_dict(),
        }


@dataclass(frozen=True)
class ParamFamilyResult:
    samples: tuple[ParamSample, ...]
    e_star: tuple[float, float]
    mu_star: float
    mu_star_arg: float
    exact: bool
    certificate: Optional[AdjustedPerturbation] = None
    notes: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "e_star": list(self.e_star),
            "mu_star": self.mu_star,
            "mu_star_arg": self.mu_star_arg,
            "exact": self.exact,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "notes": list(self.notes),
        }


def _condition_a(g: RationalTF, omega_p: float) -> bool:
    third = ThirdOrderCoeffs.from_tf(g)
    if third is not None and condition2_check(third):
        return True
    # peak-gain certifiability is defined behaviourally: the all-pass through
    # the critical gain at w_p must make the loop w_p-stable
    if not math.isfinite(omega_p):
        return False
    try:
        ap = allpass_from_critical(critical_gain(g, omega_p), omega_p)
        return omega_c_stability(g, ap.tf, omega_p).ok
    except RirError:
        return False


def evaluate_sample(fam: ParamFamily, e: float) -> ParamSample:
    try:
        g = fam(e)
        n_olhp, n_orhp, n_axis = poly.classify(g.den)
    except (RirError, ValueError, ArithmeticError) as exc:
        return ParamSample(e, error=f"{type(exc).__name__}: {exc}")
    hyperbolic = n_axis == 0 and n_orhp > 0
    cond_b = n_orhp > 0 and n_orhp % 2 == 0
    if n_axis:
        return ParamSample(e, n_orhp=n_orhp, cond_b=cond_b, error="axis pole")
    try:
        norm = linf_norm(g)
        rho_p = 1.0 / norm.linf if norm.linf > 0 else math.inf
        rho_o = None
        if n_orhp % 2 == 1:
            g0 = abs(static_gain(g))
            rho_o = math.inf if g0 == 0 else 1.0 / g0
        cond_a = hyperbolic and _condition_a(g, norm.omega_peak)
    except RirError as exc:
        return ParamSample(e, n_orhp=n_orhp, cond_b=cond_b, hyperbolic=hyperbolic,
                           error=f"{type(exc).__name__}: {exc}")
    return ParamSample(e, rho_p, rho_o, n_orhp, cond_a, cond_b, hyperbolic, norm.omega_peak)


def sample_family(fam: ParamFamily, grid: Sequence[float]) -> list[ParamSample]:
    """Per-point rho_p, rho_o, unstable pole count and condition flags; failures are recorded, not raised."""
    return [evaluate_sample(fam, float(e)) for e in grid]


def default_e_grid(fam: ParamFamily, n: int = 401) -> np.ndarray:
    lo, hi = fam.domain
    grid = np.linspace(lo, hi, n + 2)[1:-1]
    if not np.any(grid == 0.0):
        grid = np.sort(np.append(grid, 0.0))
    return grid


def _bisect(pred, inside: float, outside: float, tol: float) -> float:
    while abs(outside - inside) > tol:
        mid = 0.5 * (inside + outside)
        if pred(mid):
            inside = mid
        else:
            outside = mid
    return inside


def find_e_star(samples: Sequence[ParamSample], fam: Optional[ParamFamily] = None,
                tol: float = 1e-10) -> tuple[float, float]:
    """Largest interval around 0 on which |e| < rho_p(e).

    With a family the endpoints are refined by bisection; without one they are
    the outermost grid points that still satisfy the inequality.  A grid
    running to the domain edge yields the domain endpoint.
    """
    es = [s.e for s in samples]
    try:
        i0 = es.index(0.0)
    except ValueError:
        raise OriginViolation("samples must include e = 0") from None
    s0 = samples[i0]
    if not (math.isfinite(s0.rho_p) and s0.rho_p > 0 and s0.hyperbolic):
        raise OriginViolation("rho_p(0) undefined or nonpositive")

    pred = (lambda e: evaluate_sample(fam, e).inside) if fam is not None else None
    ends = []
    for step, edge in ((-1, 0), (1, 1)):
        i = i0
        while 0 <= i + step < len(samples) and samples[i + step].inside:
            i += step
        j = i + step
        if not 0 <= j < len(samples):
            ends.append(fam.domain[edge] if fam is not None else samples[i].e)
        elif pred is not None:
            ends.append(_bisect(pred, samples[i].e, samples[j].e, tol))
        else:
            ends.append(samples[i].e)
    return ends[0], ends[1]


def mu_star(fam: ParamFamily, grid: Optional[Sequence[float]] = None, eps: float = 0.05,
            xi_grid: Sequence[float] = XI_GRID, build_certificate: bool = True) -> ParamFamilyResult:
    """Infimum of rho_p over E*; exact only if conditions (a) and (b) hold on every sample in E*."""
    grid = default_e_grid(fam) if grid is None else np.asarray(grid, dtype=float)
    samples = sample_family(fam, grid)
    lo, hi = find_e_star(samples, fam)
    inner = [s for s in samples if lo <= s.e <= hi and s.inside]

    cands = [(s.rho_p, s.e) for s in inner]
    for end in (lo, hi):
        s = evaluate_sample(fam, end)
        if math.isfinite(s.rho_p):
            cands.append((s.rho_p, end))
    best_rho, best_e = min(cands)
    # golden refinement around an interior grid minimum
    es = [s.e for s in inner]
    if best_e in es:
        k = es.index(best_e)
        a_ = es[k - 1] if k > 0 else lo
        b_ = es[k + 1] if k + 1 < len(es) else hi
        from .rir_fixed import _golden_min

        rho = lambda e: evaluate_sample(fam, e).rho_p
        e_ref = _golden_min(rho, a_, b_)
        r_ref = rho(e_ref)
        if r_ref < best_rho:
            best_rho, best_e = r_ref, e_ref

    exact = bool(inner) and all(s.cond_a and s.cond_b for s in inner)
    notes = []
    if not exact:
        notes.append("conditions (a)/(b) fail somewhere in E*: mu_star is a lower bound")
    cert = None
    if exact and build_certificate:
        try:
            cert = construct_delta_e(fam, best_e, eps, xi_grid)
        except RirError as exc:
            notes.append(f"certificate construction failed: {type(exc).__name__}: {exc}")
    return ParamFamilyResult(tuple(samples), (lo, hi), float(best_rho), float(best_e), exact, cert, tuple(notes))


def highpass_adjust(d: RationalTF, e_target: float, xi_grid: Sequence[float], g: RationalTF,
                    sg_slack: float = BOUNDARY_SLACK) -> tuple[RationalTF, float]:
    """Multiply d by (s + xi*gamma)/(s + xi), gamma = e_target/d(0), keeping the loop stable.

    Returns the adjusted perturbation for the largest grid xi whose loop roots
    are all in the open left half-plane.
    """
    n_orhp = poly.classify(g.den)[1]
    if n_orhp == 0 or n_orhp % 2:
        raise PreconditionError("plant needs an even, nonzero number of unstable poles")
    d0 = static_gain(d)
    if d0 == 0:
        raise PreconditionError("perturbation has zero static gain")
    if not stabilizes(g, d):
        raise PreconditionError("perturbation does not stabilize the plant")
    gamma = e_target / d0
    if abs(gamma) >= 1:
        raise SmallGainViolated(f"|gamma| = {abs(gamma):.6g} >= 1")
    loop = linf_norm(d * g).linf if gamma != 0 else 0.0
    if abs(gamma) * loop >= 1 + sg_slack:
        raise SmallGainViolated(f"||gamma d g|| = {abs(gamma) * loop:.6g} >= 1")
    for xi in sorted(xi_grid, reverse=True):
        d_adj = _apply_highpass(d, gamma, xi)
        if stabilizes(g, d_adj):
            return d_adj, float(xi)
    raise NoStabilizingXi(f"no xi in {sorted(xi_grid)} stabilizes the adjusted loop")


def _apply_highpass(d: RationalTF, gamma: float, xi: float) -> RationalTF:
    f = RationalTF([xi * gamma, 1.0], [xi, 1.0], reduce=False)
    return RationalTF(f.num * d.num, f.den * d.den)


def construct_delta_e(fam: ParamFamily, e: float, eps: float = 0.05, xi_grid: Sequence[float] = XI_GRID,
                      verify: bool = True) -> AdjustedPerturbation:
    """Perturbation with static gain e built from the peak-frequency all-pass of g_e.

    The all-pass is scaled by (1+eps) and then passed through the static-gain
    high-pass adjustment.  With ``verify=False`` the checks are skipped and the
    first grid xi is used, which reproduces deliberately non-stabilizing
    variants (eps < 0) for simulation.
    """
    g = fam(e)
    s = evaluate_sample(fam, e)
    ap = allpass_from_critical(critical_gain(g, s.omega_p), s.omega_p)
    base = ap.scaled(1.0 + eps)
    d_tilde = base.tf
    gamma = e / static_gain(d_tilde)

    if not verify:
        xi = float(xi_grid[0])
        d = _apply_highpass(d_tilde, gamma, xi)
        return _package(d, ap, eps, gamma, xi, stabilizes(g, d))

    if not (s.cond_a and s.cond_b):
        raise PreconditionError(f"conditions (a)/(b) do not hold at e = {e}")
    if abs(e) >= s.rho_p * (1 + BOUNDARY_SLACK):
        raise PreconditionError(f"|e| = {abs(e)} is not below rho_p(e) = {s.rho_p}")
    if not stabilizes(g, d_tilde):
        raise EpsTooSmall(f"(1{eps:+g}) times the peak all-pass does not stabilize g_e")
    d, xi = highpass_adjust(d_tilde, e, xi_grid, g)
    cert = _package(d, ap, eps, gamma, xi, True)
    if abs(cert.static_gain - e) > 1e-10:
        raise RirError(f"static gain {cert.static_gain} != {e}")
    if eps > 0 and cert.hinf > s.rho_p * (1 + eps) * (1 + 1e-9):
        raise RirError(f"certificate norm {cert.hinf} exceeds (1+eps) rho_p")
    return cert


def _package(d: RationalTF, ap: AllPass1, eps: float, gamma: float, xi: float,
             stabilizing: Optional[bool]) -> AdjustedPerturbation:
    return AdjustedPerturbation(d, ap.a, ap.b, eps, float(gamma), xi, linf_norm(d).linf,
                                static_gain(d), stabilizing)


def lemma2_bounds(sample: ParamSample) -> tuple[float, float]:
    """Two certified lower bounds on the static-gain-constrained radius at e: |e| and rho_p(e)."""
    if not math.isfinite(sample.rho_p):
        raise PreconditionError("sample has no peak-gain bound")
    return abs(sample.e), sample.rho_p


def constant_family(g: RationalTF, domain: tuple[float, float]) -> ParamFamily:
    return ParamFamily(lambda e: g, domain, name="constant")
