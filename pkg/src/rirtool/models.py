"""Case-study nonlinear models: the repressilator and the FitzHugh-Nagumo neuron.

Each model provides its equilibrium as a function of the perturbation's static
gain e, the linearized plant family g_e(s), and a fixed-step RK4 simulation
with a stable LTI perturbation closing the loop.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import poly
from .errors import (
    Divergence,
    DomainError,
    Improper,
    NoBracket,
    NonUniqueEquilibrium,
    WindowTooShort,
)
from .poly import RealPolynomial
from .rir_param import ParamFamily
from .tf import RationalTF

DIVERGENCE_LIMIT = 1e9
TAU_OSC = 1e-3


# Hill nonlinearity -------------------------------------------------------------


def hill(x: float, K: float, nu: float) -> float:
    """Repressive Hill function K^nu / (K^nu + x^nu)."""
    if x < 0:
        raise DomainError(f"Hill function needs x >= 0, got {x}")
    Kn = K**nu
    return Kn / (Kn + x**nu)


def hill_deriv(x: float, K: float, nu: float) -> float:
    if x < 0:
        raise DomainError(f"Hill function needs x >= 0, got {x}")
    if x == 0:
        return -1.0 / K if nu == 1 else 0.0
    Kn = K**nu
    xn = x**nu
    return -nu * Kn * xn / x / (Kn + xn) ** 2


# Repressilator ---------------------------------------------------------------------


@dataclass(frozen=True)
class RepressilatorParams:
    alpha: tuple[float, float, float]  # 1/hr
    beta: tuple[float, float, float]  # nM/hr
    K: tuple[float, float, float]  # nM
    nu: tuple[float, float, float]

    def __post_init__(self):
        for name in ("alpha", "beta", "K", "nu"):
            vals = getattr(self, name)
            if len(vals) != 3:
                raise ValueError(f"{name} needs three entries")
            object.__setattr__(self, name, tuple(float(v) for v in vals))
        if min(self.alpha + self.beta + self.K) <= 0:
            raise ValueError("alpha, beta and K must be strictly positive")
        if min(self.nu) < 1:
            raise ValueError("Hill coefficients must be >= 1")

    @classmethod
    def nominal(cls) -> "RepressilatorParams":
        return cls(
            alpha=(0.4621, 0.5545, 0.3697),
            beta=(138.0, 110.4, 165.6),
            K=(5.0, 7.5, 2.5),
            nu=(3.0, 3.0, 3.0),
        )

    def to_dict(self) -> dict:
        return {"alpha": list(self.alpha), "beta": list(self.beta), "K": list(self.K), "nu": list(self.nu)}


def _psi(p: RepressilatorParams, i: int, x: float) -> float:
    return hill(x, p.K[i], p.nu[i])


def _dpsi(p: RepressilatorParams, i: int, x: float) -> float:
    return hill_deriv(x, p.K[i], p.nu[i])


def equilibrium(p: RepressilatorParams, e: float = 0.0, xtol: float = 1e-12) -> np.ndarray:
    """Unique positive equilibrium with the first production gain scaled by (1 + e)."""
    if 1 + e <= 0:
        raise DomainError("equilibrium needs 1 + e > 0")
    bh = ((1 + e) * p.beta[0], p.beta[1], p.beta[2])
    a = p.alpha

    def chain(x1):
        x2 = bh[1] / a[1] * _psi(p, 1, x1)
        x3 = bh[2] / a[2] * _psi(p, 2, x2)
        return x2, x3, bh[0] / a[0] * _psi(p, 0, x3)

    hi = bh[0] / a[0]
    f = lambda x1: x1 - chain(x1)[2]
    if not f(0.0) < 0 < f(hi):
        raise NoBracket("fixed-point map does not bracket a root")
    x1 = brentq(f, 0.0, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
    x2, x3, _ = chain(x1)
    return np.array([x1, x2, x3])


def repressilator_jacobian(p: RepressilatorParams, x: Sequence[float], e: float = 0.0) -> np.ndarray:
    a = p.alpha
    return np.array([
        [-a[0], 0.0, (1 + e) * p.beta[0] * _dpsi(p, 0, x[2])],
        [p.beta[1] * _dpsi(p, 1, x[0]), -a[1], 0.0],
        [0.0, p.beta[2] * _dpsi(p, 2, x[1]), -a[2]],
    ])


def linearize_repressilator(p: RepressilatorParams, e: float = 0.0) -> tuple[RationalTF, float]:
    """g_e(s) = -k/(s^3 + p s^2 + q s + ell) with ell = a1 a2 a3 + k."""
    x = equilibrium(p, e)
    b = p.beta
    k = -b[0] * b[1] * b[2] * _dpsi(p, 0, x[2]) * _dpsi(p, 1, x[0]) * _dpsi(p, 2, x[1])
    if not k > 0:
        raise DomainError(f"loop gain k = {k} is not positive")
    a1, a2, a3 = p.alpha
    pp = a1 + a2 + a3
    qq = a1 * a2 + a2 * a3 + a3 * a1
    ell = a1 * a2 * a3 + k
    return RationalTF([-k], [ell, qq, pp, 1.0]), float(k)


def max_real_pole(p: RepressilatorParams, e: float) -> float:
    g, _ = linearize_repressilator(p, e)
    return float(np.max(poly.roots(g.den).roots.real))


def hyperbolicity_lower_edge(p: RepressilatorParams, lo: float = -0.999, hi: float = 0.0,
                             xtol: float = 1e-10) -> float:
    """Smallest e at which g_e turns unstable (sign change of the largest pole real part)."""
    f = lambda e: max_real_pole(p, e)
    if not (f(lo) < 0 < f(hi)):
        raise NoBracket("largest pole real part does not change sign on the interval")
    return brentq(f, lo, hi, xtol=xtol)


def repressilator_family(p: RepressilatorParams, domain: Optional[tuple[float, float]] = None) -> ParamFamily:
    if domain is None:
        domain = (hyperbolicity_lower_edge(p), 1.0)
    return ParamFamily(lambda e: linearize_repressilator(p, e)[0], tuple(domain), name="repressilator")


# FitzHugh-Nagumo ------------------------------------------------------------------


@dataclass(frozen=True)
class FhnParams:
    c: float
    tau: float
    alpha: float
    beta: float

    def __post_init__(self):
        if min(self.c, self.tau, self.alpha, self.beta) <= 0:
            raise ValueError("FHN parameters must be strictly positive")

    def to_dict(self) -> dict:
        return {"c": self.c, "tau": self.tau, "alpha": self.alpha, "beta": self.beta}


def fhn_psi(v: float) -> float:
    return v - v**3 / 3


def fhn_equilibrium(p: FhnParams, e: float = 0.0) -> tuple[float, float]:
    """(v, w) solving psi(v) = (1+e) w, v = beta w - alpha."""
    if 1 + e <= p.beta:
        raise NonUniqueEquilibrium(f"1 + e = {1 + e} must exceed beta = {p.beta}")
    r = (1 + e) / p.beta
    cubic = RealPolynomial([-r * p.alpha, 1 - r, 0.0, -1.0 / 3.0])
    real = [z.real for z in poly.roots(cubic).roots if abs(z.imag) <= 1e-9 * (1 + abs(z))]
    if len(real) != 1:
        raise NonUniqueEquilibrium(f"found {len(real)} real equilibria")
    v = real[0]
    return v, (v + p.alpha) / p.beta


def linearize_fhn(p: FhnParams, e: float = 0.0) -> RationalTF:
    """g_e(s) = 1/(c tau s^2 + (beta c - tau gamma) s + 1 - beta gamma), gamma = 1 - v^2."""
    v, _ = fhn_equilibrium(p, e)
    gamma = 1 - v * v
    return RationalTF([1.0], [1 - p.beta * gamma, p.beta * p.c - p.tau * gamma, p.c * p.tau])


def fhn_family(p: FhnParams, domain: Optional[tuple[float, float]] = None) -> ParamFamily:
    if domain is None:
        if p.beta >= 1:
            raise ValueError("default FHN domain needs beta < 1 so that e = 0 is admissible")
        domain = (p.beta - 1.0, 1.0)
    # the model's loop closes as 1 + delta*g_e = 0, so the positive-feedback family is -g_e
    return ParamFamily(lambda e: -linearize_fhn(p, e), tuple(domain), name="fhn")


# state-space realization ----------------------------------------------------------------


@dataclass(frozen=True)
class StateSpaceLTI:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def transfer(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        n = self.order
        if n == 0:
            return np.full(s.shape, self.D, dtype=complex)
        eye = np.eye(n)
        return np.array([
            (self.C @ np.linalg.solve(si * eye - self.A, self.B)).item() + self.D for si in s
        ])


def realize(d: RationalTF, check_points: int = 100) -> StateSpaceLTI:
    """Controllable canonical realization of a proper transfer function."""
    if not d.is_proper():
        raise Improper("only proper transfer functions can be realized")
    den = d.den.coeffs  # monic
    n = d.den.degree
    num = np.zeros(n + 1)
    num[: d.num.coeffs.size] = d.num.coeffs
    D = float(num[n])
    if n == 0:
        return StateSpaceLTI(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), D)
    resid = num[:n] - D * den[:n]
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -den[:n]
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    C = resid.reshape(1, n)
    ss = StateSpaceLTI(A, B, C, D)
    w = np.logspace(-3, 3, check_points)
    ref = d(1j * w)
    got = ss.transfer(1j * w)
    if np.max(np.abs(got - ref) / np.maximum(np.abs(ref), 1e-12)) > 1e-8:
        raise Improper("realization does not reproduce the frequency response")
    return ss


# simulation ----------------------------------------------------------------------------


@dataclass
class Trajectory:
    model: str
    t: np.ndarray
    x: np.ndarray  # plant states
    xd: np.ndarray  # perturbation states
    z: np.ndarray
    w: np.ndarray
    positivity_violated: bool = False
    labels: tuple[str, ...] = field(default=())

    def tail(self, fraction: float) -> slice:
        n = self.t.size
        return slice(int(math.floor(n * (1 - fraction))), n)

    def to_csv(self, path, units: str = "") -> int:
        nplant = self.x.shape[1]
        header = ["t"] + [f"x{i + 1}" for i in range(nplant)] + ["z", "w"]
        header += [f"xd{i + 1}" for i in range(self.xd.shape[1])]
        with open(path, "w", newline="") as fh:
            if units:
                fh.write(f"# {units}\n")
            wr = csv.writer(fh)
            wr.writerow(header)
            data = np.column_stack([self.t, self.x, self.z, self.w, self.xd])
            for row in data:
                wr.writerow([repr(float(v)) for v in row])
        return self.t.size


def make_rhs(model: str, params, delta: Optional[StateSpaceLTI]) -> tuple[Callable, int]:
    """Vector field of plant + perturbation.  Returns (rhs, n_plant); rhs(y) -> (dy, z, w)."""
    if delta is None:
        delta = StateSpaceLTI(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), 0.0)
    nd = delta.order
    A = delta.A.tolist()
    Bv = delta.B[:, 0].tolist()
    Cv = delta.C[0, :].tolist() if nd else []
    D = float(delta.D)
    rng = range(nd)

    if model == "repressilator":
        a1, a2, a3 = params.alpha
        b1, b2, b3 = params.beta
        K1n, K2n, K3n = (K**n for K, n in zip(params.K, params.nu))
        n1, n2, n3 = params.nu

        def rhs(y):
            x1, x2, x3 = y[0], y[1], y[2]
            xd = y[3:]
            z = b1 * K1n / (K1n + abs(x3) ** n1)
            w = D * z
            for i in rng:
                w += Cv[i] * xd[i]
            dy = [
                -a1 * x1 + z + w,
                -a2 * x2 + b2 * K2n / (K2n + abs(x1) ** n2),
                -a3 * x3 + b3 * K3n / (K3n + abs(x2) ** n3),
            ]
            for i in rng:
                Ai = A[i]
                acc = Bv[i] * z
                for j in rng:
                    acc += Ai[j] * xd[j]
                dy.append(acc)
            return dy, z, w

        return rhs, 3

    if model == "fhn":
        c, tau, al, be = params.c, params.tau, params.alpha, params.beta

        def rhs(y):
            v, ws = y[0], y[1]
            xd = y[2:]
            z = ws
            w = D * z
            for i in rng:
                w += Cv[i] * xd[i]
            dy = [(v - v**3 / 3 - z - w) / c, (v + al - be * ws) / tau]
            for i in rng:
                Ai = A[i]
                acc = Bv[i] * z
                for j in rng:
                    acc += Ai[j] * xd[j]
                dy.append(acc)
            return dy, z, w

        return rhs, 2

    raise ValueError(f"unknown model {model!r}")


def default_x0(model: str, params) -> np.ndarray:
    """Nominal (e = 0) equilibrium raised by 1% per coordinate."""
    if model == "repressilator":
        return equilibrium(params, 0.0) * 1.01
    v, w = fhn_equilibrium(params, 0.0)
    return np.array([v, w]) * 1.01


def model_equilibrium(model: str, params, e: float) -> np.ndarray:
    if model == "repressilator":
        return equilibrium(params, e)
    return np.array(fhn_equilibrium(params, e))


def simulate(model: str, params, delta: Optional[StateSpaceLTI], x0: Optional[Sequence[float]] = None,
             t_final: float = 200.0, dt: float = 1e-3) -> Trajectory:
    """Classical RK4 at fixed step ``dt`` of the plant with w = delta(z) in the loop; perturbation states start at zero."""
    if dt <= 0 or t_final <= 0:
        raise ValueError("dt and t_final must be positive")
    rhs, nplant = make_rhs(model, params, delta)
    nd = 0 if delta is None else delta.order
    if x0 is None:
        x0 = default_x0(model, params)
    x0 = [float(v) for v in x0]
    if len(x0) != nplant:
        raise ValueError(f"{model} needs {nplant} initial states")
    if model == "repressilator" and min(x0) <= 0:
        raise ValueError("repressilator initial state must lie in the positive orthant")
    y = x0 + [0.0] * nd
    n = len(y)
    steps = int(math.floor(t_final / dt + 1e-9))
    h2, h6 = dt / 2, dt / 6
    idx = range(n)

    rows = [None] * (steps + 1)
    zs = [0.0] * (steps + 1)
    ws = [0.0] * (steps + 1)
    k1, z, w = rhs(y)
    rows[0], zs[0], ws[0] = tuple(y), z, w
    violated = False
    for step in range(1, steps + 1):
        y2 = [y[i] + h2 * k1[i] for i in idx]
        k2 = rhs(y2)[0]
        y3 = [y[i] + h2 * k2[i] for i in idx]
        k3 = rhs(y3)[0]
        y4 = [y[i] + dt * k3[i] for i in idx]
        k4 = rhs(y4)[0]
        y = [y[i] + h6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]) for i in idx]
        k1, z, w = rhs(y)
        rows[step], zs[step], ws[step] = tuple(y), z, w
        if not all(abs(v) < DIVERGENCE_LIMIT for v in y):
            raise Divergence(f"state left |x| < {DIVERGENCE_LIMIT:g} at t = {step * dt:g}")
        if model == "repressilator" and not violated and min(y[0], y[1], y[2]) < 0:
            violated = True
            warnings.warn(f"plant state left the positive orthant at t = {step * dt:g}", RuntimeWarning)
    Y = np.asarray(rows)
    t = np.arange(steps + 1) * dt
    return Trajectory(model, t, Y[:, :nplant], Y[:, nplant:], np.asarray(zs), np.asarray(ws), violated)


def detect_oscillation(tr: Trajectory, tail_fraction: float = 0.5,
                       tau_osc: float = TAU_OSC) -> tuple[bool, np.ndarray]:
    """Peak-to-peak amplitude of each plant state over the trailing window."""
    if not 0 < tail_fraction < 1:
        raise ValueError("tail_fraction must lie in (0, 1)")
    window = tr.x[tr.tail(tail_fraction)]
    if window.shape[0] < 3:
        raise WindowTooShort("tail window holds fewer than three samples")
    amp = window.max(axis=0) - window.min(axis=0)
    return bool(np.max(amp) > tau_osc), amp
