"""Stream (shear-flow) solutions u(Y) of u'' + omega(u) = 0, u(0) = 0, u(d) = 1.

The solutions are parametrised by the bottom slope s and a branch label
(sign, j). Depths are obtained from the energy integral
u'^2 + 2 Omega(u) = s^2, which gives

    d(s)    = int_0^1       dtau / sqrt(s^2 - 2 Omega(tau))
    y_pm(s) = int_0^tau_pm  dtau / sqrt(s^2 - 2 Omega(tau))

and the profile itself is sampled by integrating the Cauchy problem.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicHermiteSpline

from . import quadrature
from .vorticity import VorticityModel

log = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 2048
ENERGY_TOL = 1e-10
# |u'(d)| and |d - r| below this violate the standing non-degeneracy assumptions
ASSUMPTION_TOL = 1e-8


class StreamError(ValueError):
    pass


class AssumptionViolation(StreamError):
    pass


@dataclass(frozen=True)
class TurningData:
    s: float
    s0: float
    tau_plus: float = math.inf
    tau_minus: float = -math.inf
    y_plus: float = math.inf
    y_minus: float = -math.inf
    # omega vanishes at the turning point, so the profile only approaches it
    singular_plus: bool = False
    singular_minus: bool = False


@dataclass(frozen=True)
class FamilyMember:
    sign: str
    j: int
    d: float
    r: float


@dataclass(frozen=True)
class DepthFamily:
    members: list[FamilyMember]
    omitted: list[tuple[str, int]]

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def get(self, sign: str, j: int) -> FamilyMember:
        for m in self.members:
            if m.sign == sign and m.j == j:
                return m
        raise KeyError((sign, j))


@dataclass(frozen=True, eq=False)
class StreamSolution:
    model: VorticityModel
    s: float
    branch: tuple[str, int]
    d: float
    z: np.ndarray
    u: np.ndarray
    u_z: np.ndarray
    u_zz: np.ndarray
    k: float
    kappa: float
    r: float
    turning: TurningData | None = None
    _u_spline: CubicHermiteSpline = field(init=False, repr=False)
    _uz_spline: CubicHermiteSpline = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_u_spline", CubicHermiteSpline(self.z, self.u, self.u_z))
        object.__setattr__(self, "_uz_spline", CubicHermiteSpline(self.z, self.u_z, self.u_zz))

    def profile(self, z):
        """u, u_z and u_zz at arbitrary depths in [0, d]."""
        u = self._u_spline(z)
        return u, self._uz_spline(z), -self.model.omega(u)

    def summary(self) -> dict:
        t = self.turning
        return {
            "s": self.s,
            "branch": [self.branch[0], self.branch[1]],
            "d": self.d,
            "k": self.k,
            "kappa": self.kappa,
            "r": self.r,
            "tau_plus": t.tau_plus if t else None,
            "tau_minus": t.tau_minus if t else None,
            "y_plus": t.y_plus if t else None,
            "y_minus": t.y_minus if t else None,
        }


def _energy_poly(model: VorticityModel, s: float) -> Polynomial:
    return Polynomial([s * s]) - 2.0 * model.primitive_poly


def _real_roots(poly: Polynomial) -> np.ndarray:
    poly = poly.trim()
    if poly.degree() < 1:
        return np.array([])
    roots = poly.roots()
    return np.sort(roots[np.abs(roots.imag) < 1e-12].real)


def min_slope(model: VorticityModel) -> float:
    """s_0 = sqrt(2 max_{0<=tau<=1} Omega(tau))."""
    crit = _real_roots(model.omega_poly)
    tau = np.concatenate([np.linspace(0.0, 1.0, 2001), crit[(crit >= 0.0) & (crit <= 1.0)]])
    top = float(np.max(model.primitive(tau)))
    return math.sqrt(2.0 * max(top, 0.0))


def _rk4(model: VorticityModel, u0: float, v0: float, length: float, n_nodes: int, substeps: int):
    omega = model.omega
    h = length / ((n_nodes - 1) * substeps)
    u = np.empty(n_nodes)
    v = np.empty(n_nodes)
    u[0], v[0] = u0, v0
    a, b = float(u0), float(v0)
    for i in range(1, n_nodes):
        for _ in range(substeps):
            k1u, k1v = b, -omega(a)
            k2u, k2v = b + 0.5 * h * k1v, -omega(a + 0.5 * h * k1u)
            k3u, k3v = b + 0.5 * h * k2v, -omega(a + 0.5 * h * k2u)
            k4u, k4v = b + h * k3v, -omega(a + h * k3u)
            a += h * (k1u + 2.0 * k2u + 2.0 * k3u + k4u) / 6.0
            b += h * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
        u[i], v[i] = a, b
    return u, v


def _profile(model: VorticityModel, slope: float, length: float, n_nodes: int,
             substeps: int = 2, max_substeps: int = 64):
    Y = np.linspace(0.0, length, n_nodes)
    energy = slope * slope
    tol = ENERGY_TOL * max(1.0, abs(length))
    while True:
        U, V = _rk4(model, 0.0, slope, length, n_nodes, substeps)
        drift = np.max(np.abs(V * V + 2.0 * model.primitive(U) - energy))
        if drift <= tol:
            return Y, U, V
        if substeps >= max_substeps:
            raise StreamError(
                f"energy drift {drift:.3e} exceeds {tol:.1e} with {substeps} substeps per node"
            )
        log.debug("energy drift %.3e with %d substeps, refining", drift, substeps)
        substeps *= 2


def cauchy_solve(model: VorticityModel, s: float, y_span, n_nodes: int = DEFAULT_GRID_POINTS):
    """Solve U'' + omega(U) = 0, U(0) = 0, U'(0) = s on [0, y_span].

    ``y_span`` may be a scalar end point or a ``(0, end)`` pair. Returns the
    sample points and U, U' there.
    """
    if s <= 0:
        raise StreamError("cauchy_solve requires s > 0")
    end = y_span[1] if np.ndim(y_span) else y_span
    if np.ndim(y_span) and y_span[0] != 0:
        raise StreamError("the Cauchy data sits at Y = 0")
    return _profile(model, s, float(end), n_nodes)


def _find_turning(model: VorticityModel, s: float, side: int):
    """Smallest positive (side=+1) or largest negative (side=-1) root of
    2 Omega(tau) = s^2, and whether omega vanishes there."""
    G = _energy_poly(model, s)
    crit = _real_roots(model.omega_poly) * side
    grid = np.concatenate([np.linspace(0.0, 1.0, 257)[1:], np.geomspace(1.0, 1e6, 600)[1:]])
    pts = np.unique(np.concatenate([grid, crit[crit > 0]]))
    vals = G(side * pts)
    scale = s * s
    is_crit = np.isin(pts, crit)
    hits = np.nonzero(vals <= 1e-13 * scale)[0]
    if hits.size == 0:
        return math.inf * side, False
    i = hits[0]
    if is_crit[i] and abs(vals[i]) <= 1e-13 * scale:
        # G touches zero at a critical point of Omega: double root
        return side * pts[i], True
    lo = pts[i - 1] if i > 0 else 0.0
    hi = pts[i]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if G(side * mid) > 0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    return side * root, abs(model.omega(side * root)) < 1e-12


def _monotone_length(model: VorticityModel, s: float, tau: float) -> float:
    """int_0^tau dt / sqrt(s^2 - 2 Omega(t)) for a simple root tau of the integrand's radicand."""
    side = 1.0 if tau > 0 else -1.0
    b = abs(tau)
    # radicand in the mirrored variable t = side*tau, shifted to the end point
    G = _energy_poly(model, s)(Polynomial([0.0, side]))
    H = G(Polynomial([b, -1.0]))  # G(b - v)
    coef = H.coef.copy()
    coef[0] = 0.0
    Hv = Polynomial(coef[1:]) if coef.size > 1 else Polynomial([0.0])
    val = quadrature.integrate_sqrt_endpoint(Hv, 0.0, b)
    return side * val


def turning_points(model: VorticityModel, s: float) -> TurningData:
    if s <= 0:
        raise StreamError("turning_points requires s > 0")
    tp, sing_p = _find_turning(model, s, +1)
    tm, sing_m = _find_turning(model, s, -1)
    yp = math.inf if (sing_p or math.isinf(tp)) else _monotone_length(model, s, tp)
    ym = -math.inf if (sing_m or math.isinf(tm)) else _monotone_length(model, s, tm)
    if sing_p or sing_m:
        log.warning("omega vanishes at a turning point for s=%g: singular family", s)
    return TurningData(s=s, s0=min_slope(model), tau_plus=float(tp), tau_minus=float(tm),
                       y_plus=float(yp), y_minus=float(ym),
                       singular_plus=bool(sing_p), singular_minus=bool(sing_m))


def principal_depth(model: VorticityModel, s: float) -> float:
    """d(s) = int_0^1 dtau / sqrt(s^2 - 2 Omega(tau))."""
    s0 = min_slope(model)
    if s <= s0:
        raise StreamError(f"s={s} must exceed s0={s0}")
    G = _energy_poly(model, s)
    f = lambda t: 1.0 / np.sqrt(G(t))
    panels = 16
    prev = quadrature.integrate(f, 0.0, 1.0, panels)
    while panels < 4096:
        panels *= 2
        cur = quadrature.integrate(f, 0.0, 1.0, panels)
        if abs(cur - prev) <= 1e-14 * abs(cur):
            return cur
        prev = cur
    return cur


def crossing_depth(model: VorticityModel, s: float, step: float = 1e-3) -> float:
    """First Y > 0 with U(Y; s) = 1, found by marching the Cauchy problem.

    Independent of the quadrature in :func:`principal_depth`; used to
    cross-check it.
    """
    if s <= min_slope(model):
        raise StreamError("U does not reach 1 monotonically for s <= s0")
    h = step / max(1.0, s)
    a, b, y = 0.0, float(s), 0.0
    omega = model.omega

    def advance(a, b, h):
        k1u, k1v = b, -omega(a)
        k2u, k2v = b + 0.5 * h * k1v, -omega(a + 0.5 * h * k1u)
        k3u, k3v = b + 0.5 * h * k2v, -omega(a + 0.5 * h * k2u)
        k4u, k4v = b + h * k3v, -omega(a + h * k3u)
        return (a + h * (k1u + 2 * k2u + 2 * k3u + k4u) / 6.0,
                b + h * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0)

    for _ in range(10_000_000):
        na, nb = advance(a, b, h)
        if na >= 1.0:
            break
        a, b, y = na, nb, y + h
    else:
        raise StreamError("no crossing found")
    lo, hi = 0.0, h
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if advance(a, b, mid)[0] < 1.0:
            lo = mid
        else:
            hi = mid
    return y + 0.5 * (lo + hi)


def depth_family(model: VorticityModel, s: float, j_max: int,
                 turning: TurningData | None = None) -> DepthFamily:
    """All finite depths d_j^{+-}(s), j <= j_max, with Bernoulli constants.

    Minus-family members start with u'(0) = -s: they dip to tau_minus first,
    so d_j^- = d_j^+ - 2 y_minus.
    """
    if s <= min_slope(model):
        raise StreamError(f"s={s} must exceed s0")
    t = turning or turning_points(model, s)
    d = principal_depth(model, s)
    base = s * s - 2.0 * float(model.primitive(1.0))
    members, omitted = [], []
    period = t.y_plus - t.y_minus

    def plus(j):
        q, odd = divmod(j, 2)
        if odd:
            if math.isinf(t.y_plus):
                return math.inf
            shift = 2.0 * (t.y_plus - d)
        else:
            shift = 0.0
        if q > 0:
            if math.isinf(period):
                return math.inf
            shift += 2.0 * q * period
        return d + shift

    for sign in ("+", "-"):
        for j in range(j_max + 1):
            dj = plus(j)
            if sign == "-":
                dj = dj - 2.0 * t.y_minus
            if math.isinf(dj) or math.isnan(dj):
                omitted.append((sign, j))
                continue
            members.append(FamilyMember(sign, j, dj, (base + 2.0 * dj) / 3.0))
    return DepthFamily(members, omitted)


def build_stream(model: VorticityModel, s: float, branch=("+", 0),
                 n_nodes: int = DEFAULT_GRID_POINTS) -> StreamSolution:
    sign, j = branch[0], int(branch[1])
    if sign not in ("+", "-"):
        raise StreamError(f"branch sign must be '+' or '-', got {sign!r}")
    turning = turning_points(model, s)
    family = depth_family(model, s, j, turning)
    try:
        member = family.get(sign, j)
    except KeyError:
        raise StreamError(f"branch ({sign},{j}) is not finite for s={s}") from None

    slope = s if sign == "+" else -s
    z, u, u_z = _profile(model, slope, member.d, n_nodes)
    if abs(u[-1] - 1.0) > 1e-8:
        raise StreamError(f"profile misses the surface value: u(d) = {u[-1]!r}")
    # u(d) = 1 is the defining boundary condition; remove the integrator residue
    u[-1] = 1.0
    # likewise u'(d)^2 = s^2 - 2 Omega(1) holds exactly by the energy integral
    k_sq = s * s - 2.0 * float(model.primitive(1.0))
    if abs(u_z[-1] ** 2 - k_sq) > 1e-8 * max(1.0, k_sq):
        raise StreamError(f"surface slope violates the energy integral: u'(d) = {u_z[-1]!r}")
    k = math.copysign(math.sqrt(max(k_sq, 0.0)), u_z[-1])
    u_z[-1] = k
    if abs(k) < ASSUMPTION_TOL:
        raise AssumptionViolation(f"u'(d) != 0 violated: k = {k:.3e}")
    if abs(member.d - member.r) < ASSUMPTION_TOL:
        raise AssumptionViolation(f"d != r violated: d = {member.d!r}, r = {member.r!r}")
    kappa = robin_coefficient(model, k)
    return StreamSolution(model=model, s=float(s), branch=(sign, j), d=float(member.d),
                          z=z, u=u, u_z=u_z, u_zz=-model.omega(u), k=k, kappa=kappa,
                          r=float(member.r), turning=turning)


def robin_coefficient(model: VorticityModel, k: float) -> float:
    return 1.0 / (k * k) - float(model.omega(1.0)) / k
