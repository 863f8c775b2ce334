"""Reduced 2N-dimensional system for small perturbations of a stream solution.

The modal ansatz is

    phi(z) = sum_j alpha_j phi_j(z),    psi(z) = sum_j beta_j phi_j(z)

over the N dispersion modes with mu_j <= 0; the infinite-dimensional remainder
is set to zero, which leaves the vector field exact to quadratic order:

    alpha_j' = beta_j + f1_j(alpha, beta)
    beta_j'  = mu_j alpha_j + f2_j(alpha, beta)

with f1, f2 Galerkin projections of the quadratic-and-higher densities of the
rectified water-wave equations. The flow force S serves as Hamiltonian.

All state-taking functions accept either a :class:`ReducedState` or an array
whose last axis holds ``concat(alpha, beta)``; extra leading axes are batched.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import quadrature
from .dispersion import DispersionSpectrum, count_nonpositive
from .stream import StreamSolution


class SurfaceError(ArithmeticError):
    """The perturbation is too large for the surface relations to make sense."""


@dataclass(frozen=True)
class ReducedState:
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        b = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if a.shape != b.shape:
            raise ValueError("alpha and beta must have the same length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("state entries must be finite")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta])

    @classmethod
    def from_vector(cls, y) -> "ReducedState":
        y = np.asarray(y, dtype=float)
        n = y.shape[-1] // 2
        return cls(y[:n], y[n:])


State = Union[ReducedState, np.ndarray]


def _split(state: State):
    if isinstance(state, ReducedState):
        return state.alpha, state.beta
    y = np.asarray(state, dtype=float)
    n = y.shape[-1] // 2
    return y[..., :n], y[..., n:]


def _taylor_tables(coeffs, u, start: int):
    """Rows p^(m)(u)/m! for m = start..deg of the polynomial with ``coeffs``."""
    poly = np.polynomial.Polynomial(coeffs)
    rows = []
    for m in range(start, poly.degree() + 1):
        rows.append(poly.deriv(m)(u) / math.factorial(m))
    return np.array(rows) if rows else np.zeros((0,) + np.shape(u))


def _taylor_sum(table, x, start: int):
    """sum_i table[i] x^(i + start) by Horner in x."""
    acc = np.zeros_like(x)
    for row in table[::-1]:
        acc = (acc + row) * x
    return acc * x ** (start - 1) if start > 1 else acc


@dataclass(frozen=True, eq=False)
class ReducedModel:
    """Everything needed to evaluate the reduced field.

    ``stream`` is ``None`` for a purely linear model built by
    :func:`linear_model`; then the field is (beta, mu*alpha) and the
    Hamiltonian is its quadratic form.
    """

    mu: np.ndarray
    stream: StreamSolution | None = None
    spectrum: DispersionSpectrum | None = None
    nodes: np.ndarray | None = None
    weights: np.ndarray | None = None
    nonlinear: bool = True
    strict: bool = True
    _c: dict = field(default_factory=dict, repr=False)

    @property
    def n_modes(self) -> int:
        return len(self.mu)

    @property
    def linear(self) -> bool:
        return self.stream is None or not self.nonlinear

    @property
    def S0(self) -> float:
        return self._c.get("S0", 0.0)


def linear_model(mu) -> ReducedModel:
    """Reduced model with prescribed eigenvalues and no nonlinearity."""
    return ReducedModel(mu=np.asarray(mu, dtype=float), nonlinear=False,
                        strict=bool(np.all(np.asarray(mu) < 0)))


def build_model(stream: StreamSolution, spectrum: DispersionSpectrum, n_modes="auto",
                panels: int = 16, order: int = 16, nonlinear: bool = True) -> ReducedModel:
    """Assemble a :class:`ReducedModel` on the first ``n_modes`` dispersion modes.

    ``"auto"`` takes N = #{mu_j <= 0}; an explicit count may only be smaller.
    """
    N, strict = count_nonpositive(spectrum)
    if n_modes == "auto":
        n = N
    else:
        n = int(n_modes)
        if n > N:
            raise ValueError(f"n_modes={n} exceeds the number of non-positive eigenvalues N={N}")
    if n < 1:
        raise ValueError("the stream has no non-positive dispersion eigenvalue; nothing to reduce")

    model = stream.model
    d, k = stream.d, stream.k
    z, w = quadrature.gauss_legendre(0.0, d, panels, order)
    u, u_z, u_zz = stream.profile(z)
    om = model.omega(u)
    omp = model.omega_prime(u)
    phi, dphi, ddphi = spectrum.modes(z, omp, n)
    phi_d = spectrum.phi[:n, -1].copy()
    dphi_d = spectrum.dphi[:n, -1].copy()
    omega1 = float(model.omega(1.0))
    coeffs = model.omega_poly.coef
    c = dict(
        z=z, w=w, u=u, u_z=u_z, u_zz=u_zz, om=om, omp=omp,
        phi=phi, dphi=dphi, ddphi=ddphi, wphi=phi * w[None, :],
        phi_d=phi_d, dphi_d=dphi_d,
        d=d, k=k, kappa=stream.kappa, r=stream.r, omega1=omega1,
        Omega1=float(model.primitive(1.0)),
        zuz=z * u_z,
        # (z u_z)_z and (z u_z)_zz, using u_zz = -omega(u)
        zuz_z=u_z + z * u_zz,
        zuz_zz=-2.0 * om - z * omp * u_z,
        # omega(u + x) - omega(u) - omega'(u) x and Omega(u + x) - Omega(u) as Taylor tables
        om_rem=_taylor_tables(coeffs, u, 2),
        Om_inc=_taylor_tables(model.primitive_poly.coef, u, 1),
        Om_u=model.primitive(u),
        surf_coef=1.0 / d - omega1 / k,
        c_d=(k - d * omega1) / d,
    )
    rm = ReducedModel(mu=spectrum.mu[:n].copy(), stream=stream, spectrum=spectrum, nodes=z,
                      weights=w, nonlinear=nonlinear, strict=strict, _c=c)
    c["S0"] = flow_force(rm, u, u_z, np.zeros_like(u), d)
    return rm


def surface_values(model: ReducedModel, state: State):
    """(zeta, zeta_x): surface displacement and its slope for the modal fields."""
    c = model._c
    alpha, beta = _split(state)
    phid = alpha @ c["phi_d"]
    psid = beta @ c["phi_d"]
    phizd = alpha @ c["dphi_d"]
    return _surface(c, phid, psid, phizd)


def _surface(c, phid, psid, phizd):
    k = c["k"]
    zeta = -phid / k
    den = k + phizd - c["surf_coef"] * phid
    if np.any(np.abs(den) < 0.5 * abs(k)):
        raise SurfaceError("surface relation degenerates: |denominator| < |k|/2")
    return zeta, -psid / den


def bernoulli_profile(model: ReducedModel, t):
    """P(t) = t^2 (3r - 2t) / d^2."""
    c = model._c
    q = t / c["d"]
    return q * q * (3.0 * c["r"] - 2.0 * t)


def _densities(c, alpha, beta):
    d, k = c["d"], c["k"]
    z = c["z"]
    phi = alpha @ c["phi"]
    phi_z = alpha @ c["dphi"]
    phi_zz = alpha @ c["ddphi"]
    psi = beta @ c["phi"]
    psi_z = beta @ c["dphi"]
    phid = alpha @ c["phi_d"]
    psid = beta @ c["phi_d"]
    zeta, zeta_x = _surface(c, phid, psid, alpha @ c["dphi_d"])
    if np.any(d + zeta <= 0.5 * d):
        raise SurfaceError("surface collapse: d + zeta <= d/2")
    zeta = np.asarray(zeta)[..., None]
    zeta_x = np.asarray(zeta_x)[..., None]
    eta = d + zeta

    n1 = -zeta * psi / eta + z * zeta_x * (d * phi_z + z * zeta * c["u_zz"]) / (d * eta)

    # Phi - u written in the unshifted variable, and its second z-derivative
    bar = phi + c["zuz"] * zeta / d
    bar_zz = phi_zz + c["zuz_zz"] * zeta / d
    rem = _taylor_sum(c["om_rem"], bar, 2)
    n2 = (zeta_x * (psi + z * psi_z) / eta
          + zeta * bar_zz / eta
          + zeta**2 * c["om"] / (d * eta)
          - zeta * c["omp"] * bar / d
          - eta / d * rem)

    zeta_s = zeta[..., 0]
    slope = c["kappa"] * phid + c["c_d"] * zeta_s
    p_rem = (3.0 * c["r"] - 6.0 * d) * zeta_s**2 / d**2 - 2.0 * zeta_s**3 / d**2
    n3 = (-(psid**2 + slope**2) + p_rem) / (2.0 * k)
    return n1, n2, n3


def nonlinear_densities(model: ReducedModel, state: State):
    """Densities N1(z), N2(z) at the quadrature nodes and the boundary value N3."""
    alpha, beta = _split(state)
    return _densities(model._c, alpha, beta)


def f0(model: ReducedModel, state: State):
    """Quadratic-and-higher Galerkin coefficients (f1, f2)."""
    alpha, beta = _split(state)
    if model.linear:
        return np.zeros_like(alpha), np.zeros_like(beta)
    c = model._c
    n1, n2, n3 = _densities(c, alpha, beta)
    f1 = n1 @ c["wphi"].T
    f2 = n2 @ c["wphi"].T - np.asarray(n3)[..., None] * c["phi_d"]
    return f1, f2


def vector_field(model: ReducedModel, state: State):
    """(alpha', beta') of the truncated reduced system."""
    alpha, beta = _split(state)
    if model.linear:
        return beta.copy(), model.mu * alpha
    f1, f2 = f0(model, np.concatenate([alpha, beta], axis=-1))
    return beta + f1, model.mu * alpha + f2


def field(model: ReducedModel, y):
    """Vector field on the flat state ``concat(alpha, beta)``."""
    da, db = vector_field(model, y)
    return np.concatenate([da, db], axis=-1)


def flow_force(model: ReducedModel, Phi, Phi_z, Psi, eta) -> float:
    """Flow force of fields sampled at the model's quadrature nodes.

    ``eta`` is the local surface height (scalar or per leading batch index).
    """
    c = model._c
    d, r, w = c["d"], c["r"], c["w"]
    eta = np.asarray(eta, dtype=float)
    Omega = model.stream.model.primitive(Phi)
    integrand = d / (2.0 * eta[..., None]) * (Psi**2 - Phi_z**2) + eta[..., None] / d * Omega
    return (1.5 * r + c["Omega1"]) * eta - 0.5 * eta**2 - integrand @ w


def ansatz_fields(model: ReducedModel, state: State):
    """Phi, Phi_z, Psi at the quadrature nodes and eta for the truncated manifold."""
    c = model._c
    alpha, beta = _split(state)
    phi = alpha @ c["phi"]
    zeta = -(alpha @ c["phi_d"]) / c["k"]
    zc = np.asarray(zeta)[..., None]
    Phi = c["u"] + phi + c["zuz"] * zc / c["d"]
    Phi_z = c["u_z"] + alpha @ c["dphi"] + c["zuz_z"] * zc / c["d"]
    Psi = beta @ c["phi"]
    return Phi, Phi_z, Psi, c["d"] + zeta


def hamiltonian(model: ReducedModel, state: State):
    """Flow force s(alpha, beta) on the truncated manifold and its quadratic part.

    Returns ``(s, s2)``; ``s - S0`` is accumulated from differences so that
    small amplitudes do not drown in the constant.
    """
    alpha, beta = _split(state)
    quad = 0.5 * np.sum(model.mu * alpha**2, axis=-1) - 0.5 * np.sum(beta**2, axis=-1)
    if model.linear:
        return model.S0 + quad, model.S0 + quad
    return model.S0 + flow_force_increment(model, state), model.S0 + quad


def flow_force_increment(model: ReducedModel, state: State):
    """s(alpha, beta) - S0."""
    c = model._c
    alpha, beta = _split(state)
    d, w = c["d"], c["w"]
    zeta = -(alpha @ c["phi_d"]) / c["k"]
    zc = np.asarray(zeta)[..., None]
    eta = d + zc
    bar = alpha @ c["phi"] + c["zuz"] * zc / d
    bar_z = alpha @ c["dphi"] + c["zuz_z"] * zc / d
    psi = beta @ c["phi"]
    dOm = _taylor_sum(c["Om_inc"], bar, 1)
    integrand = (d / (2.0 * eta) * psi**2
                 - d / (2.0 * eta) * bar_z * (2.0 * c["u_z"] + bar_z)
                 + 0.5 * c["u_z"] ** 2 * zc / eta
                 + eta / d * dOm + zc / d * c["Om_u"])
    return (1.5 * c["r"] + c["Omega1"]) * zeta - d * zeta - 0.5 * zeta**2 - integrand @ w
