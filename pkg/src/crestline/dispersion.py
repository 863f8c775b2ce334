"""Dispersion relation: the Sturm-Liouville problem

    -phi'' - omega'(u(z)) phi = mu phi  on (0, d),
    phi(0) = 0,   phi'(d) = kappa phi(d),

solved by shooting. The initial-value problem is propagated with RK4
transfer matrices, many trial values of mu at once, and eigenvalues are
located by the Pruefer phase: theta(d; mu) is increasing in mu and the j-th
eigenvalue is the unique root of theta(d; mu) = (j - 1) pi + arccot(kappa).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import quadrature
from .stream import StreamSolution
from .vorticity import VorticityModel

SUBSTEPS = 4


class DispersionError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class DispersionSpectrum:
    mu: np.ndarray
    z: np.ndarray
    phi: np.ndarray      # (n_eigen, n_nodes), unit L2 norm, phi'(0) > 0
    dphi: np.ndarray
    n_negative: int
    strict: bool
    robin: float
    depth: float
    potential: np.ndarray  # omega'(u(z)) (+ shift) on the grid
    _splines: list = field(init=False, repr=False)

    def __post_init__(self):
        ddphi = -(self.potential[None, :] + self.mu[:, None]) * self.phi
        object.__setattr__(self, "_splines", [
            (CubicHermiteSpline(self.z, p, dp), CubicHermiteSpline(self.z, dp, ddp))
            for p, dp, ddp in zip(self.phi, self.dphi, ddphi)
        ])

    @property
    def n_eigen(self) -> int:
        return len(self.mu)

    def modes(self, z, potential, count: int | None = None):
        """phi_j, phi_j', phi_j'' at depths ``z`` for the first ``count`` modes.

        ``potential`` is omega'(u(z)) at the same depths; the second derivative
        comes from the eigen-equation, not from differentiating samples.
        """
        count = self.n_eigen if count is None else count
        phi = np.array([s[0](z) for s in self._splines[:count]])
        dphi = np.array([s[1](z) for s in self._splines[:count]])
        ddphi = -(np.asarray(potential)[None, :] + self.mu[:count, None]) * phi
        return phi, dphi, ddphi


class _Shooter:
    """Propagates (phi, phi') from z = 0 for arrays of trial eigenvalues."""

    def __init__(self, stream: StreamSolution, model: VorticityModel, shift: float = 0.0,
                 substeps: int = SUBSTEPS):
        self.z = stream.z
        self.kappa = stream.kappa
        n = len(self.z) - 1
        zf = np.linspace(0.0, stream.d, n * substeps + 1)
        h = zf[1] - zf[0]
        zm = zf[:-1] + 0.5 * h
        q = lambda zz: model.omega_prime(stream.profile(zz)[0]) + shift
        self.q_left = q(zf[:-1]).reshape(n, substeps)
        self.q_mid = q(zm).reshape(n, substeps)
        self.q_right = q(zf[1:]).reshape(n, substeps)
        self.q_nodes = q(self.z)
        self.h = h
        self.substeps = substeps

    def _node_matrices(self, mu):
        """RK4 propagators between consecutive grid nodes, shape (n_mu, n, 2, 2)."""
        h = self.h
        mu = np.asarray(mu, dtype=float)[:, None, None]
        c0 = mu + self.q_left[None]
        c1 = mu + self.q_mid[None]
        c2 = mu + self.q_right[None]
        # K = A (I + a K_prev) with A = [[0, 1], [-c, 0]]; entries written out
        # K1 = A0
        k1 = (np.zeros_like(c0), np.ones_like(c0), -c0, np.zeros_like(c0))

        def stage(c, a, kp):
            b00 = 1 + a * kp[0]; b01 = a * kp[1]; b10 = a * kp[2]; b11 = 1 + a * kp[3]
            return (b10, b11, -c * b00, -c * b01)

        k2 = stage(c1, 0.5 * h, k1)
        k3 = stage(c1, 0.5 * h, k2)
        k4 = stage(c2, h, k3)
        m = [(i == 3 or i == 0) + h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]) for i in range(4)]
        M = np.stack(m, axis=-1).reshape(m[0].shape + (2, 2))
        # compose substeps: later substeps act on the left
        P = M[..., 0, :, :]
        for s in range(1, self.substeps):
            P = M[..., s, :, :] @ P
        return P

    def shoot(self, mu, keep_path: bool = False):
        """Returns (theta_d, phi_d, dphi_d[, phi_path, dphi_path])."""
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        P = self._node_matrices(mu)
        n = P.shape[1]
        a = np.zeros(len(mu))
        b = np.ones(len(mu))
        zeros = np.zeros(len(mu), dtype=int)
        if keep_path:
            path_a = np.empty((len(mu), n + 1)); path_b = np.empty((len(mu), n + 1))
            path_a[:, 0], path_b[:, 0] = a, b
        p00, p01, p10, p11 = P[..., 0, 0], P[..., 0, 1], P[..., 1, 0], P[..., 1, 1]
        for i in range(n):
            na = p00[:, i] * a + p01[:, i] * b
            nb = p10[:, i] * a + p11[:, i] * b
            if i > 0:
                zeros += (na * a) < 0
            a, b = na, nb
            if keep_path:
                path_a[:, i + 1], path_b[:, i + 1] = a, b
            elif i % 64 == 0:
                scale = np.maximum(np.abs(a), np.abs(b))
                a, b = a / scale, b / scale
        theta = zeros * math.pi + _arccot2(b, a)
        if keep_path:
            return theta, a, b, path_a, path_b
        return theta, a, b


def _arccot2(num, den):
    """arccot(num/den) in (0, pi) for den != 0, continuous through den = 0."""
    return np.mod(np.arctan2(den, num), math.pi)


def solve_spectrum(stream: StreamSolution, model: VorticityModel, n_eigen: int,
                   potential_shift: float = 0.0, max_iter: int = 200) -> DispersionSpectrum:
    """Lowest ``n_eigen`` eigenpairs of the dispersion problem for ``stream``."""
    if n_eigen < 1:
        raise ValueError("n_eigen must be >= 1")
    sh = _Shooter(stream, model, potential_shift)
    d, kappa = stream.d, stream.kappa
    theta_r = float(_arccot2(np.array(kappa), np.array(1.0)))
    targets = theta_r + math.pi * np.arange(n_eigen)

    q_max, q_min = float(np.max(sh.q_nodes)), float(np.min(sh.q_nodes))
    lo = -q_max - kappa * kappa - 1.0 / d**2 - 1.0
    while sh.shoot([lo])[0][0] >= targets[0]:
        lo = 2.0 * lo - 1.0
    hi = ((n_eigen + 1) * math.pi / d) ** 2 - q_min + abs(kappa) + 1.0
    while sh.shoot([hi])[0][0] <= targets[-1]:
        hi = 2.0 * hi + 1.0

    # coarse scan to seed per-eigenvalue brackets
    trial = np.concatenate([np.linspace(lo, hi, 48), -np.geomspace(1e-3, -lo, 16) if lo < 0 else []])
    trial = np.unique(np.concatenate([[lo, hi], trial]))
    th = sh.shoot(trial)[0]
    idx = np.searchsorted(th, targets)  # th is increasing in mu
    a = trial[np.clip(idx - 1, 0, len(trial) - 1)]
    b = trial[np.clip(idx, 0, len(trial) - 1)]

    def mismatch(mu):
        return sh.shoot(mu)[0] - targets

    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        f = mismatch(mid)
        a = np.where(f < 0, mid, a)
        b = np.where(f < 0, b, mid)
        if np.all(b - a <= 1e-4 * (1.0 + np.abs(a))):
            break

    # secant on the normalised Robin residual, kept inside the phase bracket
    def residual(mu):
        _, p, dp = sh.shoot(mu)
        return (dp - kappa * p) / np.hypot(p, dp)

    x0, x1 = a, b
    r0, r1 = residual(x0), residual(x1)
    converged = np.zeros(n_eigen, dtype=bool)
    for _ in range(max_iter):
        denom = r1 - r0
        safe = np.abs(denom) > 0
        x2 = np.where(safe, x1 - r1 * (x1 - x0) / np.where(safe, denom, 1.0), x1)
        x2 = np.clip(x2, a, b)
        step = np.abs(x2 - x1)
        converged = step <= 4e-16 * (1.0 + np.abs(x2)) + 1e-14
        if np.all(converged):
            x1 = x2
            break
        x0, r0 = x1, r1
        x1, r1 = x2, residual(x2)
    else:
        bad = np.nonzero(~converged)[0] + 1
        raise DispersionError(f"eigenvalue iteration did not converge for index {bad.tolist()}")
    mu = x1

    _, pd, dpd, phi, dphi = sh.shoot(mu, keep_path=True)
    if not np.all(np.diff(mu) > 0):
        raise DispersionError("eigenvalues are not strictly increasing")
    nodes, weights = quadrature.gauss_legendre(0.0, d, 64, 16)
    for j in range(n_eigen):
        vals = CubicHermiteSpline(stream.z, phi[j], dphi[j])(nodes)
        norm = math.sqrt(float(np.dot(weights, vals * vals)))
        phi[j] /= norm
        dphi[j] /= norm
    N = int(np.sum(mu <= 0))
    strict = bool(np.all(mu[:N] < 0))
    return DispersionSpectrum(mu=mu, z=stream.z.copy(), phi=phi, dphi=dphi, n_negative=N,
                              strict=strict, robin=kappa, depth=d, potential=sh.q_nodes)


def count_nonpositive(spec: DispersionSpectrum) -> tuple[int, bool]:
    """N = #{mu_j <= 0} and whether those eigenvalues are all strictly negative."""
    if spec.mu[-1] <= 0:
        raise DispersionError(
            f"all {spec.n_eigen} computed eigenvalues are non-positive; increase n_eigen to certify N"
        )
    N = int(np.sum(spec.mu <= 0))
    return N, bool(np.all(spec.mu[:N] < 0))
