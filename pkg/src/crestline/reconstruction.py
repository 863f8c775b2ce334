"""Physical wave fields from a reduced trajectory.

On the rectified strip 0 < z < d the stream function is

    Phi = u + Phi_hat - z u_z Phi_hat(x, d) / (k d),    Psi = Psi_hat,

with Phi_hat = sum alpha_j phi_j, Psi_hat = sum beta_j phi_j, and the free
surface is eta = d + zeta, zeta = -Phi_hat(x, d) / k. The physical stream
function is psi(X, Y) = Phi(X, d Y / eta(X)).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .dynamics import Trajectory, integrate, mirror_defect_at, mirror_defects
from .reduction import ReducedModel, SurfaceError, bernoulli_profile, surface_values


@dataclass(frozen=True, eq=False)
class WaveFields:
    x: np.ndarray
    z: np.ndarray
    d: float
    eta: np.ndarray
    zeta_x: np.ndarray
    Phi: np.ndarray      # (nx, nz)
    Phi_z: np.ndarray
    Phi_zz: np.ndarray
    Psi: np.ndarray
    Psi_z: np.ndarray

    def psi_physical(self, Y) -> np.ndarray:
        """psi(X, Y) on the x grid, cubic in z; NaN above the free surface."""
        Y = np.atleast_1d(np.asarray(Y, dtype=float))
        out = np.full((len(self.x), len(Y)), np.nan)
        for i in range(len(self.x)):
            inside = (Y >= 0) & (Y <= self.eta[i])
            zz = np.minimum(self.d * Y[inside] / self.eta[i], self.d)
            spline = CubicHermiteSpline(self.z, self.Phi[i], self.Phi_z[i])
            out[i, inside] = spline(zz)
        return out


def reconstruct(model: ReducedModel, traj: Trajectory, z=None, n_z: int = 65,
                stride: int = 1) -> WaveFields:
    """Wave fields on the samples ``traj.x[::stride]`` and depths ``z``.

    ``z`` must start at 0 and end at d; the default is ``n_z`` uniform points.
    """
    stream, spectrum = model.stream, model.spectrum
    if stream is None:
        raise ValueError("reconstruction needs a model built from a stream solution")
    d, k = stream.d, stream.k
    if z is None:
        z = np.linspace(0.0, d, n_z)
    z = np.asarray(z, dtype=float)
    if z[0] != 0.0 or z[-1] != d:
        raise ValueError("z grid must run from 0 to d")
    vort = stream.model
    u, u_z, u_zz = stream.profile(z)
    om, omp = vort.omega(u), vort.omega_prime(u)
    phi, dphi, ddphi = spectrum.modes(z, omp, model.n_modes)

    A = traj.alpha[::stride]
    B = traj.beta[::stride]
    x = traj.x[::stride]
    hat = A @ phi
    hat_z = A @ dphi
    hat_zz = A @ ddphi
    hat_d = hat[:, -1:]
    # z u_z and its z-derivatives, using u_zz = -omega(u); the ratio is 1 at z = d
    shift = (z * u_z) / (k * d)
    shift_z = (u_z + z * u_zz) / (k * d)
    shift_zz = (-2.0 * om - z * omp * u_z) / (k * d)

    Phi = u + hat - shift * hat_d
    Phi_z = u_z + hat_z - shift_z * hat_d
    Phi_zz = u_zz + hat_zz - shift_zz * hat_d
    eta = d - hat_d[:, 0] / k
    if np.any(eta <= 0.5 * d):
        raise SurfaceError("surface collapse: eta <= d/2")
    ys = np.concatenate([A, B], axis=1)
    zeta_x = np.asarray(surface_values(model, ys)[1], dtype=float).reshape(len(x))
    return WaveFields(x=x, z=z, d=d, eta=eta, zeta_x=zeta_x, Phi=Phi, Phi_z=Phi_z,
                      Phi_zz=Phi_zz, Psi=B @ phi, Psi_z=B @ dphi)


def bernoulli_residual(fields: WaveFields, model: ReducedModel) -> float:
    """max_x |Psi(x,d)^2 + Phi_z(x,d)^2 - P(eta(x))|."""
    lhs = fields.Psi[:, -1] ** 2 + fields.Phi_z[:, -1] ** 2
    return float(np.max(np.abs(lhs - bernoulli_profile(model, fields.eta))))


def _dx(f, h):
    """Fourth-order centred x-derivative; loses two samples at each end."""
    return (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)


def field_residual(fields: WaveFields, model: ReducedModel) -> float:
    """Max residual of the rectified interior equation

        [Phi_x - (z eta_x/eta) Phi_z]_x - (z eta_x/eta) [...]_z + (d/eta)^2 Phi_zz + omega(Phi) = 0

    with x-derivatives by centred differences and eta_x = zeta_x.
    """
    x = fields.x
    if len(x) < 9:
        raise ValueError("need at least 9 x samples")
    h = (x[-1] - x[0]) / (len(x) - 1)
    if not np.allclose(np.diff(x), h, rtol=1e-9, atol=0):
        raise ValueError("field_residual needs a uniform x grid")
    z, d = fields.z, fields.d
    c = (z[None, :] * (fields.zeta_x / fields.eta)[:, None])   # z eta_x / eta
    Phi_x = _dx(fields.Phi, h)
    Phi_xz = _dx(fields.Phi_z, h)
    sl = slice(2, -2)
    G = Phi_x - c[sl] * fields.Phi_z[sl]
    G_z = Phi_xz - c[sl] * fields.Phi_zz[sl] - (fields.zeta_x / fields.eta)[sl, None] * fields.Phi_z[sl]
    G_x = _dx(G, h)
    inner = slice(4, -4)
    res = (G_x - c[inner] * G_z[2:-2]
           + (d / fields.eta[inner, None]) ** 2 * fields.Phi_zz[inner]
           + model.stream.model.omega(fields.Phi[inner]))
    return float(np.max(np.abs(res[:, 1:-1])))


def boundary_defects(fields: WaveFields) -> tuple[float, float]:
    """(max |Phi(x,0)|, max |Phi(x,d) - 1|)."""
    return float(np.max(np.abs(fields.Phi[:, 0]))), float(np.max(np.abs(fields.Phi[:, -1] - 1.0)))


def eta_mirror_defect(fields: WaveFields, center_index: int) -> float:
    """Mirror defect of eta about the sample ``center_index``."""
    return mirror_defect_at(fields.x, fields.eta, center_index)


def eta_mirror_defects(fields: WaveFields, min_overlap: float, stride: int = 1):
    """Mirror defect of eta about every sample with at least ``min_overlap`` on each side."""
    return mirror_defects(fields.x, fields.eta, min_overlap, stride)


def amplitude_sweep(model: ReducedModel, direction, amplitudes, x_max: float,
                    step: float | None = None, n_z: int = 33, stride: int = 1) -> dict:
    """Bernoulli and interior residuals along a family of initial amplitudes.

    Returns the residuals and their log-log slopes against amplitude.
    """
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    amps = np.asarray(amplitudes, dtype=float)
    bern, inner = [], []
    for eps in amps:
        traj = integrate(model, eps * direction, x_max, step)
        f = reconstruct(model, traj, n_z=n_z, stride=stride)
        bern.append(bernoulli_residual(f, model))
        inner.append(field_residual(f, model))
    slope = lambda r: float(np.polyfit(np.log(amps), np.log(r), 1)[0])
    return {"amplitudes": amps.tolist(), "bernoulli": bern, "interior": inner,
            "bernoulli_slope": slope(bern), "interior_slope": slope(inner)}


def mirror_symmetric_bound(tol: float) -> float:
    """Bound on the eta mirror defect of a symmetric wave: 100x the integrator tolerance."""
    return 100.0 * tol

