"""Spatial dynamics of the reduced system.

Trajectories are integrated with the classical fourth-order Runge-Kutta
method on a uniform grid. The field is reversible under
(alpha, beta, x) -> (alpha, -beta, -x), so a trajectory through beta = 0 at
x0 is mirror symmetric about x0; :func:`symmetry_scan` looks for such points
and verifies the mirror property directly.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .reduction import ReducedModel, ReducedState, field, flow_force_increment, surface_values

# Global accuracy of the default step at trust-region amplitudes; the
# reversibility and mirror bounds are stated as multiples of this.
INTEGRATOR_TOL = 1e-10
TRUST_FACTOR = 2.0
STEPS_PER_PERIOD = 1000


class TrustRegionError(ArithmeticError):
    """The amplitude left the region where the truncated field is meaningful."""


class IntegrationError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class Trajectory:
    x: np.ndarray
    alpha: np.ndarray          # (n, N)
    beta: np.ndarray           # (n, N)
    hamiltonian_values: np.ndarray
    zeta_values: np.ndarray
    s_increment: np.ndarray    # s - S0, kept separately for precision

    def __post_init__(self):
        n = len(self.x)
        if not (len(self.alpha) == len(self.beta) == len(self.hamiltonian_values)
                == len(self.zeta_values) == n):
            raise ValueError("trajectory arrays must have equal length")
        if n > 1 and not np.all(np.diff(self.x) > 0):
            raise ValueError("x must be strictly increasing")

    def __len__(self):
        return len(self.x)

    @property
    def n_modes(self) -> int:
        return self.alpha.shape[1]

    @property
    def vectors(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta], axis=1)

    @property
    def states(self) -> list[ReducedState]:
        return [ReducedState(a, b) for a, b in zip(self.alpha, self.beta)]

    @property
    def amplitude(self) -> float:
        return float(np.max(np.linalg.norm(self.vectors, axis=1)))

    def drift(self) -> float:
        """max |s(x) - s(x_start)|."""
        return float(np.max(np.abs(self.s_increment - self.s_increment[0])))


def default_step(model: ReducedModel) -> float:
    """1e-3 of the shortest linear period 2 pi / sqrt(-mu_N)."""
    mu_fast = float(np.min(model.mu))
    if mu_fast >= 0:
        raise ValueError("default step needs a negative eigenvalue")
    return 2.0 * math.pi / math.sqrt(-mu_fast) / STEPS_PER_PERIOD


def rk4_step(model: ReducedModel, y, h: float):
    k1 = field(model, y)
    k2 = field(model, y + 0.5 * h * k1)
    k3 = field(model, y + 0.5 * h * k2)
    k4 = field(model, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _as_vector(initial) -> np.ndarray:
    if isinstance(initial, ReducedState):
        return initial.vector
    return np.asarray(initial, dtype=float).copy()


def _march(model, y0, length, step, limit, sign=1.0):
    """Uniform RK4 march over ``length`` >= 0 in direction ``sign``; returns (h, states)."""
    n = int(math.ceil(length / step - 1e-9)) if length > 0 else 0
    out = np.empty((n + 1, len(y0)))
    out[0] = y0
    if n == 0:
        return 0.0, out
    h = length / n
    y = y0
    for i in range(n):
        y = rk4_step(model, y, sign * h)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite state after {i + 1} steps (step {h:g})")
        if limit is not None and np.linalg.norm(y) > limit:
            raise TrustRegionError(
                f"amplitude {np.linalg.norm(y):.3e} exceeds the trust region {limit:.3e} "
                f"at x = {sign * (i + 1) * h:.6g}; the truncated field is no longer valid"
            )
        out[i + 1] = y
    return h, out


def integrate(model: ReducedModel, initial, x_max: float, step: float | None = None,
              x_min: float = 0.0, radius: float | None = None) -> Trajectory:
    """Integrate from the state ``initial`` at x = 0 over [x_min, x_max].

    ``radius`` is the smallness radius (default |initial|); the nonlinear
    field is trusted up to twice that. Linear models have no trust region.
    """
    if step is None:
        step = default_step(model)
    if not (step > 0 and math.isfinite(step)):
        raise ValueError("step must be positive")
    if x_max < 0 or x_min > 0:
        raise ValueError("need x_min <= 0 <= x_max")
    y0 = _as_vector(initial)
    if y0.shape != (2 * model.n_modes,):
        raise ValueError(f"initial state must have length {2 * model.n_modes}")
    if radius is None:
        radius = float(np.linalg.norm(y0))
    limit = None if model.linear else TRUST_FACTOR * radius * (1 + 1e-12)

    h_f, fwd = _march(model, y0, float(x_max), step, limit)
    h_b, bwd = _march(model, y0, -float(x_min), step, limit, -1.0)
    xs_f = h_f * np.arange(len(fwd))
    xs_b = -h_b * np.arange(len(bwd))
    x = np.concatenate([xs_b[:0:-1], xs_f])
    ys = np.concatenate([bwd[:0:-1], fwd])
    if x_max > 0:
        x[-1] = x_max
    if x_min < 0:
        x[0] = x_min
    alpha, beta = ys[:, :model.n_modes].copy(), ys[:, model.n_modes:].copy()
    if model.linear:
        inc = 0.5 * (alpha**2 @ model.mu) - 0.5 * np.sum(beta**2, axis=1)
    else:
        inc = flow_force_increment(model, ys)
    if model.stream is not None:
        zeta = np.asarray(surface_values(model, ys)[0], dtype=float)
    else:
        zeta = np.full(len(x), np.nan)
    return Trajectory(x=x, alpha=alpha, beta=beta, hamiltonian_values=model.S0 + inc,
                      zeta_values=zeta, s_increment=inc)


def reverse_check(model: ReducedModel, initial, x_max: float, step: float | None = None) -> float:
    """Max discrepancy between y2(x) and R y1(-x) on [0, x_max].

    y1 starts from (alpha0, beta0), y2 from (alpha0, -beta0) and R flips beta.
    For a reversible field the two coincide.
    """
    y0 = _as_vector(initial)
    n = model.n_modes
    mirrored = np.concatenate([y0[:n], -y0[n:]])
    back = integrate(model, y0, 0.0, step, x_min=-x_max)
    fwd = integrate(model, mirrored, x_max, step)
    a1, b1 = back.alpha[::-1], back.beta[::-1]
    return float(np.max(np.linalg.norm(fwd.alpha - a1, axis=1)
                        + np.linalg.norm(fwd.beta + b1, axis=1)))


@dataclass(frozen=True)
class SymmetryReport:
    min_beta_norm: float
    symmetric_point: float | None = None
    mirror_residual: float | None = None
    amplitude: float = 0.0

    def __post_init__(self):
        if (self.symmetric_point is None) != (self.mirror_residual is None):
            raise ValueError("mirror_residual is reported exactly when a symmetric point is")

    @property
    def symmetric(self) -> bool:
        return self.symmetric_point is not None


def _local_minima(values):
    """Indices of discrete local minima, endpoints included."""
    v = np.asarray(values)
    if len(v) < 3:
        return np.array([int(np.argmin(v))])
    inner = np.nonzero((v[1:-1] <= v[:-2]) & (v[1:-1] <= v[2:]))[0] + 1
    ends = [i for i, j in ((0, 1), (len(v) - 1, len(v) - 2)) if v[i] <= v[j]]
    return np.unique(np.concatenate([inner, ends]).astype(int))


def symmetry_scan(traj: Trajectory, tolerance: float) -> SymmetryReport:
    """Look for x0 with beta(x0) = 0 and check the mirror property there."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    amp = traj.amplitude
    if amp == 0.0:
        return SymmetryReport(0.0, float(traj.x[0]), 0.0, 0.0)
    x = traj.x
    b2 = np.sum(traj.beta**2, axis=1)
    if len(x) < 4:
        i = int(np.argmin(b2))
        cands = [(math.sqrt(b2[i]), float(x[i]))]
        spl_a = spl_b = None
    else:
        spl_a = CubicSpline(x, traj.alpha)
        spl_b = CubicSpline(x, traj.beta)
        dspl_b = spl_b.derivative()
        g = lambda t: float(spl_b(t) @ dspl_b(t))
        cands = []
        for i in _local_minima(b2):
            xi, best = float(x[i]), math.sqrt(b2[i])
            lo, hi = x[max(i - 1, 0)], x[min(i + 1, len(x) - 1)]
            if 0 < i < len(x) - 1 and g(lo) < 0 < g(hi):
                xr = brentq(g, lo, hi, xtol=1e-15, rtol=1e-15)
                val = float(np.linalg.norm(spl_b(xr)))
                if val < best:
                    xi, best = xr, val
            cands.append((best, xi))
    best, x0 = min(cands)
    if best >= tolerance * amp:
        return SymmetryReport(best / amp, None, None, amp)
    span = min(x0 - x[0], x[-1] - x0)
    if spl_a is None or span <= 0:
        return SymmetryReport(best / amp, x0, 0.0, amp)
    h = float(np.min(np.diff(x)))
    t = np.linspace(0.0, span, int(span / h) + 1)
    res = (np.linalg.norm(spl_a(x0 + t) - spl_a(x0 - t), axis=1)
           + np.linalg.norm(spl_b(x0 + t) + spl_b(x0 - t), axis=1))
    return SymmetryReport(best / amp, x0, float(np.max(res)), amp)


def mirror_defects(x, values, min_overlap: float = 0.0, stride: int = 1):
    """Mirror defect max_t |v(c + t) - v(c - t)| for every grid centre c.

    Only centres whose overlap window reaches at least ``min_overlap`` on both
    sides are returned; t runs over grid offsets. Returns (centres, defects).
    """
    x = np.asarray(x)[::stride]
    v = np.asarray(values)[::stride]
    n = len(v)
    h = (x[-1] - x[0]) / (n - 1)
    m_min = max(int(math.ceil(min_overlap / h - 1e-9)), 1)
    idx = np.arange(m_min, n - m_min)
    if len(idx) == 0:
        return x[:0], v[:0]
    out = np.zeros(n)
    for lag in range(1, (n - 1) // 2 + 1):
        out[lag:n - lag] = np.maximum(out[lag:n - lag], np.abs(v[2 * lag:] - v[:n - 2 * lag]))
    return x[idx], out[idx]


def mirror_defect_at(x, values, center_index: int) -> float:
    """Mirror defect of gridded values about the grid point ``center_index``."""
    v = np.asarray(values)
    m = min(center_index, len(v) - 1 - center_index)
    if m == 0:
        return 0.0
    right = v[center_index + 1:center_index + m + 1]
    left = v[center_index - m:center_index][::-1]
    return float(np.max(np.abs(right - left)))


# --- Monte-Carlo dimension scan ---------------------------------------------

def sample_ball(seed: int, samples: int, dim: int, radius: float) -> np.ndarray:
    """Uniform samples from the radius-ball in R^dim, one substream per sample.

    Sample i depends only on (seed, i), so chunking and worker count do not
    change the draws.
    """
    children = np.random.SeedSequence(seed).spawn(samples)
    out = np.empty((samples, dim))
    for i, ss in enumerate(children):
        g = np.random.Generator(np.random.Philox(ss))
        v = g.standard_normal(dim)
        rad = radius * g.random() ** (1.0 / dim)
        out[i] = rad * v / np.linalg.norm(v)
    return out


def min_beta_norms(model: ReducedModel, initial: np.ndarray, x_window: float, step: float,
                   radius: float) -> np.ndarray:
    """min over [0, x_window] of |beta(x)| for a batch of initial states.

    Discrete minima of |beta|^2 are refined by a parabola through three
    neighbouring samples.
    """
    y = np.array(initial, dtype=float)
    n = model.n_modes
    steps = int(math.ceil(x_window / step - 1e-9))
    h = x_window / steps
    limit = TRUST_FACTOR * radius * (1 + 1e-12)
    prev2 = None
    prev = np.sum(y[:, n:] ** 2, axis=1)
    best = prev.copy()
    for i in range(steps):
        y = rk4_step(model, y, h)
        if not model.linear and np.any(np.linalg.norm(y, axis=1) > limit):
            raise TrustRegionError("a Monte-Carlo sample left the trust region")
        cur = np.sum(y[:, n:] ** 2, axis=1)
        best = np.minimum(best, cur)
        if prev2 is not None:
            curv = prev2 - 2.0 * prev + cur
            is_min = (prev <= prev2) & (prev <= cur) & (curv > 0)
            refined = prev - (prev2 - cur) ** 2 / (8.0 * np.where(is_min, curv, 1.0))
            best = np.where(is_min, np.minimum(best, np.maximum(refined, 0.0)), best)
        prev2, prev = prev, cur
    if not np.all(np.isfinite(best)):
        raise IntegrationError("non-finite state in Monte-Carlo scan")
    return np.sqrt(best)


@dataclass(frozen=True, eq=False)
class ScanResult:
    deltas: np.ndarray
    fractions: np.ndarray
    samples: int
    seed: int
    radius: float
    x_window: float
    min_norms: np.ndarray   # min |beta| / radius per sample

    def table(self) -> dict:
        return {float(d): float(f) for d, f in zip(self.deltas, self.fractions)}

    def ratios(self) -> np.ndarray:
        """fraction(delta_i) / fraction(delta_{i+1}) for consecutive deltas."""
        f = self.fractions
        with np.errstate(divide="ignore", invalid="ignore"):
            return f[:-1] / f[1:]

    def slope_estimate(self) -> float:
        return scaling_exponent(self.deltas, self.fractions)


def scaling_exponent(deltas, fractions) -> float:
    """Least-squares slope of log fraction against log delta (positive entries)."""
    d = np.asarray(deltas, dtype=float)
    f = np.asarray(fractions, dtype=float)
    keep = (d > 0) & (f > 0)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(d[keep]), np.log(f[keep]), 1)[0])


def monte_carlo_symmetric_fraction(model: ReducedModel, samples: int, radius: float, deltas,
                                   x_window: float, seed: int, step: float | None = None,
                                   workers: int = 1, chunk: int = 250) -> ScanResult:
    """Fraction of sampled trajectories passing within delta*radius of beta = 0.

    Samples are uniform on the radius-ball; the expected scaling is
    fraction ~ delta^(N-1).
    """
    if model.n_modes < 2:
        raise ValueError("the dimension scan needs N >= 2")
    if not np.all(model.mu < 0):
        raise ValueError("the dimension scan needs all mu_j < 0")
    if samples < 1 or radius <= 0 or x_window <= 0:
        raise ValueError("samples, radius and x_window must be positive")
    deltas = np.asarray(deltas, dtype=float)
    if step is None:
        step = 2.0 * math.pi / math.sqrt(-float(np.min(model.mu))) / 64
    y0 = sample_ball(seed, samples, 2 * model.n_modes, radius)
    blocks = [y0[i:i + chunk] for i in range(0, samples, chunk)]
    job = lambda b: min_beta_norms(model, b, x_window, step, radius)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(job, blocks))
    else:
        parts = [job(b) for b in blocks]
    norms = np.concatenate(parts) / radius
    fractions = np.array([np.count_nonzero(norms < dl) / samples for dl in deltas])
    return ScanResult(deltas=deltas, fractions=fractions, samples=samples, seed=int(seed),
                      radius=float(radius), x_window=float(x_window), min_norms=norms)
