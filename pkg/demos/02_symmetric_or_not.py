"""Two neutral modes: symmetric and non-symmetric small waves.

Linear vorticity omega = psi with s = 3.569 on the (-, 1) branch has two
negative eigenvalues.  The reduced system is reversible under beta -> -beta,
so a trajectory starting at beta = 0 gives a mirror-symmetric surface.  A
generic start never returns to beta = 0 and the surface has no mirror axis.
"""
import math

import numpy as np

from crestline import dispersion, dynamics, reconstruction, reduction, stream, vorticity

st = stream.build_stream(vorticity.linear(1.0), 3.569, ("-", 1))
spec = dispersion.solve_spectrum(st, st.model, 8)
model = reduction.build_model(st, spec)
print(f"d = {st.d:.5f}, k = {st.k:.5f}, mu = {np.array2string(model.mu, precision=5)}")
w = np.sqrt(-model.mu)
print(f"wavenumbers {w[0]:.5f}, {w[1]:.5f}; ratio {w[1] / w[0]:.5f}")

rng = np.random.default_rng(1)
y0 = rng.normal(size=4)
y0 *= 1e-3 / np.linalg.norm(y0)

x_max = 60.0
sym = dynamics.integrate(model, np.r_[y0[:2], 0.0, 0.0], x_max, x_min=-x_max)
gen = dynamics.integrate(model, y0, 2 * x_max)

for name, traj in (("beta(0) = 0", sym), ("generic", gen)):
    rep = dynamics.symmetry_scan(traj, 1e-3)
    print(f"\n{name}:")
    print(f"  min |beta| / amplitude = {rep.min_beta_norm:.3e}")
    if traj is sym:
        f = reconstruction.reconstruct(model, traj, n_z=9)
        centre = int(np.argmin(np.abs(f.x)))
        print(f"  eta mirror defect about x = 0: {reconstruction.eta_mirror_defect(f, centre):.1e}")
    else:
        # every candidate axis on a coarser grid, at least one slow period from the ends
        f = reconstruction.reconstruct(model, traj, n_z=9, stride=10)
        _, defects = reconstruction.eta_mirror_defects(f, 2 * math.pi / w[1])
        print(f"  smallest eta mirror defect over all axes = {defects.min():.3e}")
    print(f"  flow force drift = {traj.drift():.1e}")
    print(f"  Bernoulli residual = {reconstruction.bernoulli_residual(f, model):.1e}")
