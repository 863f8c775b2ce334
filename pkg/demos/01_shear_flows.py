"""Shear flows under a flat surface and their small-wave spectrum.

Constant vorticity b = 1 has closed forms: with s = 1.5 the flow is
u = 1.5 Y - Y^2/2, the depth is 1 and the surface speed 0.5.  Larger depths
come from continuing the profile past its turning point.
"""
import numpy as np

from crestline import dispersion, stream, vorticity

b1 = vorticity.constant(1.0)
fam = stream.depth_family(b1, 1.5, 2)
print("depth family for b = 1, s = 1.5")
for m in fam.members:
    print(f"  {m.sign}{m.j}: d = {m.d:.6f}  r = {m.r:.6f}")

st = stream.build_stream(b1, 1.5)
print(f"\nprincipal stream: d = {st.d:.6f}, k = {st.k:.6f}, kappa = {st.kappa:.6f}")

# the energy integral u'^2 + 2 Omega(u) = s^2 holds on every node
dev = st.u_z**2 + 2 * b1.primitive(st.u) - 1.5**2
print(f"energy integral defect: {np.max(np.abs(dev)):.1e}")

spec = dispersion.solve_spectrum(st, b1, 5)
print("\nlowest eigenvalues:", np.array2string(spec.mu, precision=5))
N, strict = dispersion.count_nonpositive(spec)
print(f"N = {N} non-positive eigenvalue(s), strict = {strict}")

# irrotational flow: kappa d < 1 means no small waves at all
for s in (0.5, 2.0):
    st0 = stream.build_stream(vorticity.zero(), s)
    sp0 = dispersion.solve_spectrum(st0, st0.model, 3)
    print(f"irrotational s = {s}: kappa d = {st0.kappa * st0.d:.3f}, "
          f"N = {dispersion.count_nonpositive(sp0)[0]}")
