"""How rare are symmetric waves?

Trajectories that pass within delta of the plane beta = 0 are counted for
uniform random starts in a small ball.  The symmetric set has codimension
N - 1 in the energy surface, so the fraction falls like delta^(N-1): halving
delta should halve the count when N = 2.
"""
import time

from crestline import dispersion, dynamics, reduction, stream, vorticity

st = stream.build_stream(vorticity.linear(1.0), 3.569, ("-", 1))
model = reduction.build_model(st, dispersion.solve_spectrum(st, st.model, 8))

t0 = time.perf_counter()
res = dynamics.monte_carlo_symmetric_fraction(
    model, samples=2000, radius=1e-3, deltas=[0.16, 0.08, 0.04, 0.02], x_window=4.0, seed=2024)
print(f"{res.samples} samples in {time.perf_counter() - t0:.1f} s")
print(" delta   fraction")
for d, f in res.table().items():
    print(f" {d:5.2f}   {f:.4f}")
print("successive ratios:", [round(float(r), 3) for r in res.ratios()])
print(f"fitted exponent {res.slope_estimate():.3f} (expected {model.n_modes - 1})")
