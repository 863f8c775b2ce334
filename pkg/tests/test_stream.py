import math

import numpy as np
import pytest

from crestline import stream as S
from crestline import vorticity as V

SQ2 = math.sqrt(2.0)


def random_draws(n, seed=11):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        m = V.polynomial(rng.uniform(-1.5, 1.5, size=rng.integers(1, 4)))
        out.append((m, S.min_slope(m) + rng.uniform(0.2, 2.0)))
    return out


def test_min_slope():
    assert S.min_slope(V.zero()) == 0.0
    assert S.min_slope(V.constant(1.0)) == pytest.approx(SQ2, abs=1e-12)
    assert S.min_slope(V.constant(-1.0)) == 0.0


def test_cauchy_closed_forms():
    Y, U, Up = S.cauchy_solve(V.zero(), 2.0, 1.0)
    np.testing.assert_allclose(U, 2 * Y, atol=1e-14)
    Y, U, Up = S.cauchy_solve(V.constant(1.0), 1.5, 1.0)
    np.testing.assert_allclose(U, 1.5 * Y - Y**2 / 2, atol=1e-10)
    g, s = 2.0, 1.3
    Y, U, Up = S.cauchy_solve(V.linear(g), s, (0.0, 3.0))
    np.testing.assert_allclose(U, s / math.sqrt(g) * np.sin(math.sqrt(g) * Y), atol=1e-9)


def test_turning_points():
    t = S.turning_points(V.constant(1.0), 1.5)
    assert t.tau_plus == pytest.approx(1.125, abs=1e-12)
    assert t.y_plus == pytest.approx(1.5, abs=1e-10)
    assert t.tau_minus == -math.inf and t.y_minus == -math.inf
    t = S.turning_points(V.constant(1.0), 2.0)
    assert (t.tau_plus, t.y_plus) == pytest.approx((2.0, 2.0), abs=1e-10)
    t = S.turning_points(V.zero(), 0.7)
    assert t.tau_plus == math.inf and t.tau_minus == -math.inf
    # harmonic oscillator: quarter period on both sides
    t = S.turning_points(V.linear(1.0), 1.8)
    assert t.y_plus == pytest.approx(math.pi / 2, abs=1e-10)
    assert t.y_minus == pytest.approx(-math.pi / 2, abs=1e-10)
    assert isinstance(t.singular_plus, bool)


def test_principal_depth():
    assert S.principal_depth(V.zero(), 2.0) == pytest.approx(0.5, abs=1e-14)
    assert S.principal_depth(V.constant(1.0), 1.5) == pytest.approx(1.0, abs=1e-12)
    assert S.principal_depth(V.constant(1.0), 2.0) == pytest.approx(2 - SQ2, abs=1e-12)
    for s in np.linspace(0.3, 5.0, 10):
        assert S.principal_depth(V.zero(), s) == pytest.approx(1 / s, abs=1e-10)


def test_depth_family():
    fam = S.depth_family(V.constant(1.0), 1.5, 2)
    assert fam.get("+", 0).d == pytest.approx(1.0, abs=1e-12)
    assert fam.get("+", 0).r == pytest.approx(0.75, abs=1e-12)
    assert fam.get("+", 1).d == pytest.approx(2.0, abs=1e-10)
    assert fam.get("+", 1).r == pytest.approx(4.25 / 3, abs=1e-10)
    assert all(m.sign == "+" for m in fam)
    fam = S.depth_family(V.constant(1.0), 2.0, 1)
    assert fam.get("+", 1).d == pytest.approx(2 + SQ2, abs=1e-10)
    fam = S.depth_family(V.zero(), 2.0, 3)
    assert [(m.sign, m.j) for m in fam] == [("+", 0)]


def test_minus_family_matches_cauchy_with_negative_slope():
    # u(Y) = U(Y + 2 y_-) solves the Cauchy problem with u'(0) = -s
    m, s = V.linear(1.0), 1.8
    st = S.build_stream(m, s, ("-", 0))
    assert st.u_z[0] == pytest.approx(-s, abs=1e-12)
    assert st.u[-1] == 1.0
    # closed form u = -s sin(Y): dips to -s before reaching 1
    Y = st.z
    np.testing.assert_allclose(st.u, -s * np.sin(Y), atol=1e-9)


@pytest.mark.parametrize("s,expect", [
    (1.5, dict(d=1.0, k=0.5, kappa=2.0, r=0.75)),
    (2.0, dict(d=2 - SQ2, k=SQ2, kappa=0.5 - 1 / SQ2, r=(6 - 2 * SQ2) / 3)),
])
def test_build_stream_constant(s, expect):
    st = S.build_stream(V.constant(1.0), s)
    for key, val in expect.items():
        assert getattr(st, key) == pytest.approx(val, abs=1e-9), key


def test_build_stream_irrotational():
    st = S.build_stream(V.zero(), 0.5)
    assert (st.d, st.k, st.kappa, st.r) == pytest.approx((2.0, 0.5, 4.0, 4.25 / 3), abs=1e-10)


@pytest.mark.parametrize("m,s", random_draws(20))
def test_energy_invariant(m, s):
    st = S.build_stream(m, s)
    dev = st.u_z**2 + 2 * m.primitive(st.u) - s * s
    assert np.max(np.abs(dev)) < 1e-9
    assert st.u[0] == 0.0 and st.u[-1] == 1.0


@pytest.mark.parametrize("m,s", random_draws(20, seed=5))
def test_quadrature_depth_matches_crossing(m, s):
    assert S.principal_depth(m, s) == pytest.approx(S.crossing_depth(m, s), abs=1e-9)


def test_kappa_recomputed_bitwise():
    for m, s in random_draws(5):
        st = S.build_stream(m, s)
        assert st.kappa == 1.0 / (st.k * st.k) - float(m.omega(1.0)) / st.k


def test_zero_counts_of_slope():
    st0 = S.build_stream(V.constant(1.0), 1.5, ("+", 0))
    assert np.all(st0.u_z[:-1] > 0)
    st1 = S.build_stream(V.constant(1.0), 1.5, ("+", 1))
    assert np.count_nonzero(np.diff(np.sign(st1.u_z)) != 0) == 1


def test_profile_interpolation(b1_stream):
    z = np.linspace(0, 1, 37)
    u, uz, uzz = b1_stream.profile(z)
    np.testing.assert_allclose(u, 1.5 * z - z**2 / 2, atol=1e-12)
    np.testing.assert_allclose(uz, 1.5 - z, atol=1e-10)
    np.testing.assert_allclose(uzz, -1.0, atol=0)


def test_errors():
    with pytest.raises(S.StreamError):
        S.principal_depth(V.constant(1.0), 1.0)       # s below s0 = sqrt(2)
    with pytest.raises(S.StreamError):
        S.build_stream(V.constant(1.0), 1.5, ("-", 0))  # no minus family
    with pytest.raises(S.StreamError):
        S.build_stream(V.constant(1.0), 1.5, ("x", 0))
