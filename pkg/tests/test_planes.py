"""Angle extraction, canonical frames, and the Cayley predicates."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cayley4 import (
    NearComplexError,
    NotCayleyError,
    PartiallyComplexError,
    batch_kahler_cosines,
    b_operator,
    blade_distance,
    build_plane,
    calibration_value,
    canonical_form,
    cayley_basis,
    haar_frames,
    is_cayley,
    kahler_angles,
    normalize_angle_pair,
    omega_xi,
    realify,
    standard_structure,
    unitary_from_cayley,
)
from cayley4.multilinear import OrientedPlane4
from cayley4.planes import random_unitary_basis


def _real_axes():
    return realify(np.eye(4, dtype=complex))


def test_normalize_angle_pair_fundamental_domain():
    # both representatives of the dihedral orbit collapse to the same pair
    assert normalize_angle_pair(0.4, 1.1) == pytest.approx((0.4, 1.1))
    assert normalize_angle_pair(1.1, 0.4) == pytest.approx((0.4, 1.1))
    t1, t2 = normalize_angle_pair(np.pi - 1.1, np.pi - 0.4)
    assert (t1, t2) == pytest.approx((0.4, 1.1))
    # boundary pair theta1 + theta2 = pi is its own partner
    t1, t2 = normalize_angle_pair(1.0, np.pi - 1.0)
    assert (t1, t2) == pytest.approx((1.0, np.pi - 1.0))


@pytest.mark.parametrize("angles,expected", [
    ((0.0, 0.0), "complex"),
    ((np.pi / 2, np.pi / 2), "lagrangian"),
    ((0.7, 0.7), "cayley_totally_real"),
    ((np.pi / 6, np.pi / 3), "totally_real_non_cayley"),
    ((0.0, 0.9), "partially_complex"),
])
def test_classification_table(angles, expected):
    pl = build_plane(_real_axes(), *angles)
    rep = canonical_form(pl)
    assert rep.classification == expected
    want1, want2 = normalize_angle_pair(*angles)
    assert rep.theta1 == pytest.approx(want1, abs=1e-9)
    assert rep.theta2 == pytest.approx(want2, abs=1e-9)


def test_lambda_values_on_cayley_family():
    for theta in (0.0, 0.3, 0.7, np.pi / 2):
        pl = build_plane(_real_axes(), theta, theta)
        ok, lam = is_cayley(pl)
        assert ok
        assert lam == pytest.approx(np.cos(theta), abs=1e-12)


def test_is_cayley_rejects_unequal_angles():
    pl = build_plane(_real_axes(), np.pi / 6, np.pi / 3)
    ok, lam = is_cayley(pl)
    assert not ok and lam is None


def test_round_trip_haar_sample():
    # angles land in the fundamental domain and the rebuilt blade matches
    rng = np.random.default_rng(7)
    frames = haar_frames(rng, 200)
    for f in frames:
        pl = OrientedPlane4(f)
        rep = canonical_form(pl)
        assert 0.0 <= rep.theta1 <= rep.theta2 <= np.pi
        assert rep.theta1 + rep.theta2 <= np.pi + 1e-12
        rebuilt = build_plane(rep.unitary_basis, rep.theta1, rep.theta2)
        assert blade_distance(pl, rebuilt) < 1e-9


def test_round_trip_recovers_prescribed_angles():
    rng = np.random.default_rng(3)
    for _ in range(50):
        u = random_unitary_basis(rng)
        t1, t2 = np.sort(rng.uniform(0.1, np.pi / 2 - 0.05, size=2))
        pl = build_plane(u, t1, t2)
        rep = kahler_angles(pl)
        want = normalize_angle_pair(t1, t2)
        assert rep.theta1 == pytest.approx(want[0], abs=1e-9)
        assert rep.theta2 == pytest.approx(want[1], abs=1e-9)


def test_b_operator_spectrum_and_norm():
    pl = build_plane(_real_axes(), 0.4, 1.2)
    b = b_operator(pl).matrix
    assert np.allclose(b, -b.T, atol=1e-12)
    ev = np.sort(np.linalg.eigvals(b).imag)
    want = np.sort([-np.cos(0.4), -np.cos(1.2), np.cos(1.2), np.cos(0.4)])
    assert np.allclose(ev, want, atol=1e-10)


def test_b_squared_characterizes_cayley():
    pl = build_plane(_real_axes(), 0.7, 0.7)
    b = b_operator(pl).matrix
    lam = np.cos(0.7)
    assert np.linalg.norm(b @ b + lam * lam * np.eye(4)) < 1e-12
    # unequal angles leave a gap that scales with cos(t1) - cos(t2)
    pl2 = build_plane(_real_axes(), 0.4, 1.2)
    b2 = b_operator(pl2).matrix
    lam2 = 0.5 * (np.cos(0.4) + np.cos(1.2))
    assert np.linalg.norm(b2 @ b2 + lam2 * lam2 * np.eye(4)) > 1e-2


def test_cayley_basis_adapted_to_b():
    rng = np.random.default_rng(11)
    for theta in (0.3, 0.7, 1.2):
        u = random_unitary_basis(rng)
        pl = build_plane(u, theta, theta)
        cb = cayley_basis(pl)
        assert np.allclose(cb @ cb.T, np.eye(4), atol=1e-10)
        # same span, and J maps e1 -> lam e2 + normal part
        sub = OrientedPlane4.from_span(cb)
        assert blade_distance(pl, sub) < 1e-9 or blade_distance(pl.reversed(), sub) < 1e-9
        st_ = standard_structure()
        lam = np.cos(theta)
        assert (st_.j @ cb[0]) @ cb[1] == pytest.approx(lam, abs=1e-10)
        assert (st_.j @ cb[2]) @ cb[3] == pytest.approx(lam, abs=1e-10)


def test_unitary_from_cayley_round_trip():
    rng = np.random.default_rng(5)
    theta = 0.9
    u = random_unitary_basis(rng)
    pl = build_plane(u, theta, theta)
    cb = cayley_basis(pl)
    ub = unitary_from_cayley(cb, np.cos(theta))
    rebuilt = build_plane(ub, theta, theta)
    d = min(blade_distance(pl, rebuilt), blade_distance(pl.reversed(), rebuilt))
    assert d < 1e-9


def test_near_complex_gauge_rejected():
    with pytest.raises(NearComplexError):
        unitary_from_cayley(_real_axes(), 1.0 - 1e-9)


def test_cayley_basis_rejects_non_cayley():
    pl = build_plane(_real_axes(), 0.4, 1.2)
    with pytest.raises(NotCayleyError):
        cayley_basis(pl)


def test_omega_xi_rejects_complex_factor():
    pl = build_plane(_real_axes(), 0.0, 0.9)
    with pytest.raises(PartiallyComplexError):
        omega_xi(pl)


def test_omega_xi_phase_and_value():
    # over the real axes the adapted phase is zero and the value is
    # sin(t1) sin(t2); a constant-phase unitary twist shifts alpha by -4 phi
    pl = build_plane(_real_axes(), np.pi / 6, np.pi / 3)
    ox = omega_xi(pl)
    assert ox.alpha == pytest.approx(0.0, abs=1e-12)
    assert ox.value == pytest.approx(np.sin(np.pi / 6) * np.sin(np.pi / 3), abs=1e-12)

    phi = 0.2
    twisted = realify(np.exp(1j * phi) * np.eye(4, dtype=complex))
    ox2 = omega_xi(build_plane(twisted, np.pi / 6, np.pi / 3))
    assert ox2.alpha == pytest.approx(-4 * phi, abs=1e-10)
    assert ox2.value == pytest.approx(ox.value, abs=1e-12)


def test_omega_xi_maximizes_calibration():
    # Phi_alpha at alpha = alpha_xi hits cos(t1 - t2); elsewhere it is lower
    rng = np.random.default_rng(23)
    for _ in range(10):
        u = random_unitary_basis(rng)
        t1, t2 = 0.5, 0.9
        pl = build_plane(u, t1, t2)
        ox = omega_xi(pl)
        top = calibration_value(pl, ox.alpha)
        assert top == pytest.approx(np.cos(t1 - t2), abs=1e-10)
        for off in (0.5, 1.5, 3.0):
            assert calibration_value(pl, ox.alpha + off) < top + 1e-12


def test_anti_cayley_boundary_reverses_to_cayley():
    # theta1 + theta2 = pi: the restricted form is anti-self-dual, so the
    # orientation-reversed plane is the Cayley one
    pl = build_plane(_real_axes(), np.pi / 3, 2 * np.pi / 3)
    ok, _ = is_cayley(pl)
    assert not ok
    ok_rev, lam = is_cayley(pl.reversed())
    assert ok_rev
    assert lam == pytest.approx(0.5, abs=1e-10)
    rep = canonical_form(pl.reversed())
    assert rep.theta1 == pytest.approx(np.pi / 3, abs=1e-9)
    assert rep.theta2 == pytest.approx(np.pi / 3, abs=1e-9)


def test_batch_cosines_match_per_plane():
    rng = np.random.default_rng(17)
    frames = haar_frames(rng, 64)
    c1, c2 = batch_kahler_cosines(frames)
    for k, f in enumerate(frames):
        rep = canonical_form(OrientedPlane4(f))
        assert c1[k] == pytest.approx(np.cos(rep.theta1), abs=1e-10)
        assert c2[k] == pytest.approx(abs(np.cos(rep.theta2)), abs=1e-10) \
            or c2[k] == pytest.approx(np.cos(rep.theta2), abs=1e-10)


def test_lambda_continuity_near_complex():
    # lambda stays close to 1 for small angles instead of jumping
    for eps in (1e-3, 1e-5):
        pl = build_plane(_real_axes(), eps, eps)
        ok, lam = is_cayley(pl)
        assert ok
        assert abs(lam - 1.0) < eps * eps


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_angles_always_in_fundamental_domain(seed):
    rng = np.random.default_rng(seed)
    f = haar_frames(rng, 1)[0]
    rep = canonical_form(OrientedPlane4(f))
    assert -1e-12 <= rep.theta1 <= rep.theta2 <= np.pi + 1e-12
    assert rep.theta1 + rep.theta2 <= np.pi + 1e-10
    rebuilt = build_plane(rep.unitary_basis, rep.theta1, rep.theta2)
    assert blade_distance(OrientedPlane4(f), rebuilt) < 1e-8
