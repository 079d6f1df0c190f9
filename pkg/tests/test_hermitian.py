import numpy as np
import pytest

from cayley4.hermitian import (
    cayley_calibration,
    comass,
    comass_detail,
    complexify,
    haar_frames,
    omega0_values,
    phi_values,
    realify,
    reference_volume_form,
    standard_structure,
    wirtinger_values,
)
from cayley4.multilinear import Blade4, KForm, OrientedPlane4, evaluate, wedge


def test_complex_structure_squares_to_minus_one():
    st = standard_structure()
    assert np.allclose(st.j @ st.j, -np.eye(8))
    # omega(X, Y) = g(JX, Y) with the Euclidean metric
    x = np.zeros(8)
    x[0] = 1.0
    y = np.zeros(8)
    y[1] = 1.0
    assert st.omega_mat[0, 1] == 1.0
    assert float(x @ st.omega_mat @ y) == 1.0


def test_complexify_round_trip():
    rng = np.random.default_rng(0)
    v = rng.standard_normal((5, 8))
    assert np.allclose(realify(complexify(v)), v)
    # J acts as multiplication by i
    st = standard_structure()
    assert np.allclose(complexify((st.j @ v.T).T), 1j * complexify(v))


def test_volume_normalizations_exact():
    # rebuild omega from its matrix to stay independent of the cached path
    from cayley4.multilinear import matrix_to_form

    st = standard_structure()
    omega = matrix_to_form(st.omega_mat)
    w2 = wedge(omega, omega)
    w4 = wedge(w2, w2)
    # omega^4 = 24 vol: the single top coefficient is exactly 4!
    assert w4.coeffs[0] == 24.0
    # (1/16) Omega ^ conj(Omega) = vol: the real part of the product is
    # re ^ re + im ^ im since 4-forms commute
    ref = reference_volume_form()
    total = wedge(ref.re, ref.re).coeffs[0] + wedge(ref.im, ref.im).coeffs[0]
    assert total == 16.0


def test_fast_evaluators_match_exterior_algebra():
    rng = np.random.default_rng(1)
    frames = haar_frames(rng, 40)
    alphas = np.linspace(0, 2 * np.pi, 7, endpoint=False)
    phi = phi_values(frames, alphas)
    for k, alpha in enumerate(alphas):
        cal = cayley_calibration(alpha)
        for n in range(frames.shape[0]):
            slow = evaluate(cal.form, Blade4(frames[n]))
            assert abs(phi[k, n] - slow) < 1e-12


def test_phi_on_reference_planes():
    st = standard_structure()
    real_axes = realify(np.eye(4, dtype=complex))
    complex_plane = np.zeros((4, 8))
    complex_plane[0, 0] = 1.0
    complex_plane[1, 1] = 1.0
    complex_plane[2, 2] = 1.0
    complex_plane[3, 3] = 1.0
    alphas = np.array([0.0, np.pi / 2, np.pi])
    phi_real = phi_values(real_axes[None], alphas)[:, 0]
    assert np.allclose(phi_real, [1.0, 0.0, -1.0], atol=1e-14)
    phi_cx = phi_values(complex_plane[None], alphas)[:, 0]
    assert np.allclose(phi_cx, [1.0, 1.0, 1.0], atol=1e-14)


def test_calibration_bound_on_haar_sample():
    rng = np.random.default_rng(2)
    frames = haar_frames(rng, 20000)
    alphas = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    phi = phi_values(frames, alphas)
    assert np.max(phi) <= 1.0 + 1e-9


def test_haar_frames_orthonormal():
    rng = np.random.default_rng(3)
    frames = haar_frames(rng, 100)
    gram = np.einsum("nik,njk->nij", frames, frames)
    assert np.max(np.abs(gram - np.eye(4))) < 1e-12


def test_comass_of_wirtinger_square_is_one():
    # omega^2/2 has comass 1, attained on complex planes
    from cayley4.hermitian import _wirtinger_form

    value = comass(_wirtinger_form(), n_samples=40, refine_steps=200, seed=0)
    assert abs(value - 1.0) < 1e-6


def test_comass_of_cayley_calibration_is_one():
    value = comass(cayley_calibration(0.7).form, n_samples=40,
                   refine_steps=300, seed=1)
    assert abs(value - 1.0) < 1e-6


def test_comass_refinement_success_rate():
    detail = comass_detail(cayley_calibration(0.0).form, n_samples=50,
                           refine_steps=400, seed=2)
    finals = np.asarray(detail["final_values"])
    assert np.mean(finals >= 1.0 - 1e-6) >= 0.95
    assert detail["value"] <= 1.0 + 1e-9


def test_comass_zero_form():
    assert comass(KForm(4, np.zeros(70)), n_samples=5, refine_steps=10) == 0.0


def test_calibrated_plane_is_cayley_with_matching_phase():
    # Phi_alpha(xi) = 1 forces xi Cayley; check on constructed maximizers
    from cayley4.planes import build_plane, is_cayley, omega_xi, random_unitary_basis

    rng = np.random.default_rng(4)
    for _ in range(5):
        u = random_unitary_basis(rng)
        theta = rng.uniform(0.3, 1.2)
        plane = build_plane(u, theta, theta)
        ox = omega_xi(plane)
        val = phi_values(plane.frame[None], np.array([ox.alpha]))[0, 0]
        assert abs(val - 1.0) < 1e-12
        ok, lam = is_cayley(plane)
        assert ok and abs(lam - np.cos(theta)) < 1e-12
