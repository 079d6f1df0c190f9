"""Standard Hermitian structure on R^8 and the associated calibrations.

The complex structure J acts on the coordinate order (x1, y1, ..., x4, y4)
by J x_k = y_k, the metric g is the Euclidean one, and the Kaehler form is
omega(X, Y) = g(JX, Y).  The reference complex volume form is

    Omega_0 = dz1 ^ dz2 ^ dz3 ^ dz4,   z_k = x_k + i y_k,

stored as a (real part, imaginary part) pair of real 4-forms.  The phase
family is Omega_alpha = e^{i alpha} Omega_0, and the degree-4 calibrations
considered here are

    Phi_alpha = Re(Omega_alpha) + omega^2 / 2.

Normalization sanity: omega^4 / 4! equals the volume form, which also
equals (i/2)^4 Omega ^ conj(Omega); both are checked in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .multilinear import (
    DIM,
    Blade4,
    KForm,
    evaluate,
    evaluate_frames,
    interior_product,
    pfaffian4,
    restrict_matrix,
    wedge,
)

__all__ = [
    "HermitianStructure",
    "ComplexVolumeForm",
    "CayleyCalibration",
    "standard_structure",
    "cayley_calibration",
    "reference_volume_form",
    "complexify",
    "realify",
    "omega0_values",
    "wirtinger_values",
    "phi_values",
    "comass",
    "comass_detail",
    "haar_frames",
]


def _standard_j() -> np.ndarray:
    j = np.zeros((DIM, DIM))
    for k in range(4):
        j[2 * k + 1, 2 * k] = 1.0
        j[2 * k, 2 * k + 1] = -1.0
    return j


@dataclass(frozen=True)
class HermitianStructure:
    """The flat model (R^8, g = id, J, omega)."""

    j: np.ndarray
    omega: KForm
    omega_mat: np.ndarray

    def __post_init__(self):
        dev = float(np.linalg.norm(self.j @ self.j + np.eye(DIM)))
        if dev > 1e-14:
            raise ValueError(f"J^2 deviates from -id by {dev:.3e}")


@lru_cache(maxsize=1)
def standard_structure() -> HermitianStructure:
    j = _standard_j()
    coeffs_pairs = [(2 * k, 2 * k + 1) for k in range(4)]
    omega = KForm.zero(2)
    for pair in coeffs_pairs:
        omega = omega + KForm.basis(pair)
    # omega(e_a, e_b) = g(J e_a, e_b) = J[b, a]
    return HermitianStructure(j=j, omega=omega, omega_mat=j.T.copy())


def complexify(vectors: np.ndarray) -> np.ndarray:
    """(..., 8) real -> (..., 4) complex, z_k = v[2k] + i v[2k+1]."""
    v = np.asarray(vectors, dtype=float)
    return v[..., 0::2] + 1j * v[..., 1::2]


def realify(zvecs: np.ndarray) -> np.ndarray:
    """(..., 4) complex -> (..., 8) real, inverse of complexify."""
    z = np.asarray(zvecs, dtype=complex)
    out = np.empty(z.shape[:-1] + (DIM,), dtype=float)
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


@lru_cache(maxsize=1)
def _omega0_parts() -> tuple[KForm, KForm]:
    """Real and imaginary parts of dz1^dz2^dz3^dz4 as real 4-forms."""
    re = KForm(0, np.array([1.0]))
    im = KForm.zero(0)
    for k in range(4):
        a = KForm.basis((2 * k,))
        b = KForm.basis((2 * k + 1,))
        re, im = wedge(re, a) - wedge(im, b), wedge(re, b) + wedge(im, a)
    return re, im


@dataclass(frozen=True)
class ComplexVolumeForm:
    """Omega_alpha = e^{i alpha} Omega_0 as a (re, im) pair of real forms."""

    alpha: float
    re: KForm
    im: KForm

    @classmethod
    def at_phase(cls, alpha: float) -> "ComplexVolumeForm":
        re0, im0 = _omega0_parts()
        c, s = np.cos(alpha), np.sin(alpha)
        return cls(alpha=float(alpha), re=c * re0 - s * im0, im=s * re0 + c * im0)

    def value(self, blade: Blade4) -> complex:
        return complex(evaluate(self.re, blade), evaluate(self.im, blade))


def reference_volume_form() -> ComplexVolumeForm:
    return ComplexVolumeForm.at_phase(0.0)


@lru_cache(maxsize=1)
def _wirtinger_form() -> KForm:
    omega = standard_structure().omega
    return 0.5 * wedge(omega, omega)


@dataclass(frozen=True)
class CayleyCalibration:
    """Phi_alpha = Re(Omega_alpha) + omega^2/2; comass 1 (verified, not assumed)."""

    alpha: float
    form: KForm

    def value(self, blade: Blade4) -> float:
        return evaluate(self.form, blade)


def cayley_calibration(alpha: float = 0.0) -> CayleyCalibration:
    vol = ComplexVolumeForm.at_phase(alpha)
    return CayleyCalibration(alpha=float(alpha), form=vol.re + _wirtinger_form())


# ---------------------------------------------------------------------------
# Fast closed-form evaluation on frames.
#
# For an orthonormal frame F with rows f_a and Z = complexify(F):
#   Omega_0(f_1 ^ .. ^ f_4) = det_C(Z)        (determinant of dz_j(f_a))
#   (omega^2/2)(f_1 ^ ..)   = Pf(omega|_F)    (Pfaffian of the restriction)
# Both identities are cross-checked against the generic 70-minor route in
# the test suite before being relied on anywhere.
# ---------------------------------------------------------------------------

def omega0_values(frames: np.ndarray) -> np.ndarray:
    """Omega_0 evaluated on frames (..., 4, 8); complex result."""
    return np.linalg.det(complexify(frames))


def wirtinger_values(frames: np.ndarray) -> np.ndarray:
    """(omega^2/2) evaluated on frames (..., 4, 8)."""
    a = restrict_matrix(standard_structure().omega_mat, frames)
    return pfaffian4(a)


def phi_values(frames: np.ndarray, alphas: np.ndarray | float) -> np.ndarray:
    """Phi_alpha on frames; result shape = broadcast(alphas, frames[:-2])."""
    w = omega0_values(frames)
    p = wirtinger_values(frames)
    alphas = np.asarray(alphas, dtype=float)
    if alphas.ndim == 0:
        return (np.exp(1j * alphas) * w).real + p
    # phases along the leading axis
    return (np.exp(1j * alphas)[:, None] * w[None, ...]).real + p[None, ...]


# ---------------------------------------------------------------------------
# Comass estimation: Haar sampling plus projected gradient ascent on the
# oriented Grassmannian (Stiefel retraction by thin QR).  The estimate is a
# lower bound by construction.
# ---------------------------------------------------------------------------

def haar_frames(rng: np.random.Generator, n: int) -> np.ndarray:
    """n Haar-random orthonormal 4-frames in R^8, shape (n, 4, 8)."""
    g = rng.standard_normal((n, DIM, 4))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diagonal(r, axis1=-2, axis2=-1))[:, None, :]
    return np.swapaxes(q, -1, -2)


def _blade_gradient(form: KForm, frame: np.ndarray) -> np.ndarray:
    """Euclidean gradient of X -> form(x1^x2^x3^x4) w.r.t. the rows of X."""
    grad = np.empty_like(frame)
    for a in range(4):
        others = [frame[b] for b in range(4) if b != a]
        partial = form
        for w in others:
            partial = interior_product(partial, w)
        sign = -1.0 if (3 - a) % 2 else 1.0
        grad[a] = sign * partial.coeffs
    return grad


def _qr_retract(xc: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(xc)
    return q * np.sign(np.diag(r))


def _ascend(form: KForm, frame: np.ndarray, steps: int) -> tuple[float, np.ndarray]:
    """Projected gradient ascent from one frame; returns (value, frame)."""
    xc = frame.T.copy()                       # (8, 4), columns orthonormal
    f = float(evaluate_frames(form, xc.T))
    tau = 0.25
    for _ in range(steps):
        g = _blade_gradient(form, xc.T).T
        sym = 0.5 * (xc.T @ g + g.T @ xc)
        rg = g - xc @ sym                     # tangent projection on the Stiefel
        gnorm = float(np.linalg.norm(rg))
        if gnorm < 1e-13:
            break
        accepted = False
        for _ in range(40):
            ynew = _qr_retract(xc + tau * rg)
            fnew = float(evaluate_frames(form, ynew.T))
            if fnew > f:
                xc, f = ynew, fnew
                tau = min(tau * 1.4, 1.0)
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            break                             # no ascent direction left at float precision
    return f, xc.T


def comass_detail(form: KForm, n_samples: int = 100, refine_steps: int = 400,
                  seed: int = 0) -> dict:
    """Per-sample ascent results backing the comass estimate."""
    rng = np.random.default_rng(seed)
    starts = haar_frames(rng, n_samples)
    start_vals = evaluate_frames(form, starts)
    finals = np.empty(n_samples)
    best_val = -np.inf
    best_frame = starts[0]
    for i in range(n_samples):
        val, fr = _ascend(form, starts[i], refine_steps)
        finals[i] = val
        if val > best_val:
            best_val, best_frame = val, fr
    return {
        "value": float(best_val),
        "best_frame": best_frame,
        "start_values": start_vals,
        "final_values": finals,
    }


def comass(form: KForm, n_samples: int = 100, refine_steps: int = 400,
           seed: int = 0) -> float:
    """Estimated comass: max of form over sampled and refined oriented planes.

    Deterministic for a fixed seed; each sample is refined independently, so
    the computation is embarrassingly parallel in principle (this
    implementation runs the samples sequentially).
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    if form.degree != 4:
        raise ValueError("comass is implemented for 4-forms")
    if not np.any(form.coeffs):
        return 0.0
    return comass_detail(form, n_samples, refine_steps, seed)["value"]
