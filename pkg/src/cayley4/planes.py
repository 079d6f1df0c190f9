"""Kaehler angles, canonical forms and the Cayley condition for 4-planes.

An oriented 4-plane xi in Hermitian R^8 restricts the Kaehler form to an
antisymmetric 4x4 matrix A in any oriented orthonormal frame.  There is an
in-plane rotation bringing A to

    cos(theta1) e^12 + cos(theta2) e^34,
    0 <= theta1 <= pi/2,  theta1 <= theta2 <= pi,

and the plane itself can be written against a unitary basis (u1, .., u4) as

    xi = u1 ^ (cos(theta1) J u1 + sin(theta1) u2)
            ^ u3 ^ (cos(theta2) J u3 + sin(theta2) u4).

The angle pair satisfying the constraints above is not quite unique: when
theta2 > pi/2 the same oriented plane also admits the representative
(pi - theta2, pi - theta1) (flip the orientation of both invariant
2-planes, which preserves the product orientation).  The extraction below
therefore lands in the fundamental domain

    theta1 + theta2 <= pi,

equivalently cos(theta1) = sigma1 is the largest singular value of A and
cos(theta2) = sign(Pf A) * sigma2.  The round-trip tests pin this down.

A plane is Cayley when theta1 = theta2; the common cosine is written
lambda.  Equivalent characterizations (restriction of omega self-dual;
B^2 = -lambda^2 id for the tangential part B of J) are implemented as
independent predicates and compared in the test suite.  Note that
B^2 = -lambda^2 id alone is also satisfied by anti-self-dual planes with
theta1 + theta2 = pi, a measure-zero set kept out of the equivalence by
the self-duality predicate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .multilinear import (
    DIM,
    OrientedPlane4,
    hodge_star_plane,
    pfaffian4,
    restrict_matrix,
)
from .hermitian import (
    complexify,
    omega0_values,
    realify,
    standard_structure,
)

__all__ = [
    "AngleReport",
    "BOperator",
    "OmegaXi",
    "NearComplexError",
    "PartiallyComplexError",
    "NotCayleyError",
    "b_operator",
    "kahler_angles",
    "canonical_form",
    "is_cayley",
    "cayley_basis",
    "unitary_from_cayley",
    "omega_xi",
    "calibration_value",
    "build_plane",
    "normalize_angle_pair",
    "random_unitary_basis",
    "batch_kahler_cosines",
]

Classification = Literal[
    "complex",
    "lagrangian",
    "cayley_totally_real",
    "totally_real_non_cayley",
    "partially_complex",
]

# sin(theta) below this counts as a degenerate (complex) factor.
DEGENERATE_SIN = 1e-8

# Planes with lambda >= 1 - NEAR_COMPLEX_GUARD have no usable unitary gauge.
NEAR_COMPLEX_GUARD = 1e-8

CAYLEY_TOL = 1e-10


class NearComplexError(ValueError):
    """Raised when a construction needs sin(theta) bounded away from 0."""


class PartiallyComplexError(ValueError):
    """Raised when a plane with a complex factor reaches a totally real op."""


class NotCayleyError(ValueError):
    """Raised when a Cayley-only construction meets a non-Cayley plane."""


@dataclass(frozen=True)
class BOperator:
    """Tangential part of J on a plane, as a matrix in the frame basis."""

    matrix: np.ndarray


@dataclass(frozen=True)
class OmegaXi:
    """Phase and value of the adapted complex volume form on a plane."""

    alpha: float
    value: float


@dataclass(frozen=True)
class AngleReport:
    theta1: float
    theta2: float
    classification: Classification
    lam: float | None = None
    unitary_basis: np.ndarray | None = None
    canonical_tangent_frame: np.ndarray | None = None
    degenerate_factors: tuple[bool, bool] = (False, False)
    degenerate_spectrum: bool = False

    def cosines(self) -> tuple[float, float]:
        return float(np.cos(self.theta1)), float(np.cos(self.theta2))

    def to_json(self) -> dict:
        out = {
            "theta1": self.theta1,
            "theta2": self.theta2,
            "classification": self.classification,
            "lambda": self.lam,
            "degenerate_factors": list(self.degenerate_factors),
            "degenerate_spectrum": self.degenerate_spectrum,
        }
        if self.unitary_basis is not None:
            out["canonical_unitary_basis"] = self.unitary_basis.tolist()
        return out


def b_operator(plane: OrientedPlane4) -> BOperator:
    """B = (tangential projection) o J restricted to the plane.

    Entry (i, j) is g(J frame_j, frame_i), so that matrix-vector products
    act on frame coordinates.
    """
    st = standard_structure()
    f = plane.frame
    return BOperator(matrix=f @ st.j @ f.T)


def _omega_restriction(plane: OrientedPlane4) -> np.ndarray:
    return restrict_matrix(standard_structure().omega_mat, plane.frame)


def _complete_orthonormal(cols: list[np.ndarray], pool: np.ndarray) -> list[np.ndarray]:
    """Extend `cols` to an orthonormal set using candidate columns of pool."""
    out = list(cols)
    for cand in pool.T:
        v = cand.copy()
        for w in out:
            v -= (w @ v) * w
        n = np.linalg.norm(v)
        if n > 0.3:
            out.append(v / n)
    return out


def _canonical_pairs(a: np.ndarray, tol: float = 1e-12) -> tuple[np.ndarray, float, float]:
    """Rotate a skew 4x4 form to c1*e^12 + c2*e^34 with c1 = sigma1 >= |c2|.

    Returns (r, c1, c2) with r in SO(4), columns holding the new frame in
    old-frame coordinates, and r.T @ a @ r in the canonical shape.  Ties
    sigma1 = sigma2 are resolved by an arbitrary invariant splitting.
    """
    evals, vecs = np.linalg.eigh(-a @ a)          # ascending sigma^2 pairs
    s1 = float(np.sqrt(max(evals[3], 0.0)))
    s2 = float(np.sqrt(max(evals[0], 0.0)))
    if s1 <= tol:
        return np.eye(4), 0.0, 0.0

    v = vecs[:, 3]
    av = a @ v
    p1 = av / np.linalg.norm(av)
    p2 = v                                        # omega(p1, p2) = +sigma1
    rest = _complete_orthonormal([p1, p2], vecs[:, ::-1])
    q = rest[2]
    aq = a @ q
    if np.linalg.norm(aq) <= max(tol, 1e-14):
        q1, q2 = q, rest[3]
        c2 = 0.0
    else:
        q1 = aq / np.linalg.norm(aq)
        q2 = q                                    # omega(q1, q2) = +sigma2
        c2 = s2
    r = np.column_stack([p1, p2, q1, q2])
    if np.linalg.det(r) < 0:
        r[:, 3] = -r[:, 3]
        c2 = -c2
    return r, s1, c2


def normalize_angle_pair(theta1: float, theta2: float) -> tuple[float, float]:
    """Map an admissible angle pair to its ordered theta1 + theta2 <= pi form."""
    lo, hi = sorted((float(theta1), float(theta2)))
    if lo + hi > np.pi:
        return float(np.pi - hi), float(np.pi - lo)
    return lo, hi


def _classify(theta1: float, theta2: float,
              sin_tol: float = DEGENERATE_SIN,
              cayley_tol: float = CAYLEY_TOL) -> Classification:
    s1, s2 = np.sin(theta1), np.sin(theta2)
    n_deg = int(s1 <= sin_tol) + int(s2 <= sin_tol)
    if n_deg == 2:
        return "complex"
    if n_deg == 1:
        return "partially_complex"
    if abs(np.cos(theta1)) <= cayley_tol and abs(np.cos(theta2)) <= cayley_tol:
        return "lagrangian"
    if abs(theta1 - theta2) <= cayley_tol:
        return "cayley_totally_real"
    return "totally_real_non_cayley"


def _angles_from_cosines(c1: float, c2: float) -> tuple[float, float]:
    t1 = float(np.arccos(np.clip(c1, -1.0, 1.0)))
    t2 = float(np.arccos(np.clip(c2, -1.0, 1.0)))
    return t1, t2


def kahler_angles(plane: OrientedPlane4) -> AngleReport:
    """Angle extraction without the canonical basis (cheap path)."""
    a = _omega_restriction(plane)
    _, c1, c2 = _canonical_pairs(a)
    t1, t2 = _angles_from_cosines(c1, c2)
    cls = _classify(t1, t2)
    lam = 0.5 * (c1 + c2) if abs(t1 - t2) <= CAYLEY_TOL else None
    return AngleReport(
        theta1=t1,
        theta2=t2,
        classification=cls,
        lam=None if lam is None else float(np.clip(lam, 0.0, 1.0)),
        degenerate_spectrum=bool(abs(c1 - abs(c2)) <= 1e-9),
    )


def _unitary_gram_dev(u: np.ndarray) -> float:
    """Deviation of a real 4x8 row set from being a unitary C^4 basis."""
    z = complexify(u)
    return float(np.linalg.norm(z @ z.conj().T - np.eye(4)))


def canonical_form(plane: OrientedPlane4) -> AngleReport:
    """Full canonical data: angles, in-plane canonical frame, unitary basis.

    Degenerate (complex) factors get an arbitrary unitary completion and a
    flag; rebuilding the plane from the returned data reproduces the input
    blade either way.
    """
    st = standard_structure()
    a = _omega_restriction(plane)
    r, c1, c2 = _canonical_pairs(a)
    t1, t2 = _angles_from_cosines(c1, c2)
    p = r.T @ plane.frame                          # canonical tangent vectors
    s1, s2 = np.sin(t1), np.sin(t2)

    deg1 = bool(s1 <= DEGENERATE_SIN)
    deg2 = bool(s2 <= DEGENERATE_SIN)

    u1 = p[0]
    u3 = p[2]
    known: list[np.ndarray] = [u1, u3]
    u2 = None if deg1 else (p[1] - c1 * (st.j @ p[0])) / s1
    u4 = None if deg2 else (p[3] - c2 * (st.j @ p[2])) / s2
    if u2 is not None:
        known.insert(1, u2)
    if u4 is not None:
        known.append(u4)

    if deg1 or deg2:
        known_z = [complexify(v) for v in known]
        pool = np.eye(4, dtype=complex)
        filled = list(known_z)
        for cand in pool.T:
            v = cand.astype(complex)
            for w in filled:
                v = v - (w.conj() @ v) * w
            n = np.linalg.norm(v)
            if n > 0.3:
                filled.append(v / n)
        extras = [realify(z) for z in filled[len(known_z):]]
        if u2 is None:
            u2 = extras.pop(0)
        if u4 is None:
            u4 = extras.pop(0)

    u = np.vstack([u1, u2, u3, u4])
    dev = _unitary_gram_dev(u)
    if dev > 1e-12:
        # tiny sin(theta) amplifies rounding in the u2/u4 quotients; a
        # hermitian re-orthonormalization costs O(dev) which the rebuild
        # multiplies back down by sin(theta)
        z = [complexify(v) for v in u]
        for k in range(4):
            for j in range(k):
                z[k] = z[k] - (z[j].conj() @ z[k]) * z[j]
            z[k] = z[k] / np.linalg.norm(z[k])
        u = np.vstack([realify(v) for v in z])
        dev = _unitary_gram_dev(u)
    if dev > 1e-9:
        raise RuntimeError(f"canonical basis failed unitarity check: {dev:.3e}")

    cls = _classify(t1, t2)
    lam = 0.5 * (c1 + c2) if abs(t1 - t2) <= CAYLEY_TOL else None
    return AngleReport(
        theta1=t1,
        theta2=t2,
        classification=cls,
        lam=None if lam is None else float(np.clip(lam, 0.0, 1.0)),
        unitary_basis=u,
        canonical_tangent_frame=p,
        degenerate_factors=(deg1, deg2),
        degenerate_spectrum=bool(abs(c1 - abs(c2)) <= 1e-9),
    )


def build_plane(unitary_basis: np.ndarray, theta1: float, theta2: float) -> OrientedPlane4:
    """Assemble the plane with given angles over a unitary basis."""
    u = np.asarray(unitary_basis, dtype=float)
    dev = _unitary_gram_dev(u)
    if dev > 1e-9:
        raise ValueError(f"basis is not unitary: deviation {dev:.3e}")
    st = standard_structure()
    c1, s1 = np.cos(theta1), np.sin(theta1)
    c2, s2 = np.cos(theta2), np.sin(theta2)
    f = np.vstack([
        u[0],
        c1 * (st.j @ u[0]) + s1 * u[1],
        u[2],
        c2 * (st.j @ u[2]) + s2 * u[3],
    ])
    return OrientedPlane4(f)


def is_cayley(plane: OrientedPlane4, tol: float = CAYLEY_TOL) -> tuple[bool, float | None]:
    """Self-duality test of the restricted Kaehler form.

    Returns (flag, lambda); lambda = (cos(theta1) + cos(theta2)) / 2 clamped
    to [0, 1] when the flag is set, None otherwise.  The result is
    cross-checked against B^2 = -lambda^2 id.
    """
    a = _omega_restriction(plane)
    dev = float(np.linalg.norm(hodge_star_plane(a) - a))
    if dev > tol:
        return False, None
    _, c1, c2 = _canonical_pairs(a)
    lam = float(np.clip(0.5 * (c1 + c2), 0.0, 1.0))
    b = b_operator(plane).matrix
    cross = float(np.linalg.norm(b @ b + lam * lam * np.eye(4)))
    if cross > max(100 * tol, 1e-8):
        raise RuntimeError(
            f"self-dual restriction but B^2 + lambda^2 id = {cross:.3e}; "
            "inconsistent plane data")
    return True, lam


def cayley_basis(plane: OrientedPlane4, tol: float = CAYLEY_TOL) -> np.ndarray:
    """Frame (e1, j e1, e3, j e3) adapted to a Cayley plane, j = B / lambda.

    For lambda = 0 every orthonormal frame qualifies and the input frame is
    returned unchanged.  Non-Cayley planes are rejected.
    """
    ok, lam = is_cayley(plane, tol)
    if not ok:
        raise NotCayleyError("cayley_basis needs a Cayley plane")
    if lam <= tol:
        return plane.frame.copy()
    jmat = b_operator(plane).matrix / lam          # frame-coordinate j, j^2 = -id
    f = plane.frame
    e1c = np.array([1.0, 0.0, 0.0, 0.0])
    e2c = jmat @ e1c
    for cand in (np.array([0.0, 1.0, 0.0, 0.0]),
                 np.array([0.0, 0.0, 1.0, 0.0]),
                 np.array([0.0, 0.0, 0.0, 1.0])):
        r = cand - (e1c @ cand) * e1c - (e2c @ cand) * e2c
        n = np.linalg.norm(r)
        if n > 0.3:
            e3c = r / n
            break
    else:  # pragma: no cover - three candidates cannot all degenerate
        raise RuntimeError("failed to complete the Cayley frame")
    e4c = jmat @ e3c
    coords = np.column_stack([e1c, e2c, e3c, e4c])
    if np.linalg.det(coords) < 0:  # pragma: no cover - Pf(j) = +1 forbids this
        raise RuntimeError("Cayley frame came out negatively oriented")
    return coords.T @ f


def unitary_from_cayley(frame: np.ndarray, lam: float) -> np.ndarray:
    """Unitary basis from a Cayley frame: u_{2k} = (e_{2k} - lam J e_{2k-1}) / s."""
    if lam >= 1.0 - NEAR_COMPLEX_GUARD:
        raise NearComplexError("near_complex: no unitary gauge at lambda ~ 1")
    f = np.asarray(frame, dtype=float)
    st = standard_structure()
    s = np.sqrt(1.0 - lam * lam)
    u = np.vstack([
        f[0],
        (f[1] - lam * (st.j @ f[0])) / s,
        f[2],
        (f[3] - lam * (st.j @ f[2])) / s,
    ])
    dev = _unitary_gram_dev(u)
    if dev > 1e-10:
        raise ValueError(f"input is not a Cayley frame: unitarity deviation {dev:.3e}")
    return u


def omega_xi(plane: OrientedPlane4) -> OmegaXi:
    """Adapted volume-form phase of a totally real plane.

    alpha is fixed by Omega_alpha(u1, .., u4) = 1 for a canonical unitary
    basis; the value of Omega_alpha on the plane itself is
    sin(theta1) sin(theta2).  Planes with a complex factor are rejected.
    """
    rep = canonical_form(plane)
    if rep.degenerate_factors[0] or rep.degenerate_factors[1]:
        raise PartiallyComplexError("omega_xi needs a totally real plane")
    det = omega0_values(rep.unitary_basis[None])[0]
    alpha = float(-np.angle(det))
    value = float(np.sin(rep.theta1) * np.sin(rep.theta2))
    return OmegaXi(alpha=alpha, value=value)


def calibration_value(plane: OrientedPlane4, alpha: float) -> float:
    """Phi_alpha evaluated on the plane via the closed form.

    For totally real planes this equals
    cos(alpha - alpha_xi) sin(theta1) sin(theta2) + cos(theta1) cos(theta2).
    """
    w = omega0_values(plane.frame[None])[0]
    a = _omega_restriction(plane)
    return float((np.exp(1j * alpha) * w).real + pfaffian4(a))


def random_unitary_basis(rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary basis of C^4, returned as real row vectors."""
    z = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return realify(q.T)


def batch_kahler_cosines(frames: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (cos(theta1), cos(theta2)) for frames of shape (n, 4, 8).

    Uses the singular values of the restricted Kaehler form with the
    Pfaffian fixing the sign of the second cosine; the paired singular
    values are averaged for robustness.
    """
    a = restrict_matrix(standard_structure().omega_mat, frames)
    s = np.linalg.svd(a, compute_uv=False)         # descending, (n, 4)
    c1 = 0.5 * (s[..., 0] + s[..., 1])
    sig2 = 0.5 * (s[..., 2] + s[..., 3])
    pf = pfaffian4(a)
    c2 = np.where(pf >= 0, sig2, -sig2)
    return c1, c2
