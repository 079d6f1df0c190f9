"""Parametrized 4-submanifold patches and finite-difference verification.

A patch is a smooth map F from a parameter box in R^4 into a Kaehler
chart, given as a closure, so derivative stencils can be evaluated
anywhere (in particular right up to the box edge).  Per point the module
computes the tangent plane (reported in a unitary ambient frame so the
flat-model plane analysis applies verbatim), the second fundamental form
h, the mean curvature H, and the 1-form

    gamma(X) = omega(X, H) / (lambda^2 - 1)          (variant A)
             = sum_k g(nabla_X u_k, J u_k)           (variant B)

where u_k is a smooth unitary frame adapted to the patch; variant B
propagates the frame from a seed point so the two routes stay genuinely
independent.  The verification entry points check the submanifold
identities for h, the identity d(gamma) = rho restricted to the patch,
the calibrated/minimal dichotomies, and the quadrature identity
int lambda^2 dvol = (1/2) int omega^2.

All finite differencing is central; halving the step should show O(h^2)
behaviour, and the convergence reports implement exactly that check.
Residuals that sit at the rounding floor on every level (this happens for
product tori, whose truncation error is closed by symmetry) are reported
as converged rather than fitted for an order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .multilinear import DIM, OrientedPlane4, hodge_star_plane, pfaffian4
from .hermitian import complexify, omega0_values, realify, standard_structure, wirtinger_values
from .planes import batch_kahler_cosines, canonical_form
from .ambient import KahlerChart, flat_chart, fubini_study_chart

__all__ = [
    "Patch",
    "PointReport",
    "RankError",
    "tangent_plane_at",
    "point_report",
    "gamma_form",
    "UnitaryFrameField",
    "verify_h_symmetry",
    "coclosure_residual",
    "verify_theorem_iii",
    "verify_theorem_i",
    "verify_theorem_ii",
    "l2_lambda_invariant",
    "lambda_square_field",
    "builtin_patch",
    "patch_from_spec",
    "BUILTIN_PATCHES",
]

# Tangent frames flatter than this smallest singular value are rejected.
RANK_TOL = 1e-6

# lambda above this has no totally real gauge; gamma is left undefined.
LAMBDA_GUARD = 1e-4

# Residuals below this floor count as converged in order fits.
RESIDUAL_FLOOR = 1e-9


class RankError(ValueError):
    pass


@dataclass(frozen=True)
class Patch:
    name: str
    chart: KahlerChart
    map_fn: Callable[[np.ndarray], np.ndarray]
    box: np.ndarray                       # (4, 2) rows (lo, hi)
    grid_n: tuple[int, int, int, int] = (9, 9, 9, 9)
    periodic: tuple[bool, bool, bool, bool] = (False, False, False, False)
    fd_step: float = 1e-2

    def __post_init__(self):
        b = np.asarray(self.box, dtype=float)
        if b.shape != (4, 2):
            raise ValueError("box must be (4, 2)")
        object.__setattr__(self, "box", b)

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        return np.asarray(self.map_fn(np.asarray(t, dtype=float)), dtype=float)

    def spacings(self) -> np.ndarray:
        lens = self.box[:, 1] - self.box[:, 0]
        n = np.asarray(self.grid_n, dtype=float)
        per = np.asarray(self.periodic)
        return np.where(per, lens / n, lens / (n - 1))

    def grid_points(self, interior: bool = False) -> np.ndarray:
        """Lattice over the box; periodic axes drop the duplicate endpoint."""
        axes = []
        for a in range(4):
            lo, hi = self.box[a]
            n = self.grid_n[a]
            if self.periodic[a]:
                axes.append(lo + (hi - lo) * np.arange(n) / n)
            else:
                pts = np.linspace(lo, hi, n)
                axes.append(pts[1:-1] if interior else pts)
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def probe_points(self, per_axis: int = 3, shrink: float = 0.6) -> np.ndarray:
        """Small centered sub-lattice used by the expensive verifications."""
        mid = 0.5 * (self.box[:, 0] + self.box[:, 1])
        half = 0.5 * (self.box[:, 1] - self.box[:, 0]) * shrink
        axes = [mid[a] + half[a] * np.linspace(-1.0, 1.0, per_axis) for a in range(4)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def cell_volume(self) -> float:
        return float(np.prod(self.spacings()))


# ---------------------------------------------------------------------------
# Point-level geometry
# ---------------------------------------------------------------------------

def _tangents(patch: Patch, t: np.ndarray, h: float) -> np.ndarray:
    out = np.empty((4, DIM))
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        out[i] = (patch.evaluate(t + e) - patch.evaluate(t - e)) / (2.0 * h)
    return out


def _second_derivatives(patch: Patch, t: np.ndarray, h: float) -> np.ndarray:
    out = np.empty((4, 4, DIM))
    f0 = patch.evaluate(t)
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        out[i, i] = (patch.evaluate(t + e) - 2.0 * f0 + patch.evaluate(t - e)) / (h * h)
    for i in range(4):
        for j in range(i + 1, 4):
            ei = np.zeros(4)
            ej = np.zeros(4)
            ei[i] = h
            ej[j] = h
            v = (patch.evaluate(t + ei + ej) - patch.evaluate(t + ei - ej)
                 - patch.evaluate(t - ei + ej) + patch.evaluate(t - ei - ej)
                 ) / (4.0 * h * h)
            out[i, j] = out[j, i] = v
    return out


def _gram_schmidt(vectors: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Metric Gram-Schmidt of the rows: E = C @ vectors, C lower triangular."""
    e_rows: list[np.ndarray] = []
    c = np.zeros((4, 4))
    for i in range(4):
        v = vectors[i].copy()
        coeff = np.zeros(4)
        coeff[i] = 1.0
        for j in range(len(e_rows)):
            proj = float(e_rows[j] @ g @ vectors[i])
            v -= proj * e_rows[j]
            coeff -= proj * c[j]
        n = math.sqrt(float(v @ g @ v))
        if n < RANK_TOL:
            raise RankError(f"tangent frame is rank deficient (residual {n:.3e})")
        e_rows.append(v / n)
        c[i] = coeff / n
    return np.vstack(e_rows), c


def _model_map(hmat: np.ndarray) -> np.ndarray:
    """Complex matrix L with v -> L.T @ complexify(v) an isometry onto the model."""
    m = 2.0 * hmat
    return np.linalg.cholesky(m)


def _to_model(l: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    return realify(complexify(vectors) @ l)          # rows v: (L.T @ z) per row


@dataclass
class _PointGeometry:
    t: np.ndarray
    p: np.ndarray
    tangents: np.ndarray          # (4, 8) coordinate tangents dF/dt_i
    g: np.ndarray
    omega: np.ndarray             # omega matrix at p
    frame: np.ndarray             # (4, 8) g-orthonormal tangent frame
    gs_coeff: np.ndarray          # frame = gs_coeff @ tangents
    model_frame: np.ndarray       # same frame in the flat model
    cos1: float
    cos2: float
    lam: float
    cayley_dev: float             # ||*omega|_xi - omega|_xi||_F in the model

    def tangential(self, w: np.ndarray) -> np.ndarray:
        coefs = self.frame @ self.g @ w
        return coefs @ self.frame

    def normal(self, w: np.ndarray) -> np.ndarray:
        return w - self.tangential(w)


def _point_geometry(patch: Patch, t: np.ndarray, h: float) -> _PointGeometry:
    t = np.asarray(t, dtype=float)
    p = patch.evaluate(t)
    tang = _tangents(patch, t, h)
    hmat = patch.chart.hermitian_at(p)
    g = np.zeros((DIM, DIM))
    g[0::2, 0::2] = 2.0 * hmat.real
    g[1::2, 1::2] = 2.0 * hmat.real
    g[0::2, 1::2] = 2.0 * hmat.imag
    g[1::2, 0::2] = -2.0 * hmat.imag
    sv = np.linalg.svd(tang @ g @ tang.T, compute_uv=False)
    if math.sqrt(float(sv[-1])) < RANK_TOL:
        raise RankError("dF loses rank at this point")
    frame, coeff = _gram_schmidt(tang, g)
    l = _model_map(hmat)
    model = _to_model(l, frame)
    st = standard_structure()
    omega = st.j.T @ g
    a = model @ st.omega_mat @ model.T
    c1, c2 = batch_kahler_cosines(model[None])
    c1, c2 = float(c1[0]), float(c2[0])
    dev = float(np.linalg.norm(hodge_star_plane(a) - a))
    return _PointGeometry(
        t=t, p=p, tangents=tang, g=g, omega=omega, frame=frame, gs_coeff=coeff,
        model_frame=model, cos1=c1, cos2=c2, lam=0.5 * (c1 + c2), cayley_dev=dev,
    )


@dataclass(frozen=True)
class PointReport:
    t: np.ndarray
    point: np.ndarray
    tangent_plane: OrientedPlane4          # in the unitary ambient frame
    frame_chart: np.ndarray
    cos1: float
    cos2: float
    lam: float
    cayley_dev: float
    h_tensor: np.ndarray                   # (4, 4, 8), frame arguments, chart values
    mean_curvature: np.ndarray
    mean_curvature_norm: float
    h_symmetry_dev: float
    gamma: np.ndarray | None               # parameter coframe, variant A

    def to_json(self) -> dict:
        return {
            "t": self.t.tolist(),
            "point": self.point.tolist(),
            "cos_theta1": self.cos1,
            "cos_theta2": self.cos2,
            "lambda": self.lam,
            "cayley_deviation": self.cayley_dev,
            "mean_curvature_norm": self.mean_curvature_norm,
            "gamma": None if self.gamma is None else self.gamma.tolist(),
        }


def _second_fundamental(patch: Patch, geo: _PointGeometry, h: float):
    """(h-tensor in the orthonormal frame, nabla of coordinate fields)."""
    sec = _second_derivatives(patch, geo.t, h)
    gamma_chr = patch.chart.christoffel_at(geo.p)
    nab = sec + np.einsum("abc,ib,jc->ija", gamma_chr, geo.tangents, geo.tangents)
    ii = np.empty_like(nab)
    for i in range(4):
        for j in range(4):
            ii[i, j] = geo.normal(nab[i, j])
    h_frame = np.einsum("ai,bj,ijc->abc", geo.gs_coeff, geo.gs_coeff, ii)
    return h_frame, nab


def tangent_plane_at(patch: Patch, t: np.ndarray, h: float | None = None) -> OrientedPlane4:
    """Oriented tangent plane in a unitary ambient frame at the point."""
    geo = _point_geometry(patch, t, h or patch.fd_step)
    return OrientedPlane4(geo.model_frame)


def point_report(patch: Patch, t: np.ndarray, h: float | None = None,
                 want_gamma: bool = True) -> PointReport:
    h = h or patch.fd_step
    geo = _point_geometry(patch, t, h)
    h_frame, _ = _second_fundamental(patch, geo, h)
    mean = h_frame[0, 0] + h_frame[1, 1] + h_frame[2, 2] + h_frame[3, 3]
    hnorm = math.sqrt(float(mean @ geo.g @ mean))
    sym = float(np.max(np.abs(h_frame - h_frame.transpose(1, 0, 2))))
    gamma = None
    if want_gamma and geo.lam <= 1.0 - LAMBDA_GUARD:
        denom = geo.lam * geo.lam - 1.0
        gamma = np.array([float(geo.tangents[i] @ geo.omega @ mean) / denom
                          for i in range(4)])
    return PointReport(
        t=geo.t, point=geo.p,
        tangent_plane=OrientedPlane4(geo.model_frame),
        frame_chart=geo.frame,
        cos1=geo.cos1, cos2=geo.cos2, lam=geo.lam, cayley_dev=geo.cayley_dev,
        h_tensor=h_frame, mean_curvature=mean, mean_curvature_norm=hnorm,
        h_symmetry_dev=sym, gamma=gamma,
    )


# ---------------------------------------------------------------------------
# Smooth unitary frame field (variant B of gamma)
# ---------------------------------------------------------------------------

class UnitaryFrameField:
    """Cayley frame field propagated from a seed point.

    The seed frame comes from the canonical form at the anchor.  Moving to
    a neighbouring parameter point, e1 and e3 are projected onto the new
    tangent space and re-orthonormalized; for lambda bounded away from 0
    their j-partners are regenerated through j = B / lambda, otherwise
    (Lagrangian regime) a plain metric Gram-Schmidt is used, which is a
    valid adapted frame when the restricted Kaehler form vanishes.  Paths
    are axis-ordered with a fixed number of steps per axis, so the frame
    depends smoothly on the target point.
    """

    def __init__(self, patch: Patch, h: float | None = None,
                 anchor: np.ndarray | None = None, steps_per_axis: int = 12,
                 gauge: float = 0.0):
        self.patch = patch
        self.h = h or patch.fd_step
        self.anchor = (0.5 * (patch.box[:, 0] + patch.box[:, 1])
                       if anchor is None else np.asarray(anchor, dtype=float))
        self.steps = steps_per_axis
        self.gauge = float(gauge)
        geo = _point_geometry(patch, self.anchor, self.h)
        rep = canonical_form(OrientedPlane4(geo.model_frame))
        if rep.lam is None:
            raise ValueError("frame field needs a Cayley anchor point")
        self.lagrangian_mode = rep.lam <= 0.05
        # canonical tangent frame back in chart coordinates; model_frame rows
        # are orthonormal, so the coefficient matrix is a plain projection
        coords = rep.canonical_tangent_frame @ geo.model_frame.T
        seed = coords @ geo.frame
        self._cache: dict[tuple, np.ndarray] = {}
        self._seed = self._orthonormalize(seed, geo)
        self._cache[self._key(self.anchor)] = self._seed

    def _key(self, t: np.ndarray) -> tuple:
        return tuple(np.round(np.asarray(t, dtype=float), 12))

    def _orthonormalize(self, frame: np.ndarray, geo: _PointGeometry) -> np.ndarray:
        if self.lagrangian_mode:
            proj = np.vstack([geo.tangential(frame[k]) for k in range(4)])
            e, _ = _gram_schmidt(proj, geo.g)
            return e
        lam = geo.lam
        if lam < 0.01:
            raise ValueError("lambda dropped below the Cayley-frame regime")
        st = standard_structure()

        def jop(v):
            return geo.tangential(st.j @ v) / lam

        e1 = geo.tangential(frame[0])
        e1 /= math.sqrt(float(e1 @ geo.g @ e1))
        e2 = jop(e1)
        e3 = geo.tangential(frame[2])
        for w in (e1, e2):
            e3 = e3 - float(w @ geo.g @ e3) * w
        e3 /= math.sqrt(float(e3 @ geo.g @ e3))
        e4 = jop(e3)
        return np.vstack([e1, e2, e3, e4])

    def _advance(self, frame: np.ndarray, t_next: np.ndarray) -> np.ndarray:
        geo = _point_geometry(self.patch, t_next, self.h)
        return self._orthonormalize(frame, geo)

    def cayley_frame(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        key = self._key(t)
        if key in self._cache:
            return self._apply_gauge(self._cache[key])
        frame = self._seed
        cur = self.anchor.copy()
        for axis in range(4):
            delta = (t[axis] - self.anchor[axis]) / self.steps
            for s in range(1, self.steps + 1):
                nxt = cur.copy()
                nxt[axis] = self.anchor[axis] + s * delta
                if abs(delta) > 0:
                    frame = self._advance(frame, nxt)
                cur = nxt
        self._cache[key] = frame
        return self._apply_gauge(frame)

    def _apply_gauge(self, frame: np.ndarray) -> np.ndarray:
        if self.gauge == 0.0:
            return frame
        c, s = math.cos(self.gauge), math.sin(self.gauge)
        e1 = c * frame[0] + s * frame[2]
        e3 = -s * frame[0] + c * frame[2]
        e2 = c * frame[1] + s * frame[3]
        e4 = -s * frame[1] + c * frame[3]
        return np.vstack([e1, e2, e3, e4])

    def unitary_frame(self, t: np.ndarray) -> np.ndarray:
        frame = self.cayley_frame(t)
        geo = _point_geometry(self.patch, t, self.h)
        lam = geo.lam
        if lam >= 1.0 - LAMBDA_GUARD:
            raise ValueError("near-complex point: no unitary gauge")
        st = standard_structure()
        s = math.sqrt(1.0 - lam * lam)
        return np.vstack([
            frame[0],
            (frame[1] - lam * (st.j @ frame[0])) / s,
            frame[2],
            (frame[3] - lam * (st.j @ frame[2])) / s,
        ])


def gamma_form(patch: Patch, t: np.ndarray, h: float | None = None,
               frame_field: UnitaryFrameField | None = None) -> dict:
    """Both routes to gamma at a parameter point (parameter coframe).

    Variant A is omega(., H) / (lambda^2 - 1); variant B differentiates a
    propagated unitary frame.  Totally real Cayley points only.
    """
    h = h or patch.fd_step
    rep = point_report(patch, t, h)
    if rep.gamma is None:
        raise ValueError("gamma needs lambda bounded away from 1")
    if frame_field is None:
        frame_field = UnitaryFrameField(patch, h=h)
    geo = _point_geometry(patch, t, h)
    st = standard_structure()
    gamma_chr = patch.chart.christoffel_at(geo.p)
    u0 = frame_field.unitary_frame(t)
    ju = (st.j @ u0.T).T
    gamma_b = np.empty(4)
    for a in range(4):
        e = np.zeros(4)
        e[a] = h
        up = frame_field.unitary_frame(t + e)
        um = frame_field.unitary_frame(t - e)
        du = (up - um) / (2.0 * h)
        total = 0.0
        for k in range(4):
            nab = du[k] + np.einsum("abc,b,c->a", gamma_chr, geo.tangents[a], u0[k])
            total += float(nab @ geo.g @ ju[k])
        # the frame trace computes the phase derivative of the complex volume
        # form along the patch; gamma is its negative
        gamma_b[a] = -total
    return {
        "gamma_a": rep.gamma,
        "gamma_b": gamma_b,
        "lambda": rep.lam,
        "max_abs_diff": float(np.max(np.abs(rep.gamma - gamma_b))),
    }


# ---------------------------------------------------------------------------
# Submanifold identity checks
# ---------------------------------------------------------------------------

def _omega_pair(patch: Patch, t: np.ndarray, h: float,
                first: np.ndarray, second: np.ndarray) -> float:
    """omega on two constant-coefficient coordinate fields at parameter t."""
    geo = _point_geometry(patch, t, h)
    return float((first @ geo.tangents) @ geo.omega @ (second @ geo.tangents))


def verify_h_symmetry(patch: Patch, t: np.ndarray, n_triples: int = 8,
                      h: float | None = None, seed: int = 0,
                      cayley_tol: float | None = None) -> dict:
    """Residuals of the two mean-curvature identities at a point.

    Identity 1:  g(h(X,Y), JZ) - g(h(X,Z), JY) = (D_X omega)(Z, Y)
    Identity 2:  omega(X, H) = sum_i g(h(X, e_i), J e_i)

    X, Y, Z run over random constant-coefficient combinations of the
    coordinate fields.  Identity 1 holds for any submanifold; identity 2
    uses coclosure of the restricted Kaehler form, so it is only checked
    when the point is Cayley within tolerance (None otherwise).
    """
    h = h or patch.fd_step
    if cayley_tol is None:
        cayley_tol = 100.0 * h * h + 1e-9
    rng = np.random.default_rng(seed)
    geo = _point_geometry(patch, t, h)
    st = standard_structure()
    h_frame, nab = _second_fundamental(patch, geo, h)
    # h on coordinate fields, and the tangential connection on them
    ii = np.empty_like(nab)
    dtang = np.empty_like(nab)
    for i in range(4):
        for j in range(4):
            ii[i, j] = geo.normal(nab[i, j])
            dtang[i, j] = geo.tangential(nab[i, j])

    res1 = []
    for _ in range(n_triples):
        x, y, z = rng.standard_normal((3, 4))
        hxy = np.einsum("i,j,ijc->c", x, y, ii)
        hxz = np.einsum("i,j,ijc->c", x, z, ii)
        jz = st.j @ (z @ geo.tangents)
        jy = st.j @ (y @ geo.tangents)
        lhs = float(hxy @ geo.g @ jz) - float(hxz @ geo.g @ jy)

        fwd = _omega_pair(patch, t + h * x, h, z, y)
        bwd = _omega_pair(patch, t - h * x, h, z, y)
        d_along = (fwd - bwd) / (2.0 * h)
        dxz = np.einsum("i,j,ijc->c", x, z, dtang)
        dxy = np.einsum("i,j,ijc->c", x, y, dtang)
        yv = y @ geo.tangents
        zv = z @ geo.tangents
        rhs = (d_along - float(dxz @ geo.omega @ yv) - float(zv @ geo.omega @ dxy))
        res1.append(abs(lhs - rhs))

    identity2_max = None
    if geo.cayley_dev <= cayley_tol:
        mean = h_frame[0, 0] + h_frame[1, 1] + h_frame[2, 2] + h_frame[3, 3]
        res2 = []
        for _ in range(n_triples):
            x = rng.standard_normal(4)
            xv = x @ geo.tangents
            lhs = float(xv @ geo.omega @ mean)
            total = 0.0
            xcoef = geo.frame @ geo.g @ xv      # X in the orthonormal frame
            for a in range(4):
                hxe = np.einsum("i,ic->c", xcoef, h_frame[:, a])
                je = st.j @ geo.frame[a]
                total += float(hxe @ geo.g @ je)
            res2.append(abs(lhs - total))
        identity2_max = float(np.max(res2))

    return {
        "identity1_max": float(np.max(res1)),
        "identity2_max": identity2_max,
        "h_symmetry_dev": float(np.max(np.abs(h_frame - h_frame.transpose(1, 0, 2)))),
        "cayley_deviation": geo.cayley_dev,
        "fd_step": h,
    }


def coclosure_residual(patch: Patch, t: np.ndarray, h: float | None = None) -> float:
    """Max over X of |d*(omega|_N)(X)| = |sum_a (D_{e_a} omega)(e_a, X)|."""
    h = h or patch.fd_step
    geo = _point_geometry(patch, t, h)
    _, nab = _second_fundamental(patch, geo, h)
    gamma_chr = patch.chart.christoffel_at(geo.p)
    totals = np.zeros(4)
    for a in range(4):
        w = geo.gs_coeff[a]                         # e_a in parameter coordinates
        gp = _point_geometry(patch, t + h * w, h)
        gm = _point_geometry(patch, t - h * w, h)
        # D_{e_a} e_a, with the Gram-Schmidt frame as the frame field
        dframe = (gp.frame[a] - gm.frame[a]) / (2.0 * h)
        wamb = w @ geo.tangents
        d_ea = geo.tangential(dframe + np.einsum("abc,b,c->a",
                                                 gamma_chr, wamb, geo.frame[a]))
        for bx in range(4):
            fp = float(gp.frame[a] @ gp.omega @ gp.tangents[bx])
            fm = float(gm.frame[a] @ gm.omega @ gm.tangents[bx])
            d_along = (fp - fm) / (2.0 * h)
            d_x = geo.tangential(np.einsum("i,ijc->jc", w, nab)[bx])
            totals[bx] += (d_along
                           - float(d_ea @ geo.omega @ geo.tangents[bx])
                           - float(geo.frame[a] @ geo.omega @ d_x))
    return float(np.max(np.abs(totals)))


# ---------------------------------------------------------------------------
# Theorem-level verification
# ---------------------------------------------------------------------------

def _gamma_a_at(patch: Patch, t: np.ndarray, h: float) -> np.ndarray:
    rep = point_report(patch, t, h)
    if rep.gamma is None:
        raise ValueError("gamma undefined (lambda too close to 1)")
    return rep.gamma


def _dgamma_residual(patch: Patch, t: np.ndarray, h: float,
                     cayley_tol: float) -> float | None:
    """max_{i<j} |(d gamma - rho|_N)(d_i, d_j)|; None masks the point."""
    geo = _point_geometry(patch, t, h)
    if geo.cayley_dev > cayley_tol or geo.lam > 1.0 - LAMBDA_GUARD:
        return None
    rho = patch.chart.ricci_form_at(geo.p)
    gplus = np.empty((4, 4))
    gminus = np.empty((4, 4))
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        gplus[i] = _gamma_a_at(patch, t + e, h)
        gminus[i] = _gamma_a_at(patch, t - e, h)
    worst = 0.0
    for i in range(4):
        for j in range(i + 1, 4):
            dg = ((gplus[i, j] - gminus[i, j]) - (gplus[j, i] - gminus[j, i])) / (2.0 * h)
            pull = float(geo.tangents[i] @ rho @ geo.tangents[j])
            worst = max(worst, abs(dg - pull))
    return worst


@dataclass(frozen=True)
class ConvergenceReport:
    residuals: tuple[float, ...]
    orders: tuple[float, ...]
    converged_at_floor: bool
    final_residual: float
    n_probes: int = 0
    n_masked: int = 0

    def passes(self, tol: float, min_order: float = 1.8) -> bool:
        """Final residual within tol, decaying at the expected order.

        Residuals that sit at the rounding floor carry no usable order
        information (the printed order would be noise), so the floor
        clause stands in for the order check there.
        """
        if self.final_residual > tol:
            return False
        if self.converged_at_floor or self.final_residual <= RESIDUAL_FLOOR:
            return True
        return all(o >= min_order or not math.isfinite(o) for o in self.orders)

    def to_json(self) -> dict:
        return {
            "residuals": list(self.residuals),
            "orders": list(self.orders),
            "converged_at_floor": self.converged_at_floor,
            "final_residual": self.final_residual,
            "n_probes": self.n_probes,
            "n_masked": self.n_masked,
        }


def verify_theorem_iii(patch: Patch, probes: np.ndarray | None = None,
                       h0: float | None = None, levels: int = 3,
                       cayley_tol: float | None = None) -> ConvergenceReport:
    """Residual of d(gamma) = rho|_N with a step-halving convergence study.

    Probes that are not Cayley within tolerance, or are near complex, are
    masked out of the report (the identity is not asserted there).
    """
    if probes is None:
        probes = patch.probe_points(per_axis=2, shrink=0.5)
    h0 = h0 or patch.fd_step
    residuals = []
    masked = 0
    for k in range(levels):
        h = h0 / (2 ** k)
        tol_here = cayley_tol if cayley_tol is not None else 100.0 * h * h + 1e-9
        level_masked = 0
        worst = 0.0
        for t in probes:
            r = _dgamma_residual(patch, t, h, tol_here)
            if r is None:
                level_masked += 1
            else:
                worst = max(worst, r)
        if level_masked == len(probes):
            raise ValueError("every probe point was masked; nothing to verify")
        masked = max(masked, level_masked)
        residuals.append(worst)
    orders = []
    for k in range(len(residuals) - 1):
        lo, hi = residuals[k + 1], residuals[k]
        if lo <= RESIDUAL_FLOOR:
            orders.append(float("inf"))
        else:
            orders.append(math.log2(hi / lo))
    at_floor = all(r <= RESIDUAL_FLOOR for r in residuals)
    return ConvergenceReport(
        residuals=tuple(residuals),
        orders=tuple(orders),
        converged_at_floor=at_floor,
        final_residual=residuals[-1],
        n_probes=len(probes),
        n_masked=masked,
    )


def _wrap_angle(a: np.ndarray) -> np.ndarray:
    return np.angle(np.exp(1j * a))


@dataclass(frozen=True)
class CalibrationReport:
    minimal: bool
    max_mean_curvature: float
    branch: str
    best_alpha: float | None
    calibration_defect: float | None       # max |Phi_{alpha*} - 1| when minimal
    phase_deviation: float | None
    max_min_phi: float | None              # max_alpha min_points Phi_alpha otherwise
    n_points: int

    def to_json(self) -> dict:
        return {
            "minimal": self.minimal,
            "max_mean_curvature": self.max_mean_curvature,
            "branch": self.branch,
            "best_alpha": self.best_alpha,
            "calibration_defect": self.calibration_defect,
            "phase_deviation": self.phase_deviation,
            "max_min_phi": self.max_min_phi,
            "n_points": self.n_points,
        }


def verify_theorem_i(patch: Patch, alphas: np.ndarray | None = None,
                     tol_min: float = 1e-4, points: np.ndarray | None = None,
                     h: float | None = None) -> CalibrationReport:
    """Calibrated/minimal dichotomy for pointwise Cayley patches (flat chart).

    Minimal patches must be calibrated by a single phase (complex patches by
    every phase); non-minimal ones must fail every phase somewhere.
    """
    if alphas is None:
        alphas = np.linspace(0.0, 2.0 * np.pi, 16, endpoint=False)
    if points is None:
        points = patch.grid_points(interior=False)
    h = h or patch.fd_step
    hmax = 0.0
    frames = []
    for t in points:
        rep = point_report(patch, t, h, want_gamma=False)
        hmax = max(hmax, rep.mean_curvature_norm)
        frames.append(rep.tangent_plane.frame)
    frames = np.asarray(frames)
    w = omega0_values(frames)
    pf = wirtinger_values(frames)
    phi = (np.exp(1j * alphas)[:, None] * w[None, :]).real + pf[None, :]

    minimal = hmax <= tol_min
    if not minimal:
        max_min = float(np.max(np.min(phi, axis=1)))
        return CalibrationReport(
            minimal=False, max_mean_curvature=hmax, branch="not_minimal",
            best_alpha=None, calibration_defect=None, phase_deviation=None,
            max_min_phi=max_min, n_points=len(points),
        )
    # complex points carry no phase information (Omega vanishes on them)
    wabs = np.abs(w)
    if np.all(wabs < 1e-12):
        defect = float(np.max(np.abs(phi - 1.0)))
        return CalibrationReport(
            minimal=True, max_mean_curvature=hmax, branch="complex_all_alpha",
            best_alpha=None, calibration_defect=defect, phase_deviation=0.0,
            max_min_phi=None, n_points=len(points),
        )
    alpha_xi = -np.angle(w)
    mean_dir = np.mean(np.exp(1j * alpha_xi))
    alpha_star = float(np.angle(mean_dir))
    phase_dev = float(np.max(np.abs(_wrap_angle(alpha_xi - alpha_star))))
    phi_star = (np.exp(1j * alpha_star) * w).real + pf
    defect = float(np.max(np.abs(phi_star - 1.0)))
    return CalibrationReport(
        minimal=True, max_mean_curvature=hmax, branch="calibrated",
        best_alpha=alpha_star, calibration_defect=defect,
        phase_deviation=phase_dev, max_min_phi=None, n_points=len(points),
    )


@dataclass(frozen=True)
class EinsteinDichotomyReport:
    preconditions_met: bool
    failed_precondition: str | None
    branch: str | None
    einstein_constant: float
    max_mean_curvature: float
    max_cayley_deviation: float
    lambda_min: float
    lambda_max: float
    n_points: int

    def to_json(self) -> dict:
        return {
            "preconditions_met": self.preconditions_met,
            "failed_precondition": self.failed_precondition,
            "branch": self.branch,
            "einstein_constant": self.einstein_constant,
            "max_mean_curvature": self.max_mean_curvature,
            "max_cayley_deviation": self.max_cayley_deviation,
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "n_points": self.n_points,
        }


def verify_theorem_ii(patch: Patch, tol_min: float = 1e-4,
                      lam_tol: float = 1e-4, cayley_tol: float | None = None,
                      points: np.ndarray | None = None,
                      h: float | None = None,
                      einstein_points: int = 25) -> EinsteinDichotomyReport:
    """Minimal Cayley patches of a nonflat Einstein chart must be complex
    or Lagrangian; precondition failures are reported, never asserted over.

    Preconditions, in order: the chart is Einstein with nonzero constant,
    every sampled point is Cayley within tolerance, the patch is minimal.
    """
    from .ambient import einstein_report

    h = h or patch.fd_step
    if cayley_tol is None:
        cayley_tol = 100.0 * h * h + 1e-9
    if points is None:
        points = patch.grid_points(interior=False)
    ein = einstein_report(patch.chart, n_points=einstein_points)
    hmax = 0.0
    devmax = 0.0
    lams = []
    for t in points:
        rep = point_report(patch, t, h, want_gamma=False)
        hmax = max(hmax, rep.mean_curvature_norm)
        devmax = max(devmax, rep.cayley_dev)
        lams.append(rep.lam)
    lmin, lmax = float(np.min(lams)), float(np.max(lams))

    def report(met, failed, branch):
        return EinsteinDichotomyReport(
            preconditions_met=met, failed_precondition=failed, branch=branch,
            einstein_constant=ein.scalar, max_mean_curvature=hmax,
            max_cayley_deviation=devmax, lambda_min=lmin, lambda_max=lmax,
            n_points=len(points))

    if abs(ein.scalar) < 1e-3 or ein.max_deviation > 1e-4:
        return report(False, "einstein_chart", None)
    if devmax > cayley_tol:
        return report(False, "pointwise_cayley", None)
    if hmax > tol_min:
        return report(False, "minimal", None)
    if lmax <= lam_tol:
        branch = "lagrangian"
    elif lmin >= 1.0 - lam_tol:
        branch = "complex"
    else:
        branch = "violation"
    return report(True, None, branch)


def l2_lambda_invariant(patch: Patch, h: float | None = None) -> dict:
    """Quadrature of lambda^2 dvol against (1/2) the squared Kaehler form.

    The patch must be closed (all axes periodic); the two integrands are
    computed by independent routes (angle extraction vs Pfaffian of the
    pulled-back form).
    """
    if not all(patch.periodic):
        raise ValueError("the quadrature identity needs a closed (periodic) patch")
    h = h or patch.fd_step
    pts = patch.grid_points()
    cell = patch.cell_volume()
    lhs = 0.0
    rhs = 0.0
    for t in pts:
        geo = _point_geometry(patch, t, h)
        gind = geo.tangents @ geo.g @ geo.tangents.T
        dvol = math.sqrt(max(float(np.linalg.det(gind)), 0.0))
        lhs += geo.lam ** 2 * dvol
        pull = geo.tangents @ geo.omega @ geo.tangents.T
        rhs += pfaffian4(pull)
    return {
        "lambda_sq_integral": lhs * cell,
        "half_omega_sq_integral": float(rhs) * cell,
        "difference": abs(lhs * cell - float(rhs) * cell),
        "n_points": len(pts),
    }


def lambda_square_field(patch: Patch, points: np.ndarray | None = None,
                        h: float | None = None) -> dict:
    """Pointwise lambda^2 by two routes over the grid.

    Route one extracts the angle cosines of the tangent plane; route two
    divides the restricted squared Kaehler form by twice the volume
    density.  For pointwise Cayley patches both give lambda^2 in [0, 1].
    """
    h = h or patch.fd_step
    if points is None:
        points = patch.grid_points(interior=False)
    from_angles = np.empty(len(points))
    from_pfaffian = np.empty(len(points))
    for n, t in enumerate(points):
        geo = _point_geometry(patch, t, h)
        from_angles[n] = geo.lam ** 2
        gind = geo.tangents @ geo.g @ geo.tangents.T
        dvol = math.sqrt(max(float(np.linalg.det(gind)), 0.0))
        pull = geo.tangents @ geo.omega @ geo.tangents.T
        from_pfaffian[n] = pfaffian4(pull) / dvol
    return {
        "from_angles": from_angles,
        "from_pfaffian": from_pfaffian,
        "max_mismatch": float(np.max(np.abs(from_angles - from_pfaffian))),
        "min_value": float(np.min(from_pfaffian)),
        "max_value": float(np.max(from_pfaffian)),
    }


# ---------------------------------------------------------------------------
# Built-in patch families
# ---------------------------------------------------------------------------

def _affine_patch(params: dict, chart: KahlerChart) -> tuple[Callable, np.ndarray, tuple]:
    if "frame" in params:
        base = np.asarray(params["frame"], dtype=float)
    else:
        # default is the real-axes (special Lagrangian) plane
        theta1 = float(params.get("theta1", 0.5 * math.pi))
        theta2 = float(params.get("theta2", theta1))
        from .planes import build_plane
        u = realify(np.eye(4, dtype=complex))
        base = build_plane(u, theta1, theta2).frame
    offset = np.asarray(params.get("offset", np.zeros(DIM)), dtype=float)

    def fmap(t):
        return offset + t @ base

    return fmap, np.array([[-0.5, 0.5]] * 4), (False,) * 4


def _complex_graph(params: dict, chart: KahlerChart):
    a = float(params.get("a", 0.3))
    b = float(params.get("b", 0.2))
    c = float(params.get("c", 0.25))
    d = float(params.get("d", 0.15))

    def fmap(t):
        z1 = t[0] + 1j * t[1]
        z2 = t[2] + 1j * t[3]
        z3 = a * z1 * z1 + b * z1 * z2
        z4 = c * z2 * z2 + d * z1 * z2
        return realify(np.array([z1, z2, z3, z4]))

    return fmap, np.array([[-0.6, 0.6]] * 4), (False,) * 4


def _lagrangian_graph(params: dict, chart: KahlerChart):
    amp = float(params.get("amp", 0.1))
    beta = float(params.get("beta", 0.5))

    def grad_f(t):
        s = float(t @ t)
        g = 4.0 * amp * s * t
        for k in range(4):
            others = np.prod(np.delete(t, k))
            g[k] += amp * beta * others
        return g

    def fmap(t):
        out = np.empty(DIM)
        out[0::2] = t
        out[1::2] = grad_f(t)
        return out

    return fmap, np.array([[-0.5, 0.5]] * 4), (False,) * 4


def _product_torus(params: dict, chart: KahlerChart):
    radii = np.asarray(params.get("radii", [1.0, 1.0, 1.0, 1.0]), dtype=float)

    def fmap(t):
        out = np.empty(DIM)
        out[0::2] = radii * np.cos(t)
        out[1::2] = radii * np.sin(t)
        return out

    return fmap, np.array([[0.0, 2.0 * np.pi]] * 4), (True,) * 4


def _perturbed_lagrangian_torus(params: dict, chart: KahlerChart):
    r = float(params.get("r", 1.0))
    eps = float(params.get("eps", 0.05))
    # radii r_m with r_m^2 = r^2 + eps * d_m Psi, Psi = cos(phi1 + phi2):
    # the 1-form sum r_m^2 dphi_m stays closed, so the torus stays Lagrangian.

    def fmap(t):
        d_psi = np.array([-np.sin(t[0] + t[1]), -np.sin(t[0] + t[1]), 0.0, 0.0])
        radii = np.sqrt(r * r + eps * d_psi)
        out = np.empty(DIM)
        out[0::2] = radii * np.cos(t)
        out[1::2] = radii * np.sin(t)
        return out

    return fmap, np.array([[0.0, 2.0 * np.pi]] * 4), (True,) * 4


def _complex_torus(params: dict, chart: KahlerChart):
    def fmap(t):
        return realify(np.array([t[0] + 1j * t[1], t[2] + 1j * t[3], 0.0, 0.0]))

    return fmap, np.array([[0.0, 2.0 * np.pi]] * 4), (True,) * 4


def _fs_real_slice(params: dict, chart: KahlerChart):
    def fmap(t):
        out = np.zeros(DIM)
        out[0::2] = t
        return out

    return fmap, np.array([[-0.6, 0.6]] * 4), (False,) * 4


def _fs_complex_slice(params: dict, chart: KahlerChart):
    def fmap(t):
        return realify(np.array([t[0] + 1j * t[1], t[2] + 1j * t[3], 0.0, 0.0]))

    return fmap, np.array([[-0.6, 0.6]] * 4), (False,) * 4


def _fs_lagrangian_torus(params: dict, chart: KahlerChart):
    # In moment coordinates mu_m = R_m^2 / (1 + sum R^2) the restriction of
    # the chart Kaehler form to a torus section R(phi) is the antisymmetric
    # part of d(mu_m) dphi_m, so sections with mu_m = kappa_m + eps * d_m Psi
    # (a closed perturbation) are exactly Lagrangian.  eps = 0 gives the
    # product torus; eps > 0 couples the angles, which keeps finite
    # differences honest.
    kappa = np.asarray(params.get("kappa", [0.08, 0.1, 0.12, 0.09]), dtype=float)
    eps = float(params.get("eps", 0.02))

    def fmap(t):
        d_psi = np.array([-np.sin(t[0] + t[1]), -np.sin(t[0] + t[1]), 0.0, 0.0])
        mu = kappa + eps * d_psi
        radii = np.sqrt(mu / (1.0 - np.sum(mu)))
        out = np.empty(DIM)
        out[0::2] = radii * np.cos(t)
        out[1::2] = radii * np.sin(t)
        return out

    return fmap, np.array([[0.0, 2.0 * np.pi]] * 4), (True,) * 4


def _perturbed_real_slice(params: dict, chart: KahlerChart):
    eps = float(params.get("eps", 0.05))

    def fmap(t):
        out = np.zeros(DIM)
        out[0::2] = t
        out[1] = eps * np.sin(t[1]) * np.cos(t[2])
        out[3] = eps * np.sin(t[2] + t[3])
        return out

    return fmap, np.array([[-0.6, 0.6]] * 4), (False,) * 4


BUILTIN_PATCHES = {
    "affine": (_affine_patch, "flat"),
    "complex-graph": (_complex_graph, "flat"),
    "lagrangian-graph": (_lagrangian_graph, "flat"),
    "product-torus": (_product_torus, "flat"),
    "perturbed-lagrangian-torus": (_perturbed_lagrangian_torus, "flat"),
    "complex-torus": (_complex_torus, "flat"),
    "fs-real-slice": (_fs_real_slice, "fubini-study"),
    "fs-complex-slice": (_fs_complex_slice, "fubini-study"),
    "fs-lagrangian-torus": (_fs_lagrangian_torus, "fubini-study"),
    "perturbed-real-slice": (_perturbed_real_slice, "fubini-study"),
}


def builtin_patch(name: str, params: dict | None = None,
                  chart: KahlerChart | None = None,
                  grid_n: tuple[int, int, int, int] | None = None,
                  fd_step: float = 1e-2) -> Patch:
    if name not in BUILTIN_PATCHES:
        raise KeyError(f"unknown patch '{name}'; known: {sorted(BUILTIN_PATCHES)}")
    maker, default_chart = BUILTIN_PATCHES[name]
    if chart is None:
        chart = flat_chart() if default_chart == "flat" else fubini_study_chart()
    fmap, box, periodic = maker(params or {}, chart)
    return Patch(
        name=name, chart=chart, map_fn=fmap, box=box,
        grid_n=grid_n or (9, 9, 9, 9), periodic=periodic, fd_step=fd_step,
    )


def patch_from_spec(spec: dict) -> Patch:
    """Build a patch from its JSON description.

    Schema: {"name": str, "params": {...}, "grid": {"n": [4 ints]},
             "ambient": "flat" | "fubini-study", "fd_step": float}.
    """
    name = spec["name"]
    chart_name = spec.get("ambient")
    chart = None
    if chart_name == "flat":
        chart = flat_chart()
    elif chart_name == "fubini-study":
        chart = fubini_study_chart()
    elif chart_name is not None:
        raise ValueError(f"unknown ambient chart '{chart_name}'")
    grid = spec.get("grid", {})
    grid_n = tuple(grid.get("n", (9, 9, 9, 9)))
    if len(grid_n) != 4:
        raise ValueError("grid.n needs 4 entries")
    return builtin_patch(name, spec.get("params"), chart, grid_n,
                         float(spec.get("fd_step", 1e-2)))
