"""Similarity alignment of eyeglass anchors onto face anchors.

Minimizes ``sum_i || f * Pr @ R @ (g_i + t3d) - Pr' @ q_i ||^2`` where g are
eyeglass anchors and q face anchors.  ``Full3D`` uses Pr = I and is solved in
closed form; ``Orthographic2D`` drops depth and is refined by Gauss-Newton.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DegenerateConfigurationError, InvalidArgument, ParseError
from .geometry import (
    RigidSimilarity,
    _rx,
    _ry,
    _rz,
    euler_from_rotation,
    from_post_translation,
    rotation_from_euler,
    transform_points,
)

MAX_GN_ITERS = 50
GN_STEP_TOL = 1e-8
_COLLINEAR_TOL = 1e-9


class ProjectionMode(str, Enum):
    FULL3D = "Full3D"
    ORTHO2D = "Orthographic2D"


@dataclass(frozen=True)
class Projection:
    mode: ProjectionMode = ProjectionMode.FULL3D

    def __post_init__(self):
        object.__setattr__(self, "mode", ProjectionMode(self.mode))

    @property
    def matrix(self) -> np.ndarray:
        if self.mode is ProjectionMode.FULL3D:
            return np.eye(3)
        return np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

    @property
    def min_anchors(self) -> int:
        return 3 if self.mode is ProjectionMode.FULL3D else 4


FULL3D = Projection(ProjectionMode.FULL3D)
ORTHO2D = Projection(ProjectionMode.ORTHO2D)


@dataclass(frozen=True, eq=False)
class AnchorCorrespondence:
    """Ordered eyeglass anchors (N, 3) and face anchors (N, 3) or (N, 2).

    2-column face anchors are image-plane points and only make sense with
    the orthographic projection.
    """

    glass: np.ndarray
    face: np.ndarray

    def __post_init__(self):
        g = np.array(self.glass, dtype=np.float64)
        q = np.array(self.face, dtype=np.float64)
        if g.ndim != 2 or g.shape[1] != 3:
            raise InvalidArgument("glass anchors must be an (N, 3) array")
        if q.ndim != 2 or q.shape[1] not in (2, 3):
            raise InvalidArgument("face anchors must be an (N, 3) or (N, 2) array")
        if len(g) != len(q):
            raise InvalidArgument(f"anchor count mismatch: {len(g)} glass vs {len(q)} face")
        if len(g) < 3:
            raise DegenerateConfigurationError("at least 3 anchor pairs are required")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(q))):
            raise InvalidArgument("anchors must be finite")
        for side, pts in (("glass", g), ("face", q)):
            s = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
            if s[0] == 0 or s[1] <= _COLLINEAR_TOL * s[0]:
                raise DegenerateConfigurationError(f"{side} anchors are collinear")
        g.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "glass", g)
        object.__setattr__(self, "face", q)

    @classmethod
    def from_meshes(cls, glass_mesh, face_mesh):
        return cls(glass_mesh.anchors, face_mesh.anchors)


@dataclass(frozen=True, eq=False)
class FitResult:
    sim: RigidSimilarity
    residual: float
    mode: ProjectionMode = ProjectionMode.FULL3D
    converged: bool = True
    iterations: int = 0
    warnings: tuple = field(default_factory=tuple)

    _KEYS = ("f", "alpha", "beta", "gamma", "tx", "ty", "tz", "residual")

    def to_record(self) -> str:
        """Plain-text ``key=value`` record, one field per token."""
        a = euler_from_rotation(self.sim.R)
        vals = (self.sim.f, a.pitch, a.yaw, a.roll, *self.sim.t3d, self.residual)
        return " ".join(f"{k}={float(v)!r}" for k, v in zip(self._KEYS, vals))

    @classmethod
    def from_record(cls, text: str) -> "FitResult":
        try:
            kv = dict(tok.split("=", 1) for tok in text.split())
            vals = {k: float(kv[k]) for k in cls._KEYS}
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad fit record: {exc}") from exc
        sim = RigidSimilarity.from_euler(
            vals["f"], (vals["alpha"], vals["beta"], vals["gamma"]),
            (vals["tx"], vals["ty"], vals["tz"]))
        return cls(sim, vals["residual"])


def _face_target(corr: AnchorCorrespondence, proj: Projection) -> np.ndarray:
    q = corr.face
    if proj.mode is ProjectionMode.FULL3D:
        if q.shape[1] != 3:
            raise InvalidArgument("Full3D fitting needs 3D face anchors")
        return q
    return q[:, :2]


def fit_residual(corr: AnchorCorrespondence, proj: Projection, sim: RigidSimilarity) -> float:
    """Root-mean-square anchor distance under ``sim``."""
    q = _face_target(corr, proj)
    p = transform_points(corr.glass, sim)
    if proj.mode is ProjectionMode.ORTHO2D:
        p = p[:, :2]
    return math.sqrt(float(np.mean(np.sum((p - q) ** 2, axis=1))))


def similarity_align(src, dst):
    """Closed-form least-squares ``dst ~ f * R @ src + t`` (Umeyama).

    Works in any dimension; a reflection in the optimal orthogonal factor is
    replaced by the best proper rotation.  Returns (f, R, t).
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    n, m = src.shape
    mu_s, mu_d = src.mean(axis=0), dst.mean(axis=0)
    xs, xd = src - mu_s, dst - mu_d
    cov = xd.T @ xs / n
    U, D, Vt = np.linalg.svd(cov)
    S = np.ones(m)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        S[-1] = -1.0
    R = (U * S) @ Vt
    var_s = np.sum(xs ** 2) / n
    f = float(np.dot(D, S) / var_s)
    if not f > 0:
        raise DegenerateConfigurationError("face anchors do not determine a positive scale")
    t = mu_d - f * R @ mu_s
    return f, R, t


def _fit_full3d(corr):
    f, R, t = similarity_align(corr.glass, corr.face)
    # guard the orthonormality check in RigidSimilarity against SVD round-off
    U, _, Vt = np.linalg.svd(R)
    sim = from_post_translation(f, U @ Vt, t)
    return FitResult(sim, fit_residual(corr, FULL3D, sim), ProjectionMode.FULL3D)


def _ortho_residuals(theta, g, q):
    f, a, b, c, ux, uy = theta
    R = _rz(c) @ _ry(b) @ _rx(a)
    return (f * (g @ R.T))[:, :2] + np.array([ux, uy]) - q


def _ortho_jacobian(theta, g):
    f, a, b, c = theta[:4]
    Rx, Ry, Rz = _rx(a), _ry(b), _rz(c)
    ca, sa, cb, sb, cc, sc = (math.cos(a), math.sin(a), math.cos(b), math.sin(b),
                              math.cos(c), math.sin(c))
    dRx = np.array([[0.0, 0.0, 0.0], [0.0, -sa, -ca], [0.0, ca, -sa]])
    dRy = np.array([[-sb, 0.0, cb], [0.0, 0.0, 0.0], [-cb, 0.0, -sb]])
    dRz = np.array([[-sc, -cc, 0.0], [cc, -sc, 0.0], [0.0, 0.0, 0.0]])
    R = Rz @ Ry @ Rx
    cols = [
        (g @ R.T)[:, :2],
        f * (g @ (Rz @ Ry @ dRx).T)[:, :2],
        f * (g @ (Rz @ dRy @ Rx).T)[:, :2],
        f * (g @ (dRz @ Ry @ Rx).T)[:, :2],
    ]
    n = len(g)
    J = np.zeros((2 * n, 6))
    for k, col in enumerate(cols):
        J[:, k] = col.reshape(-1)
    J[0::2, 4] = 1.0
    J[1::2, 5] = 1.0
    return J


def _gauss_newton(theta, g, q):
    r = _ortho_residuals(theta, g, q).reshape(-1)
    cost = r @ r
    step_norm = math.inf
    it = 0
    for it in range(1, MAX_GN_ITERS + 1):
        J = _ortho_jacobian(theta, g)
        delta = np.linalg.lstsq(J, -r, rcond=1e-10)[0]
        step = 1.0
        accepted = False
        while step >= 1e-6:
            cand = theta + step * delta
            if cand[0] > 0:
                r_new = _ortho_residuals(cand, g, q).reshape(-1)
                if r_new @ r_new <= cost:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            # no descent along the GN direction: at a minimum up to round-off
            step_norm = 0.0 if np.linalg.norm(delta) < 1e-6 else float(np.linalg.norm(delta))
            break
        step_norm = float(np.linalg.norm(step * delta))
        theta, r, cost = cand, r_new, r_new @ r_new
        if step_norm <= GN_STEP_TOL:
            break
    return theta, cost, it, step_norm <= GN_STEP_TOL


def _fit_ortho2d(corr):
    g = corr.glass
    q = corr.face[:, :2]
    starts = []
    f2, R2, t2 = similarity_align(g[:, :2], q)
    starts.append(np.array([f2, 0.0, 0.0, math.atan2(R2[1, 0], R2[0, 0]), *t2]))
    if corr.face.shape[1] == 3:
        f3, R3, t3 = similarity_align(g, corr.face)
        U, _, Vt = np.linalg.svd(R3)
        a = euler_from_rotation(U @ Vt)
        starts.append(np.array([f3, *np.radians(a.as_tuple()), *t3[:2]]))

    best = None
    for theta0 in starts:
        out = _gauss_newton(theta0, g, q)
        if best is None or out[1] < best[1]:
            best = out
    theta, _, iters, converged = best

    f, a, b, c, ux, uy = theta
    R = _rz(c) @ _ry(b) @ _rx(a)
    # depth is unobservable under orthographic projection: take the
    # least-squares offset when face anchors carry depth, else zero
    w = 0.0
    if corr.face.shape[1] == 3:
        w = float(np.mean(corr.face[:, 2] - f * (g @ R.T)[:, 2])) / f
    t3d = R.T @ np.array([ux / f, uy / f, w])
    sim = RigidSimilarity(f, R, t3d)
    warn = () if converged else (
        f"Gauss-Newton did not converge within {MAX_GN_ITERS} iterations",)
    return FitResult(sim, fit_residual(corr, ORTHO2D, sim), ProjectionMode.ORTHO2D,
                     converged, iters, warn)


def fit_eyeglass(corr: AnchorCorrespondence, proj: Projection = FULL3D) -> FitResult:
    """Best similarity placing the eyeglass anchors onto the face anchors."""
    if len(corr.glass) < proj.min_anchors:
        raise DegenerateConfigurationError(
            f"{proj.mode.value} fitting needs >= {proj.min_anchors} anchor pairs, got {len(corr.glass)}")
    if proj.mode is ProjectionMode.FULL3D:
        return _fit_full3d(corr)
    return _fit_ortho2d(corr)


def fit_meshes(glass_mesh, face_mesh, proj: Projection = FULL3D) -> FitResult:
    return fit_eyeglass(AnchorCorrespondence.from_meshes(glass_mesh, face_mesh), proj)


__all__ = [
    "AnchorCorrespondence", "FitResult", "Projection", "ProjectionMode", "FULL3D", "ORTHO2D",
    "fit_eyeglass", "fit_residual", "fit_meshes", "similarity_align", "rotation_from_euler",
]
