"""Core 3D types: meshes, Euler rotations, similarity transforms, normals.

Conventions used throughout the package:

* Rotations are ``R = Rz(roll) @ Ry(yaw) @ Rx(pitch)``.
* Angles are degrees at the API boundary, radians internally.
* A similarity maps ``p -> f * R @ (p + t3d)``; the translation is applied
  *before* rotation and scaling.  :func:`to_post_translation` and
  :func:`from_post_translation` convert to/from the ``f * R @ p + t`` form.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConfigurationError, GimbalLockWarning, InvalidArgument

GIMBAL_LIMIT_DEG = 89.9
ISOLATED_NORMAL = (0.0, 0.0, 1.0)


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def normalize_angle(deg: float) -> float:
    """Wrap an angle in degrees into (-180, 180]."""
    out = math.fmod(deg, 360.0)
    if out <= -180.0:
        out += 360.0
    elif out > 180.0:
        out -= 360.0
    return out


@dataclass(frozen=True)
class Material:
    """Surface color (RGB in [0, 1]) and per-term Phong coefficients."""

    color: tuple = (0.05, 0.05, 0.05)
    ambient: float = 1.0
    diffuse: float = 1.0
    specular: float = 1.0

    def __post_init__(self):
        if len(self.color) != 3 or not all(0.0 <= c <= 1.0 for c in self.color):
            raise InvalidArgument(f"material color must be 3 values in [0, 1], got {self.color}")
        object.__setattr__(self, "color", tuple(float(c) for c in self.color))


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangle mesh with ordered anchor vertices.

    ``vertices`` is (N, 3) float64, ``triangles`` is (M, 3) int64, and
    ``anchor_indices`` are 0-based vertex indices whose order defines the
    correspondence with another mesh's anchors.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    anchor_indices: tuple
    material: Material = field(default_factory=Material)

    def __post_init__(self):
        v = _frozen(self.vertices).reshape(-1, 3)
        t = _frozen(self.triangles, np.int64).reshape(-1, 3)
        a = tuple(int(i) for i in self.anchor_indices)
        n = len(v)
        if not np.all(np.isfinite(v)):
            raise InvalidArgument("mesh vertices must be finite")
        if t.size and (t.min() < 0 or t.max() >= n):
            raise InvalidArgument(f"triangle index out of range for {n} vertices")
        if not a:
            raise InvalidArgument("mesh needs at least one anchor index")
        if min(a) < 0 or max(a) >= n:
            raise InvalidArgument(f"anchor index out of range for {n} vertices")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "anchor_indices", a)

    @property
    def anchors(self) -> np.ndarray:
        return self.vertices[list(self.anchor_indices)]

    def with_vertices(self, vertices) -> "Mesh":
        return Mesh(vertices, self.triangles, self.anchor_indices, self.material)


@dataclass(frozen=True)
class EulerAngles:
    """pitch (about x), yaw (about y), roll (about z), in degrees."""

    pitch: float = 0.0
    yaw: float = 0.0
    roll: float = 0.0

    def __post_init__(self):
        vals = (self.pitch, self.yaw, self.roll)
        if not all(math.isfinite(x) for x in vals):
            raise InvalidArgument(f"Euler angles must be finite, got {vals}")
        for name, x in zip(("pitch", "yaw", "roll"), vals):
            object.__setattr__(self, name, normalize_angle(float(x)))

    def as_tuple(self):
        return (self.pitch, self.yaw, self.roll)


def _rx(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _ry(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rz(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_from_euler(angles) -> np.ndarray:
    """Rotation matrix ``Rz(roll) @ Ry(yaw) @ Rx(pitch)``.

    ``angles`` may be an :class:`EulerAngles` or a (pitch, yaw, roll) triple
    in degrees.
    """
    if not isinstance(angles, EulerAngles):
        angles = EulerAngles(*angles)
    a, b, g = (math.radians(x) for x in angles.as_tuple())
    return _rz(g) @ _ry(b) @ _rx(a)


def rotation_x(deg: float) -> np.ndarray:
    return _rx(math.radians(deg))


def euler_from_rotation(R) -> EulerAngles:
    """Inverse of :func:`rotation_from_euler`.

    At gimbal lock (|yaw| >= 89.9 deg) the roll is fixed to 0, the pitch
    absorbs the remaining rotation, and a :class:`GimbalLockWarning` is
    emitted.
    """
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise InvalidArgument("expected a finite 3x3 rotation matrix")
    yaw = math.atan2(-R[2, 0], math.hypot(R[0, 0], R[1, 0]))
    if abs(math.degrees(yaw)) >= GIMBAL_LIMIT_DEG:
        warnings.warn(f"gimbal lock at yaw={math.degrees(yaw):.4f} deg; roll set to 0",
                      GimbalLockWarning, stacklevel=2)
        pitch = math.atan2(-R[1, 2], R[1, 1])
        roll = 0.0
    else:
        pitch = math.atan2(R[2, 1], R[2, 2])
        roll = math.atan2(R[1, 0], R[0, 0])
    return EulerAngles(math.degrees(pitch), math.degrees(yaw), math.degrees(roll))


@dataclass(frozen=True, eq=False)
class RigidSimilarity:
    """``p -> f * R @ (p + t3d)`` with f > 0 and R a proper rotation."""

    f: float = 1.0
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    t3d: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = _frozen(self.R)
        t = _frozen(self.t3d).reshape(-1)
        f = float(self.f)
        if not (math.isfinite(f) and f > 0):
            raise InvalidArgument(f"scale must be positive and finite, got {f}")
        if R.shape != (3, 3) or t.shape != (3,):
            raise InvalidArgument("R must be 3x3 and t3d a 3-vector")
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise InvalidArgument("similarity parameters must be finite")
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9 or abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise InvalidArgument("R is not a proper rotation")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t3d", t)

    @classmethod
    def from_euler(cls, f, angles, t3d=(0.0, 0.0, 0.0)):
        return cls(f, rotation_from_euler(angles), t3d)

    @property
    def angles(self) -> EulerAngles:
        return euler_from_rotation(self.R)


def transform_points(points, sim: RigidSimilarity) -> np.ndarray:
    """Apply ``f * R @ (p + t3d)`` to each row of ``points``."""
    p = np.asarray(points, dtype=np.float64)
    return sim.f * ((p + sim.t3d) @ sim.R.T)


def to_post_translation(sim: RigidSimilarity):
    """Return (f, R, t) such that the same map reads ``f * R @ p + t``."""
    return sim.f, sim.R.copy(), sim.f * (sim.R @ sim.t3d)


def from_post_translation(f, R, t) -> RigidSimilarity:
    R = np.asarray(R, dtype=np.float64)
    return RigidSimilarity(f, R, R.T @ np.asarray(t, dtype=np.float64) / f)


def face_normals(vertices, triangles) -> np.ndarray:
    """Unnormalized face normals; their length is twice the triangle area."""
    v = np.asarray(vertices, dtype=np.float64)
    t = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    return np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])


def vertex_normals(mesh) -> np.ndarray:
    """Area-weighted unit vertex normals.

    Vertices touched by no (non-degenerate) triangle get ``(0, 0, 1)``.
    Accepts a :class:`Mesh` or a ``(vertices, triangles)`` pair.
    """
    if isinstance(mesh, Mesh):
        v, t = mesh.vertices, mesh.triangles
    else:
        v, t = mesh
        v = np.asarray(v, dtype=np.float64)
        t = np.asarray(t, dtype=np.int64).reshape(-1, 3)
    if len(t) == 0:
        raise InvalidArgument("mesh has no triangles")
    fn = face_normals(v, t)
    if not np.any(np.linalg.norm(fn, axis=1) > 0):
        raise DegenerateConfigurationError("every triangle in the mesh has zero area")
    acc = np.zeros_like(v)
    for k in range(3):
        np.add.at(acc, t[:, k], fn)
    norms = np.linalg.norm(acc, axis=1)
    out = np.tile(np.array(ISOLATED_NORMAL), (len(v), 1))
    ok = norms > 0
    out[ok] = acc[ok] / norms[ok, None]
    return out
