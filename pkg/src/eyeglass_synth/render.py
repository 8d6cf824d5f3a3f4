"""Software rasterizer with a z-buffer and Phong shading.

Camera space is orthographic: x to the right and y downward in pixel units,
z is depth (smaller is nearer).  Pixel (col, row) is sampled at its center
``(col + 0.5, row + 0.5)``.  A triangle faces the camera when its normal
``(v1 - v0) x (v2 - v0)`` has negative z.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCoverageWarning, InvalidArgument
from .geometry import Mesh, RigidSimilarity, face_normals, transform_points, vertex_normals

UNIT_TOL = 1e-6
VIEW_DIR = (0.0, 0.0, -1.0)


@dataclass(frozen=True, eq=False)
class RasterImage:
    """8-bit image stored as an (height, width, channels) uint8 array."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data)
        if d.dtype != np.uint8:
            raise InvalidArgument(f"RasterImage needs uint8 data, got {d.dtype}")
        if d.ndim != 3 or d.shape[2] not in (3, 4) or d.shape[0] < 1 or d.shape[1] < 1:
            raise InvalidArgument(f"RasterImage shape must be (H>=1, W>=1, 3|4), got {d.shape}")
        object.__setattr__(self, "data", d)

    @classmethod
    def blank(cls, width, height, channels=3, fill=0):
        return cls(np.full((height, width, channels), fill, dtype=np.uint8))

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return self.data.shape[2]

    def tobytes(self) -> bytes:
        return np.ascontiguousarray(self.data).tobytes()

    def __eq__(self, other):
        return isinstance(other, RasterImage) and self.data.shape == other.data.shape \
            and np.array_equal(self.data, other.data)


@dataclass(frozen=True)
class DirectionalLight:
    direction: tuple
    diffuse: float
    specular: float

    def __post_init__(self):
        d = tuple(float(x) for x in self.direction)
        if len(d) != 3 or abs(math.sqrt(sum(x * x for x in d)) - 1.0) > 1e-9:
            raise InvalidArgument(f"light direction must be a unit 3-vector, got {d}")
        for name in ("diffuse", "specular"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidArgument(f"{name} energy must lie in [0, 1]")
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class LightSetup:
    """Ambient term plus directional lights.

    ``direction`` points from the surface toward the light.
    """

    ambient: float = 0.3
    lights: tuple = field(default_factory=lambda: (DirectionalLight(VIEW_DIR, 0.6, 0.2),))
    shininess: float = 16.0

    def __post_init__(self):
        if not 0.0 <= self.ambient <= 1.0:
            raise InvalidArgument("ambient energy must lie in [0, 1]")
        if not self.shininess > 0:
            raise InvalidArgument("shininess must be positive")
        object.__setattr__(self, "lights", tuple(self.lights))


@dataclass(eq=False)
class FragmentBuffer:
    """Per-pixel nearest fragment.

    ``triangle`` holds the winning triangle index or -1; uncovered pixels
    keep ``depth == inf``.
    """

    depth: np.ndarray
    normal: np.ndarray
    triangle: np.ndarray

    @classmethod
    def empty(cls, width, height):
        return cls(np.full((height, width), np.inf),
                   np.zeros((height, width, 3)),
                   np.full((height, width), -1, dtype=np.int64))

    @property
    def covered(self) -> np.ndarray:
        return self.triangle >= 0


def _check_viewport(width, height):
    if int(width) < 1 or int(height) < 1:
        raise InvalidArgument(f"viewport must be at least 1x1, got {width}x{height}")


def rasterize(vertices, triangles, width, height, normals=None, *,
              cull_backfaces=True, depth_init=None) -> FragmentBuffer:
    """Z-buffer rasterization of camera-space triangles.

    Depth test is strict less-than, so on ties the earlier triangle wins.
    Shared edges follow the top-left fill rule.  ``depth_init`` pre-loads the
    depth buffer (e.g. an occluder) without marking pixels covered.
    ``normals`` are per-vertex; when omitted the face normal is used.
    """
    _check_viewport(width, height)
    width, height = int(width), int(height)
    buf = FragmentBuffer.empty(width, height)
    v = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    tris = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    if depth_init is not None:
        buf.depth[...] = depth_init
    if len(tris) == 0:
        return buf
    fn = face_normals(v, tris)
    xs = np.arange(width) + 0.5
    ys = np.arange(height) + 0.5

    for k, (i0, i1, i2) in enumerate(tris):
        p = [v[i0], v[i1], v[i2]]
        idx = [i0, i1, i2]
        area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0])
        if area2 == 0 or (cull_backfaces and area2 > 0):
            continue
        if area2 < 0:
            p[1], p[2] = p[2], p[1]
            idx[1], idx[2] = idx[2], idx[1]
            area2 = -area2
        x_lo = max(0, math.ceil(min(q[0] for q in p) - 0.5))
        x_hi = min(width - 1, math.floor(max(q[0] for q in p) - 0.5))
        y_lo = max(0, math.ceil(min(q[1] for q in p) - 0.5))
        y_hi = min(height - 1, math.floor(max(q[1] for q in p) - 0.5))
        if x_lo > x_hi or y_lo > y_hi:
            continue
        px = xs[x_lo:x_hi + 1][None, :]
        py = ys[y_lo:y_hi + 1][:, None]

        inside = np.ones((y_hi - y_lo + 1, x_hi - x_lo + 1), dtype=bool)
        w = []
        # edge e is opposite vertex e; its function is positive inside
        for e in range(3):
            a, b = p[(e + 1) % 3], p[(e + 2) % 3]
            dx, dy = b[0] - a[0], b[1] - a[1]
            E = dx * (py - a[1]) - dy * (px - a[0])
            top_left = dy < 0 or (dy == 0 and dx > 0)
            inside &= (E > 0) | ((E == 0) & top_left)
            w.append(E)
        if not inside.any():
            continue
        b0, b1, b2 = (wi / area2 for wi in w)
        z = b0 * p[0][2] + b1 * p[1][2] + b2 * p[2][2]
        region = (slice(y_lo, y_hi + 1), slice(x_lo, x_hi + 1))
        win = inside & (z < buf.depth[region])
        if not win.any():
            continue
        buf.depth[region][win] = z[win]
        buf.triangle[region][win] = k
        if normals is None:
            buf.normal[region][win] = fn[k] / np.linalg.norm(fn[k])
        else:
            nv = np.asarray(normals)[idx]
            nrm = (b0[..., None] * nv[0] + b1[..., None] * nv[1] + b2[..., None] * nv[2])[win]
            lens = np.linalg.norm(nrm, axis=1)
            fallback = fn[k] / np.linalg.norm(fn[k])
            bad = lens < 1e-12
            nrm[~bad] /= lens[~bad, None]
            nrm[bad] = fallback
            buf.normal[region][win] = nrm
    return buf


def _dot3(a, b):
    return a[..., 0] * b[0] + a[..., 1] * b[1] + a[..., 2] * b[2]


def shade_phong_many(normals, view_dir, lights: LightSetup, color, coeffs=(1.0, 1.0, 1.0)):
    """Vectorized Phong over (..., 3) normals; returns floats in [0, 1].

    ``color * clamp(ka*ambient + kd*sum diffuse*max(0, N.L))
    + ks*sum specular*max(0, R.V)**shininess``, clamped per channel.
    """
    n = np.asarray(normals, dtype=np.float64)
    view = np.asarray(view_dir, dtype=np.float64)
    ka, kd, ks = coeffs
    diff = np.full(n.shape[:-1], ka * lights.ambient)
    spec = np.zeros(n.shape[:-1])
    for light in lights.lights:
        L = np.asarray(light.direction)
        ndl = _dot3(n, L)
        diff = diff + kd * light.diffuse * np.maximum(0.0, ndl)
        # reflection of -L about N
        refl = 2.0 * ndl[..., None] * n - L
        rdv = np.maximum(0.0, _dot3(refl, view))
        spec = spec + ks * light.specular * rdv ** lights.shininess
    base = np.clip(diff, 0.0, 1.0)[..., None] * np.asarray(color, dtype=np.float64)
    return np.clip(base + spec[..., None], 0.0, 1.0)


def _require_unit(vec, what):
    if abs(float(np.linalg.norm(vec)) - 1.0) > UNIT_TOL:
        raise InvalidArgument(f"{what} must be unit length")


def shade_phong(normal, view_dir, lights: LightSetup, color, coeffs=(1.0, 1.0, 1.0)) -> np.ndarray:
    """Phong color of a single surface point, RGB floats in [0, 1]."""
    normal = np.asarray(normal, dtype=np.float64)
    view_dir = np.asarray(view_dir, dtype=np.float64)
    _require_unit(normal, "normal")
    _require_unit(view_dir, "view direction")
    return shade_phong_many(normal[None, :], view_dir, lights, color, coeffs)[0]


def quantize(values) -> np.ndarray:
    """[0, 1] floats -> uint8, rounding half away from zero."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0) * 255.0
    return np.floor(v + 0.5).astype(np.uint8)


def _shade_buffer(buf, lights, material):
    cov = buf.covered
    rgb = np.zeros(buf.depth.shape + (3,))
    coeffs = (material.ambient, material.diffuse, material.specular)
    rgb[cov] = shade_phong_many(buf.normal[cov], VIEW_DIR, lights, material.color, coeffs)
    return rgb, cov


def render_layer(mesh: Mesh, sim: RigidSimilarity, lights: LightSetup, width, height, *,
                 antialias=False, cull_backfaces=True, occluder=None):
    """Render ``mesh`` placed by ``sim`` into an RGBA layer and coverage mask.

    ``occluder`` is an optional camera-space ``(vertices, triangles)`` pair
    whose depth hides the mesh without being drawn.  With ``antialias`` the
    scene is sampled at 2x2 sub-pixels and alpha reflects partial coverage.
    """
    _check_viewport(width, height)
    width, height = int(width), int(height)
    verts = transform_points(mesh.vertices, sim)
    normals = vertex_normals((verts, mesh.triangles)) if len(mesh.triangles) else None
    s = 2 if antialias else 1
    sv = verts * np.array([s, s, 1.0])
    depth0 = None
    if occluder is not None:
        ov = np.asarray(occluder[0], dtype=np.float64) * np.array([s, s, 1.0])
        depth0 = rasterize(ov, occluder[1], width * s, height * s,
                           cull_backfaces=cull_backfaces).depth
    buf = rasterize(sv, mesh.triangles, width * s, height * s, normals,
                    cull_backfaces=cull_backfaces, depth_init=depth0)
    rgb, cov = _shade_buffer(buf, lights, mesh.material)

    layer = np.zeros((height, width, 4), dtype=np.uint8)
    if s == 1:
        layer[..., :3] = np.where(cov[..., None], quantize(rgb), 0)
        layer[..., 3] = np.where(cov, 255, 0)
    else:
        cnt = cov.reshape(height, 2, width, 2).sum(axis=(1, 3))
        acc = rgb.reshape(height, 2, width, 2, 3).sum(axis=(1, 3))
        mean = np.where(cnt[..., None] > 0, acc / np.maximum(cnt, 1)[..., None], 0.0)
        layer[..., :3] = np.where(cnt[..., None] > 0, quantize(mean), 0)
        layer[..., 3] = np.floor(cnt * 255.0 / 4.0 + 0.5).astype(np.uint8)
    mask = layer[..., 3] > 0
    if not mask.any():
        warnings.warn("eyeglass layer has no visible pixels", EmptyCoverageWarning, stacklevel=2)
    return RasterImage(layer), mask
