"""Procedural eyeglass frames and a synthetic face fixture.

Frames are built in millimetres with x to the wearer's left-to-right in the
image, y downward and z pointing away from the camera, so the front of the
frame sits at z = 0 and the temples run toward +z.  Every frame carries the
same five anchors, stored as isolated vertices:

    0 left temple tip, 1 right temple tip, 2 left lens center,
    3 right lens center, 4 nose-bridge midpoint
"""
from __future__ import annotations

import math

import numpy as np

from .geometry import Material, Mesh, RigidSimilarity, transform_points
from .render import LightSetup, RasterImage, quantize, render_layer

ANCHOR_NAMES = ("left_temple_tip", "right_temple_tip", "left_lens_center",
                "right_lens_center", "nose_bridge")

LENS_X = 28.0
TEMPLE_TIP = (74.0, 6.0, 54.0)
BRIDGE_Z = -2.6
FRAME_DEPTH = 3.0
BLACK_FRAME = Material((0.04, 0.04, 0.045), ambient=1.0, diffuse=1.0, specular=1.0)

# name -> (half width, half height, superellipse exponent, top rim, bottom rim)
FRAME_STYLES = {
    "rectangular": (24.0, 16.0, 6.0, 3.5, 3.5),
    "rounded": (22.0, 18.0, 2.0, 3.0, 3.0),
    "browline": (24.0, 17.0, 4.0, 6.0, 1.5),
    "oversized": (26.5, 21.0, 4.0, 4.0, 4.0),
}


class _Builder:
    def __init__(self):
        self.verts = []
        self.tris = []

    def add(self, pts):
        base = len(self.verts)
        self.verts.extend(np.asarray(pts, dtype=np.float64).reshape(-1, 3).tolist())
        return base

    def tri(self, a, b, c, outward):
        v = np.array(self.verts)
        n = np.cross(v[b] - v[a], v[c] - v[a])
        if np.dot(n, outward) < 0:
            b, c = c, b
        self.tris.append((a, b, c))

    def quad(self, a, b, c, d, outward):
        self.tri(a, b, c, outward)
        self.tri(a, c, d, outward)

    def strip(self, ring0, ring1, outward_fn, closed=True):
        """Quads between two equally sized point rings."""
        n = len(ring0)
        i0 = self.add(ring0)
        i1 = self.add(ring1)
        for k in range(n if closed else n - 1):
            k2 = (k + 1) % n
            mid = (np.asarray(ring0[k]) + np.asarray(ring1[k2])) / 2.0
            self.quad(i0 + k, i0 + k2, i1 + k2, i1 + k, outward_fn(k, mid))

    def box(self, p0, p1, half_w, half_h):
        """Rectangular beam from p0 to p1 (cross-section in the beam frame)."""
        p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
        axis = p1 - p0
        axis /= np.linalg.norm(axis)
        up = np.array([0.0, 1.0, 0.0])
        side = np.cross(axis, up)
        side /= np.linalg.norm(side)
        up = np.cross(side, axis)
        corners = []
        for p in (p0, p1):
            for sx, sy in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
                corners.append(p + sx * half_w * side + sy * half_h * up)
        center = (p0 + p1) / 2.0
        faces = [(0, 1, 2, 3), (4, 5, 6, 7), (0, 1, 5, 4), (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7)]
        for f in faces:
            pts = [corners[i] for i in f]
            base = self.add(pts)
            out = np.mean(pts, axis=0) - center
            self.quad(base, base + 1, base + 2, base + 3, out)

    def mesh(self, anchors, material):
        anchor_start = self.add(anchors)
        return Mesh(np.array(self.verts), np.array(self.tris, dtype=np.int64),
                    list(range(anchor_start, anchor_start + len(anchors))), material)


def _contour(cx, hw, hh, expo, n):
    t = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    c, s = np.cos(t), np.sin(t)
    x = hw * np.sign(c) * np.abs(c) ** (2.0 / expo)
    y = hh * np.sign(s) * np.abs(s) ** (2.0 / expo)
    return cx + x, y, t


def glass_anchor_points():
    tx, ty, tz = TEMPLE_TIP
    return np.array([
        [-tx, ty, tz], [tx, ty, tz],
        [-LENS_X, 0.0, 0.0], [LENS_X, 0.0, 0.0],
        [0.0, 0.0, BRIDGE_Z],
    ])


def make_eyeglass(style: str = "rectangular", segments: int = 48, material=BLACK_FRAME) -> Mesh:
    """Thick frame mesh: two rims, a bridge and two temples."""
    hw, hh, expo, top, bottom = FRAME_STYLES[style]
    b = _Builder()
    for side in (-1.0, 1.0):
        cx = side * LENS_X
        ox, oy, t = _contour(cx, hw, hh, expo, segments)
        rim = np.where(np.sin(t) < 0, top, bottom) * np.abs(np.sin(t)) \
            + 0.5 * (top + bottom) * (1 - np.abs(np.sin(t)))
        scale = 1.0 - rim / np.hypot(ox - cx, oy).clip(1e-9)
        ix, iy = cx + (ox - cx) * scale, oy * scale
        outer_f = np.stack([ox, oy, np.zeros_like(ox)], 1)
        inner_f = np.stack([ix, iy, np.zeros_like(ix)], 1)
        outer_b = outer_f + [0.0, 0.0, FRAME_DEPTH]
        inner_b = inner_f + [0.0, 0.0, FRAME_DEPTH]
        radial = lambda k, mid, cx=cx: np.array([mid[0] - cx, mid[1], 0.0])
        b.strip(outer_f, inner_f, lambda k, mid: np.array([0.0, 0.0, -1.0]))
        b.strip(outer_b, inner_b, lambda k, mid: np.array([0.0, 0.0, 1.0]))
        b.strip(outer_f, outer_b, radial)
        b.strip(inner_f, inner_b, lambda k, mid, r=radial: -r(k, mid))
        # temple hinge at the outer upper corner of the rim
        hinge = np.array([side * (LENS_X + hw - 1.0), -0.45 * hh, FRAME_DEPTH])
        tip = np.array([side * TEMPLE_TIP[0], TEMPLE_TIP[1], TEMPLE_TIP[2]])
        b.box(hinge - [side * 1.5, 0.0, 0.5], tip, 1.0, 2.0)
    gap = LENS_X - hw
    b.box([-gap - 2.0, -0.4 * hh, 1.0], [gap + 2.0, -0.4 * hh, 1.0], 1.2, 2.0)
    return b.mesh(glass_anchor_points(), material)


def eyeglass_assets():
    """The four stock frames, in a fixed order."""
    return tuple(make_eyeglass(name) for name in FRAME_STYLES)


# -- demo face ------------------------------------------------------------

SKIN = Material((0.86, 0.68, 0.56), ambient=1.0, diffuse=1.0, specular=0.15)


def make_face(width=120, height=120, roll_deg=0.0, rings=24, sectors=48) -> Mesh:
    """Front half of an ellipsoidal head already posed in camera space.

    Anchors are isolated vertices placed where the frame anchors should land.
    A nonzero ``roll_deg`` tilts the whole head in the image plane.
    """
    s = width / 120.0
    center = np.array([width / 2.0, height / 2.0, 100.0 * s])
    radii = np.array([36.0, 46.0, 30.0]) * s
    verts = []
    for i in range(rings + 1):
        theta = math.pi / 2.0 * i / rings        # 0 at the nose tip
        for j in range(sectors):
            phi = 2.0 * math.pi * j / sectors
            d = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi),
                          -math.cos(theta)])
            verts.append(center + radii * d)
    tris = []
    for i in range(rings):
        for j in range(sectors):
            j2 = (j + 1) % sectors
            a, b_, c, d = i * sectors + j, i * sectors + j2, (i + 1) * sectors + j2, (i + 1) * sectors + j
            tris += [(a, b_, c), (a, c, d)]
    verts = np.array(verts)
    tris = np.array(tris, dtype=np.int64)
    # orient toward the camera (negative z normals)
    n = np.cross(verts[tris[:, 1]] - verts[tris[:, 0]], verts[tris[:, 2]] - verts[tris[:, 0]])
    flip = n[:, 2] > 0
    tris[flip] = tris[flip][:, [0, 2, 1]]

    f = 0.5 * s
    anchors = transform_points(glass_anchor_points(), RigidSimilarity(
        f, np.eye(3), (center - [0.0, 8.0 * s, 32.2 * s]) / f))
    mesh_v = np.vstack([verts, anchors])
    if roll_deg:
        c, sn = math.cos(math.radians(roll_deg)), math.sin(math.radians(roll_deg))
        rot = np.array([[c, -sn, 0.0], [sn, c, 0.0], [0.0, 0.0, 1.0]])
        mesh_v = (mesh_v - center) @ rot.T + center
    return Mesh(mesh_v, tris, list(range(len(verts), len(verts) + 5)), SKIN)


def render_face_image(face: Mesh, width=120, height=120, background=(96, 104, 112)) -> RasterImage:
    """Shade the face mesh over a flat background, with dark eye spots."""
    lights = LightSetup(0.35)
    layer, mask = render_layer(face, RigidSimilarity(), lights, width, height)
    out = np.empty((height, width, 3), dtype=np.uint8)
    out[...] = np.asarray(background, dtype=np.uint8)
    out[mask] = layer.data[..., :3][mask]
    eyes = face.anchors[2:4]
    yy, xx = np.mgrid[0:height, 0:width] + 0.5
    r = 3.0 * width / 120.0
    for ex, ey, _ in eyes:
        spot = (xx - ex) ** 2 + ((yy - ey) * 1.6) ** 2 <= r * r
        out[spot & mask] = quantize(np.array([0.18, 0.12, 0.10]))
    return RasterImage(out)


def write_demo_faces(out_dir, identities=3, per_identity=2, seed=0, size=120):
    """Write a small face set usable by the ``synth`` command.

    Creates ``images/<stem>.ppm``, ``meshes/<stem>.obj`` (+ ``.anchors``) and
    ``faces.tsv`` under ``out_dir``; identities differ in head roll and
    background.  Returns the manifest path.
    """
    from pathlib import Path

    from . import io
    from .manifest import NO_GLASS, Manifest, ManifestRecord

    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "meshes").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    records = []
    for i in range(identities):
        background = tuple(int(x) for x in rng.integers(40, 200, 3))
        for k in range(per_identity):
            stem = f"id{i:03d}_{k:02d}"
            face = make_face(size, size, roll_deg=float(rng.uniform(-8.0, 8.0)))
            io.write_image(render_face_image(face, size, size, background), out / "images" / f"{stem}.ppm")
            io.save_mesh(face, out / "meshes" / f"{stem}.obj")
            records.append(ManifestRecord(f"images/{stem}.ppm", f"id{i:03d}", NO_GLASS))
    path = out / "faces.tsv"
    io.save_manifest(Manifest(records), path)
    return path
