"""Eyeglass synthesis pipeline: sample -> fit -> perturb -> render -> blend."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .assets import eyeglass_assets
from .errors import EmptyCoverageWarning, InconsistentManifestError, InvalidArgument
from .fitting import FULL3D, AnchorCorrespondence, fit_eyeglass
from .geometry import Mesh, RigidSimilarity, rotation_x
from .manifest import GLASS, Manifest, ManifestRecord
from .render import VIEW_DIR, DirectionalLight, LightSetup, RasterImage, render_layer

DEFAULT_PITCH_RANGE = (-1.5, 0.8)
DEFAULT_VSHIFT_RANGE = (1.0, 2.0)


def _check_range(name, r, lo=None, hi=None):
    r = (float(r[0]), float(r[1]))
    if not r[0] <= r[1]:
        raise InvalidArgument(f"{name} must satisfy lo <= hi, got {r}")
    if (lo is not None and r[0] < lo) or (hi is not None and r[1] > hi):
        raise InvalidArgument(f"{name} must lie within [{lo}, {hi}], got {r}")
    return r


@dataclass(frozen=True, eq=False)
class SynthConfig:
    """Randomization ranges and assets.  Angles in degrees, shifts in pixels."""

    eyeglass_assets: tuple = field(default_factory=eyeglass_assets)
    pitch_perturb_range: tuple = DEFAULT_PITCH_RANGE
    vshift_range: tuple = DEFAULT_VSHIFT_RANGE
    ambient_range: tuple = (0.2, 0.4)
    diffuse_range: tuple = (0.4, 0.8)
    specular_range: tuple = (0.0, 0.3)
    light_direction_cone: float = 30.0
    shininess: float = 16.0
    n_lights: int = 1
    master_seed: int = 0
    antialias: bool = False
    occlude_with_face: bool = True

    def __post_init__(self):
        assets = tuple(self.eyeglass_assets)
        if not assets or not all(isinstance(m, Mesh) for m in assets):
            raise InvalidArgument("need at least one eyeglass asset mesh")
        object.__setattr__(self, "eyeglass_assets", assets)
        object.__setattr__(self, "pitch_perturb_range", _check_range("pitch_perturb_range", self.pitch_perturb_range))
        object.__setattr__(self, "vshift_range", _check_range("vshift_range", self.vshift_range))
        for name in ("ambient_range", "diffuse_range", "specular_range"):
            object.__setattr__(self, name, _check_range(name, getattr(self, name), 0.0, 1.0))
        if not 0.0 <= self.light_direction_cone <= 90.0:
            raise InvalidArgument("light_direction_cone must lie in [0, 90] degrees")
        if self.shininess <= 0 or self.n_lights < 1:
            raise InvalidArgument("shininess must be positive and n_lights >= 1")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise InvalidArgument("master_seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class Sample:
    asset_index: int
    pitch: float
    vshift: float
    lights: LightSetup
    seed: int


@dataclass(frozen=True)
class SynthRecord:
    source_path: str
    output_path: str
    asset_index: int
    pitch: float
    vshift: float
    lights: LightSetup
    residual: float
    seed: int
    empty_coverage: bool = False

    FIELDS = ("source", "output", "asset", "pitch", "vshift", "ambient", "lights",
              "shininess", "residual", "seed", "empty")

    def to_line(self) -> str:
        """One tab-separated line; lights as ``dx,dy,dz,diffuse,specular`` joined by ``;``."""
        lights = ";".join(",".join(repr(float(x)) for x in (*l.direction, l.diffuse, l.specular))
                          for l in self.lights.lights)
        vals = (self.source_path, self.output_path, self.asset_index, repr(self.pitch),
                repr(self.vshift), repr(self.lights.ambient), lights, repr(self.lights.shininess),
                repr(self.residual), self.seed, int(self.empty_coverage))
        return "\t".join(str(v) for v in vals)

    @classmethod
    def from_line(cls, line: str) -> "SynthRecord":
        p = line.rstrip("\n").split("\t")
        if len(p) != len(cls.FIELDS):
            raise InvalidArgument(f"synth record needs {len(cls.FIELDS)} fields, got {len(p)}")
        lights = []
        for chunk in p[6].split(";"):
            v = [float(x) for x in chunk.split(",")]
            lights.append(DirectionalLight(tuple(v[:3]), v[3], v[4]))
        return cls(p[0], p[1], int(p[2]), float(p[3]), float(p[4]),
                   LightSetup(float(p[5]), tuple(lights), float(p[7])),
                   float(p[8]), int(p[9]), bool(int(p[10])))


def image_seed(master_seed: int, index: int) -> int:
    """Per-image 64-bit seed; a pure hash of (master_seed, index)."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _uniform(rng, r):
    lo, hi = r
    return lo if lo == hi else float(rng.uniform(lo, hi))


def _cone_direction(rng, cone_deg):
    """Uniform direction on the spherical cap around the camera axis."""
    cos_max = math.cos(math.radians(cone_deg))
    u, v = rng.random(), rng.random()
    cos_t = 1.0 - u * (1.0 - cos_max)
    sin_t = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))
    phi = 2.0 * math.pi * v
    d = np.array([sin_t * math.cos(phi), sin_t * math.sin(phi), cos_t * VIEW_DIR[2]])
    d /= np.linalg.norm(d)
    return tuple(d.tolist())


def sample_randomness(config: SynthConfig, image_index: int) -> Sample:
    seed = image_seed(config.master_seed, image_index)
    rng = np.random.default_rng(seed)
    asset = int(rng.integers(len(config.eyeglass_assets)))
    pitch = _uniform(rng, config.pitch_perturb_range)
    vshift = _uniform(rng, config.vshift_range)
    ambient = _uniform(rng, config.ambient_range)
    lights = []
    for _ in range(config.n_lights):
        direction = _cone_direction(rng, config.light_direction_cone)
        lights.append(DirectionalLight(direction, _uniform(rng, config.diffuse_range),
                                       _uniform(rng, config.specular_range)))
    return Sample(asset, pitch, vshift, LightSetup(ambient, tuple(lights), config.shininess), seed)


def perturb_fit(sim: RigidSimilarity, pitch: float, vshift: float, pivot=(0.0, 0.0, 0.0)) -> RigidSimilarity:
    """Tilt the eyeglass about its own x axis and shift it down the image.

    The tilt of ``pitch`` degrees is applied in the eyeglass frame about the
    model-space point ``pivot`` (normally the anchor centroid), so the fitted
    Euler pitch grows by exactly ``pitch`` and the pivot stays put.  Then the
    result moves ``vshift`` pixels along image +y.
    """
    R, t = sim.R, sim.t3d
    if pitch != 0:
        rx = rotation_x(pitch)
        pivot = np.asarray(pivot, dtype=np.float64)
        R = sim.R @ rx
        t = rx.T @ (pivot + sim.t3d) - pivot
    if vshift != 0:
        t = t + R.T @ np.array([0.0, vshift, 0.0]) / sim.f
    return RigidSimilarity(sim.f, R, t)


def blend(base: RasterImage, layer: RasterImage, mask=None) -> RasterImage:
    """Alpha-composite an RGBA layer over an RGB image.

    Integer arithmetic, rounding half away from zero; alpha 255 copies the
    layer and alpha 0 copies the base.  ``mask`` restricts compositing to
    those pixels (defaults to alpha > 0).
    """
    if base.channels != 3 or layer.channels != 4:
        raise InvalidArgument("blend needs an RGB base and an RGBA layer")
    if base.data.shape[:2] != layer.data.shape[:2]:
        raise InvalidArgument(f"size mismatch: base {base.data.shape[:2]} vs layer {layer.data.shape[:2]}")
    a = layer.data[..., 3:4].astype(np.int64)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != base.data.shape[:2]:
            raise InvalidArgument("mask size does not match image")
        a = np.where(mask[..., None], a, 0)
    num = a * layer.data[..., :3].astype(np.int64) + (255 - a) * base.data.astype(np.int64)
    out = (2 * num + 255) // 510
    return RasterImage(out.astype(np.uint8))


def synthesize_one(image: RasterImage, face: Mesh, config: SynthConfig, image_index: int,
                   source_path: str = "", output_path: str = ""):
    """Put a randomly chosen, fitted and perturbed eyeglass on one face image.

    ``face`` is the pre-fitted face mesh in camera space; its anchors must
    follow the eyeglass anchor scheme.  Returns ``(image, SynthRecord)``.
    """
    s = sample_randomness(config, image_index)
    glass = config.eyeglass_assets[s.asset_index]
    corr = AnchorCorrespondence(glass.anchors, face.anchors)
    fit = fit_eyeglass(corr, FULL3D)
    sim = perturb_fit(fit.sim, s.pitch, s.vshift, glass.anchors.mean(axis=0))
    occluder = (face.vertices, face.triangles) if config.occlude_with_face and len(face.triangles) else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyCoverageWarning)
        layer, mask = render_layer(glass, sim, s.lights, image.width, image.height,
                                   antialias=config.antialias, occluder=occluder)
    empty = not mask.any()
    out = image if empty else blend(image, layer, mask)
    if empty:
        warnings.warn(f"image {image_index}: eyeglass not visible, output equals input",
                      EmptyCoverageWarning, stacklevel=2)
    record = SynthRecord(source_path, output_path, s.asset_index, s.pitch, s.vshift, s.lights,
                         fit.residual, s.seed, empty)
    return out, record


def mixture_size(n_original: int, n_synthesized: int) -> int:
    return n_original + n_synthesized


def build_mixture_manifest(original: Manifest, synthesized: Manifest) -> Manifest:
    """Originals followed by their synthesized eyeglass counterparts.

    Synthesized records must pair 1:1, in order, with the originals and share
    their identities; they are flagged G and remember their source path.
    """
    if len(synthesized) == 0:
        return Manifest(original.records)
    if len(synthesized) != len(original):
        raise InconsistentManifestError(
            f"{len(synthesized)} synthesized records for {len(original)} originals")
    extra = []
    for o, s in zip(original, synthesized):
        if o.identity != s.identity:
            raise InconsistentManifestError(
                f"identity mismatch: {s.path!r} is {s.identity!r}, source {o.path!r} is {o.identity!r}")
        if s.source not in (None, o.path):
            raise InconsistentManifestError(f"{s.path!r} names source {s.source!r}, expected {o.path!r}")
        extra.append(ManifestRecord(s.path, s.identity, GLASS, o.path))
    out = Manifest(original.records + tuple(extra))
    assert len(out) == mixture_size(len(original), len(synthesized))
    return out
