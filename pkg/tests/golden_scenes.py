"""Fixture scenes whose rendered bytes are frozen under tests/golden/.

Run ``python3 tests/golden_scenes.py`` to rewrite the files after a
deliberate rendering change, and look at the images before committing.
"""
from pathlib import Path

import numpy as np

from eyeglass_synth.assets import eyeglass_assets, make_face, render_face_image
from eyeglass_synth.fitting import AnchorCorrespondence, fit_eyeglass
from eyeglass_synth.geometry import Material, Mesh, RigidSimilarity
from eyeglass_synth.io import write_image
from eyeglass_synth.render import DirectionalLight, LightSetup, render_layer
from eyeglass_synth.synthesis import SynthConfig, synthesize_one

GOLDEN_DIR = Path(__file__).parent / "golden"


def overlapping_triangles():
    """Two tilted triangles that cross in depth; culling off, so the back-facing
    one is drawn too and shows ambient light only."""
    v = [[4, 4, 3], [28, 6, 9], [8, 28, 6],
         [26, 26, 2], [6, 12, 8], [30, 14, 8]]
    tris = [[0, 2, 1], [3, 4, 5]]
    mesh = Mesh(v, tris, [0, 1, 2], Material((0.9, 0.9, 0.9)))
    lights = LightSetup(0.2, (DirectionalLight((0.0, 0.0, -1.0), 0.7, 0.3),), 8.0)
    layer, _ = render_layer(mesh, RigidSimilarity(), lights, 32, 32, cull_backfaces=False)
    return layer


def fitted_frame():
    """Stock rectangular frame fitted to the rolled demo face, no occluder."""
    face = make_face(roll_deg=4.0)
    glass = eyeglass_assets()[0]
    fit = fit_eyeglass(AnchorCorrespondence(glass.anchors, face.anchors))
    layer, _ = render_layer(glass, fit.sim, LightSetup(), 120, 120)
    return layer


def antialiased_two_lights():
    """Rounded frame, yawed, two coloured-energy lights and 2x2 supersampling."""
    glass = eyeglass_assets()[1]
    sim = RigidSimilarity.from_euler(0.55, (6.0, -12.0, 0.0), (60 / 0.55, 58 / 0.55, 80.0))
    d2 = np.array([0.4, -0.3, -0.866])
    lights = LightSetup(0.25, (DirectionalLight((0.0, 0.0, -1.0), 0.5, 0.4),
                               DirectionalLight(tuple(d2 / np.linalg.norm(d2)), 0.3, 0.6)), 24.0)
    layer, _ = render_layer(glass, sim, lights, 120, 120, antialias=True)
    return layer


def collapsed_synthesis():
    """Full pipeline with every random range collapsed to a point."""
    face = make_face(roll_deg=4.0)
    config = SynthConfig(eyeglass_assets=eyeglass_assets()[:1], pitch_perturb_range=(-0.5, -0.5),
                         vshift_range=(1.5, 1.5), ambient_range=(0.3, 0.3),
                         diffuse_range=(0.6, 0.6), specular_range=(0.2, 0.2),
                         light_direction_cone=0.0, master_seed=7)
    out, _ = synthesize_one(render_face_image(face), face, config, 0)
    return out


SCENES = {
    "overlapping_triangles.pam": overlapping_triangles,
    "fitted_frame.pam": fitted_frame,
    "antialiased_two_lights.pam": antialiased_two_lights,
    "collapsed_synthesis.ppm": collapsed_synthesis,
}


if __name__ == "__main__":
    GOLDEN_DIR.mkdir(exist_ok=True)
    for name, make in SCENES.items():
        write_image(make(), GOLDEN_DIR / name)
        print("wrote", GOLDEN_DIR / name)
