"""Eyeglass face synthesis and eyeglass-robust face recognition tooling."""
from .fitting import AnchorCorrespondence, FitResult, Projection, fit_eyeglass, fit_residual
from .geometry import (EulerAngles, Material, Mesh, RigidSimilarity, euler_from_rotation,
                       rotation_from_euler, transform_points, vertex_normals)
from .loss import cosine_similarity, loss_gradient, mine_pairs, mining_contrastive_loss, toy_train
from .manifest import Manifest, ManifestRecord
from .protocols import build_split, evaluate, rank1, roc_export, score_matrix, verification_rates
from .render import LightSetup, RasterImage, rasterize, render_layer, shade_phong
from .schedule import SamplerSchedule, glass_probability, sample_batch
from .synthesis import (SynthConfig, blend, build_mixture_manifest, perturb_fit,
                        sample_randomness, synthesize_one)

__version__ = "0.1.0"

__all__ = [
    "AnchorCorrespondence", "FitResult", "Projection", "fit_eyeglass", "fit_residual",
    "EulerAngles", "Material", "Mesh", "RigidSimilarity", "euler_from_rotation",
    "rotation_from_euler", "transform_points", "vertex_normals",
    "cosine_similarity", "loss_gradient", "mine_pairs", "mining_contrastive_loss", "toy_train",
    "Manifest", "ManifestRecord",
    "build_split", "evaluate", "rank1", "roc_export", "score_matrix", "verification_rates",
    "LightSetup", "RasterImage", "rasterize", "render_layer", "shade_phong",
    "SamplerSchedule", "glass_probability", "sample_batch",
    "SynthConfig", "blend", "build_mixture_manifest", "perturb_fit", "sample_randomness",
    "synthesize_one",
]
