"""Command-line entry point.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .arch import count_weight_layers, format_trace, resnet22_shape_trace
from .assets import eyeglass_assets
from .errors import (ConfigError, DegenerateConfigurationError, EmptyProtocolError,
                     InconsistentManifestError, InvalidArgument, MiningError, ParseError,
                     TrainingError)
from .fitting import FULL3D, ORTHO2D, AnchorCorrespondence, fit_eyeglass
from .loss import gaussian_clusters, toy_train
from .manifest import GLASS, Manifest, ManifestRecord
from .protocols import DISJOINT, SHARED, evaluate
from .schedule import SamplerSchedule, glass_probability
from .synthesis import SynthConfig, build_mixture_manifest, synthesize_one

log = logging.getLogger("eyeglass_synth")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

SYNTH_KEYS = {
    "pitch_perturb_range": io.parse_range,
    "vshift_range": io.parse_range,
    "ambient_range": io.parse_range,
    "diffuse_range": io.parse_range,
    "specular_range": io.parse_range,
    "light_direction_cone": float,
    "shininess": float,
    "n_lights": int,
    "antialias": io.parse_bool,
    "occlude_with_face": io.parse_bool,
}
SCHEDULE_KEYS = {"lambda": ("lam", float), "p0": ("p0", float), "p_cap": ("p_cap", float)}
CONFIG_KEYS = set(SYNTH_KEYS) | set(SCHEDULE_KEYS) | {"assets_dir"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def load_config(path) -> dict:
    return io.read_config(path, allowed=CONFIG_KEYS) if path else {}


def synth_config_from(cfg: dict, seed: int) -> SynthConfig:
    kwargs = {}
    for key, parse in SYNTH_KEYS.items():
        if key in cfg:
            try:
                kwargs[key] = parse(cfg[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {cfg[key]!r} ({exc})") from None
    if "assets_dir" in cfg:
        d = Path(cfg["assets_dir"])
        files = sorted(d.glob("*.obj"))
        if not files:
            raise ConfigError(f"no .obj eyeglass assets in {d}")
        kwargs["eyeglass_assets"] = tuple(io.load_mesh(f) for f in files)
    try:
        return SynthConfig(master_seed=seed, **kwargs)
    except InvalidArgument as exc:
        raise ConfigError(str(exc)) from None


def schedule_from(cfg: dict, args) -> SamplerSchedule:
    kw = {}
    for key, (name, parse) in SCHEDULE_KEYS.items():
        if key in cfg:
            kw[name] = parse(cfg[key])
    for name in ("lam", "p0", "p_cap"):
        if getattr(args, name, None) is not None:
            kw[name] = getattr(args, name)
    try:
        return SamplerSchedule(**kw)
    except InvalidArgument as exc:
        raise ConfigError(str(exc)) from None


# -- synth ----------------------------------------------------------------

def _resolve(base: Path, p: str) -> Path:
    q = Path(p)
    return q if q.is_absolute() else base / q


def _synth_task(task):
    index, src, mesh_path, out_dir, out_rel, source_name, config = task
    image = io.read_image(src)
    face = io.load_mesh(mesh_path)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out, record = synthesize_one(image, face, config, index, source_name, out_rel)
    io.write_image(out, Path(out_dir) / out_rel)
    return record.to_line()


def cmd_synth(args):
    """Paths written to ``mixture.tsv`` are relative to the output directory."""
    cfg = load_config(args.config)
    config = synth_config_from(cfg, args.seed)
    faces = io.load_manifest(args.faces)
    base = Path(args.faces).resolve().parent
    out_dir = Path(args.out).resolve()
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    tasks, originals, synth_records = [], [], []
    for i, rec in enumerate(faces):
        src = _resolve(base, rec.path)
        mesh_path = Path(args.meshes) / (Path(rec.path).stem + ".obj")
        if not mesh_path.exists():
            raise FileNotFoundError(f"no face mesh for {rec.path!r}: expected {mesh_path}")
        out_rel = f"images/{Path(rec.path).stem}_glass.ppm"
        orig_rel = os.path.relpath(src, out_dir)
        tasks.append((i, src, mesh_path, out_dir, out_rel, rec.path, config))
        originals.append(ManifestRecord(orig_rel, rec.identity, rec.glass))
        synth_records.append(ManifestRecord(out_rel, rec.identity, GLASS, orig_rel))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            lines = list(pool.map(_synth_task, tasks, chunksize=1))
    else:
        lines = [_synth_task(t) for t in tasks]
    (out_dir / "synth_records.tsv").write_text("".join(line + "\n" for line in lines))
    mixture = build_mixture_manifest(Manifest(originals), Manifest(synth_records))
    io.save_manifest(mixture, out_dir / "mixture.tsv")
    empty = sum(line.rsplit("\t", 1)[1] == "1" for line in lines)
    print(f"synthesized {len(lines)} images ({empty} with no visible eyeglass) -> {args.out}")
    return EXIT_OK


# -- eval -----------------------------------------------------------------

def cmd_eval(args):
    manifest = io.load_manifest(args.manifest)
    emb = io.load_embeddings(args.embeddings)
    if len(emb) != len(manifest):
        raise InconsistentManifestError(
            f"{len(emb)} embeddings for {len(manifest)} manifest records")
    report = evaluate(manifest, emb, args.protocol, args.seed, args.mode)
    print(report.format())
    if args.roc:
        with open(args.roc, "w") as fh:
            fh.writelines(f"{far!r},{tpr!r}\n" for far, tpr in report.roc)
    if args.records:
        with open(args.records, "a") as fh:
            fh.write(report.to_json() + "\n")
    return EXIT_OK


# -- small commands -------------------------------------------------------

def cmd_shapes(args):
    print(format_trace(resnet22_shape_trace()))
    print(f"weight layers: {count_weight_layers()}")
    return EXIT_OK


def cmd_schedule(args):
    sched = schedule_from(load_config(args.config), args)
    print("n\tp")
    for n in np.linspace(0, args.max_n, args.points):
        n = int(round(n))
        print(f"{n}\t{glass_probability(sched, n):.6f}")
    return EXIT_OK


def cmd_toy_train(args):
    X, labels = gaussian_clusters(args.per_identity, args.dim, args.offset, args.sigma,
                                  args.identities, args.seed)
    res = toy_train(X, labels, args.steps, args.lr, args.rho_p, args.rho_n)
    print("step\tloss\tseparation")
    every = max(1, args.steps // 10)
    for k in range(0, args.steps + 1):
        if k % every == 0 or k == args.steps:
            print(f"{k}\t{res.loss[k]:.6f}\t{res.separation[k]:.6f}")
    return EXIT_OK


def cmd_fit(args):
    glass = io.load_mesh(args.glass, args.glass_anchors) if args.glass else eyeglass_assets()[0]
    face = io.load_mesh(args.face, args.face_anchors)
    corr = AnchorCorrespondence(glass.anchors, face.anchors)
    result = fit_eyeglass(corr, ORTHO2D if args.mode == "Orthographic2D" else FULL3D)
    print(result.to_record())
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK if result.converged else EXIT_NUMERIC


def build_parser():
    p = _Parser(prog="eyeglass-synth", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="put eyeglasses on a manifest of fitted faces")
    s.add_argument("--config")
    s.add_argument("--faces", required=True, help="manifest of face images")
    s.add_argument("--meshes", required=True, help="directory of <image stem>.obj face meshes")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=_u64, required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_synth)

    e = sub.add_parser("eval", help="score a protocol over precomputed embeddings")
    e.add_argument("--embeddings", required=True)
    e.add_argument("--manifest", required=True)
    e.add_argument("--protocol", required=True, choices=["I", "II", "III", "IV"])
    e.add_argument("--roc")
    e.add_argument("--seed", type=_u64, required=True)
    e.add_argument("--mode", choices=[SHARED, DISJOINT], default=SHARED)
    e.add_argument("--records", help="append the report as one JSON line")
    e.set_defaults(func=cmd_eval)

    sh = sub.add_parser("shapes", help="print the ResNet-22 shape trace")
    sh.set_defaults(func=cmd_shapes)

    t = sub.add_parser("toy-train", help="mining-contrastive loss on toy Gaussian clusters")
    t.add_argument("--seed", type=_u64, required=True)
    t.add_argument("--steps", type=int, default=500)
    t.add_argument("--lr", type=float, default=0.1)
    t.add_argument("--dim", type=int, default=8)
    t.add_argument("--identities", type=int, default=2)
    t.add_argument("--per-identity", type=int, default=16)
    t.add_argument("--offset", type=float, default=1.0)
    t.add_argument("--sigma", type=float, default=1.0)
    t.add_argument("--rho-p", type=float, default=0.5)
    t.add_argument("--rho-n", type=float, default=0.5)
    t.set_defaults(func=cmd_toy_train)

    sc = sub.add_parser("schedule", help="print the eyeglass sampling probability over iterations")
    sc.add_argument("--config")
    sc.add_argument("--lambda", dest="lam", type=float)
    sc.add_argument("--p0", type=float)
    sc.add_argument("--p-cap", dest="p_cap", type=float)
    sc.add_argument("--max-n", type=int, default=100000)
    sc.add_argument("--points", type=int, default=11)
    sc.set_defaults(func=cmd_schedule)

    f = sub.add_parser("fit", help="fit one eyeglass mesh to one face mesh")
    f.add_argument("--face", required=True)
    f.add_argument("--face-anchors")
    f.add_argument("--glass", help="eyeglass .obj (default: built-in rectangular frame)")
    f.add_argument("--glass-anchors")
    f.add_argument("--mode", choices=["Full3D", "Orthographic2D"], default="Full3D")
    f.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateConfigurationError, TrainingError, MiningError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParseError, InconsistentManifestError, EmptyProtocolError, InvalidArgument,
            LookupError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
