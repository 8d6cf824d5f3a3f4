"""Write a demo face set and put eyeglasses on it.

    python scripts/make_demo_data.py --out demo --identities 5 --seed 1
"""
import argparse
from pathlib import Path

from eyeglass_synth.assets import write_demo_faces
from eyeglass_synth.cli import main as cli_main


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="demo")
    p.add_argument("--identities", type=int, default=5)
    p.add_argument("--per-identity", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    args = p.parse_args()

    root = Path(args.out)
    faces = write_demo_faces(root / "faces", args.identities, args.per_identity, seed=args.seed)
    print(f"faces -> {faces}")
    return cli_main(["synth", "--faces", str(faces), "--meshes", str(root / "faces" / "meshes"),
                     "--out", str(root / "synth"), "--seed", str(args.seed), "--jobs", str(args.jobs)])


if __name__ == "__main__":
    raise SystemExit(main())
