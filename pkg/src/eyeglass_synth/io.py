"""File formats: PPM/PAM images, OBJ meshes with anchor sidecars, manifests,
binary embedding matrices and flat key-value configs."""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidArgument, ParseError
from .geometry import Material, Mesh
from .manifest import GLASS, NO_GLASS, Manifest, ManifestRecord
from .render import RasterImage

EMBEDDING_MAGIC = b"EMBF"
_EMB_HEADER = struct.Struct("<4sII")


def normalize_pixels(image) -> np.ndarray:
    """``(pixel - 127.5) / 128`` per channel as float32 (H, W, C)."""
    data = image.data if isinstance(image, RasterImage) else np.asarray(image)
    if data.dtype != np.uint8:
        raise InvalidArgument("normalize_pixels expects 8-bit pixels")
    return ((data.astype(np.float64) - 127.5) / 128.0).astype(np.float32)


# -- images ---------------------------------------------------------------

def _read_tokens(buf, count, start=0):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    toks, i = [], start
    while len(toks) < count:
        while i < len(buf) and buf[i:i + 1].isspace():
            i += 1
        if buf[i:i + 1] == b"#":
            while i < len(buf) and buf[i:i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < len(buf) and not buf[j:j + 1].isspace():
            j += 1
        if j == i:
            raise ParseError("truncated image header")
        toks.append(buf[i:j])
        i = j
    return toks, i + 1


def write_image(image: RasterImage, path):
    """RGB -> binary PPM (P6), RGBA -> PAM (P7)."""
    path = Path(path)
    h, w, c = image.data.shape
    if c == 3:
        header = f"P6\n{w} {h}\n255\n".encode()
    else:
        header = (f"P7\nWIDTH {w}\nHEIGHT {h}\nDEPTH 4\nMAXVAL 255\n"
                  "TUPLTYPE RGB_ALPHA\nENDHDR\n").encode()
    path.write_bytes(header + image.tobytes())


def read_image(path) -> RasterImage:
    path = Path(path)
    buf = path.read_bytes()
    magic = buf[:2]
    if magic == b"P6":
        (w, h, maxval), off = _read_tokens(buf, 3, 2)
        w, h, maxval = int(w), int(h), int(maxval)
        if maxval != 255:
            raise ParseError("only 8-bit PPM is supported", path)
        c = 3
    elif magic == b"P7":
        end = buf.find(b"ENDHDR\n")
        if end < 0:
            raise ParseError("PAM header has no ENDHDR", path)
        fields = {}
        for line in buf[3:end].decode("ascii").splitlines():
            parts = line.split(None, 1)
            if len(parts) == 2 and not line.startswith("#"):
                fields[parts[0]] = parts[1].strip()
        w, h, c = int(fields["WIDTH"]), int(fields["HEIGHT"]), int(fields["DEPTH"])
        if int(fields.get("MAXVAL", 255)) != 255 or c not in (3, 4):
            raise ParseError("only 8-bit RGB/RGBA PAM is supported", path)
        off = end + len(b"ENDHDR\n")
    else:
        raise ParseError(f"unsupported image magic {magic!r}", path)
    body = buf[off:off + w * h * c]
    if len(body) != w * h * c:
        raise ParseError("image body is truncated", path)
    return RasterImage(np.frombuffer(body, dtype=np.uint8).reshape(h, w, c).copy())


# -- meshes ---------------------------------------------------------------

def read_anchor_file(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"anchor file not found: {path}")
    out = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        try:
            out.append(int(s))
        except ValueError:
            raise ParseError(f"not an integer index: {s!r}", path, lineno) from None
    return out


def load_mesh(path, anchors_path=None, material=None) -> Mesh:
    """Load ``v``/``f`` records; anchors come from 1-based indices in a sidecar.

    ``anchors_path`` defaults to the mesh path with suffix ``.anchors``.
    Faces must be triangles; ``f a/b/c`` forms keep only the vertex index.
    """
    path = Path(path)
    anchors_path = Path(anchors_path) if anchors_path else path.with_suffix(".anchors")
    verts, tris = [], []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        toks = line.split()
        if not toks or toks[0].startswith("#"):
            continue
        if toks[0] == "v":
            try:
                verts.append([float(x) for x in toks[1:4]])
            except ValueError:
                raise ParseError("bad vertex record", path, lineno) from None
            if len(verts[-1]) != 3:
                raise ParseError("vertex needs 3 coordinates", path, lineno)
        elif toks[0] == "f":
            if len(toks) != 4:
                raise ParseError(f"non-triangular face with {len(toks) - 1} vertices", path, lineno)
            idx = []
            for t in toks[1:]:
                try:
                    i = int(t.split("/")[0])
                except ValueError:
                    raise ParseError(f"bad face index {t!r}", path, lineno) from None
                if i < 0:
                    i = len(verts) + 1 + i
                if not 1 <= i <= len(verts):
                    raise ParseError(f"face index {t} out of range", path, lineno)
                idx.append(i - 1)
            tris.append(idx)
    anchors = read_anchor_file(anchors_path)
    for k, a in enumerate(anchors):
        if not 1 <= a <= len(verts):
            raise ParseError(f"anchor index {a} out of range 1..{len(verts)}", anchors_path, None)
    return Mesh(np.array(verts, dtype=np.float64).reshape(-1, 3),
                np.array(tris, dtype=np.int64).reshape(-1, 3),
                [a - 1 for a in anchors], material or Material())


def save_mesh(mesh: Mesh, path, anchors_path=None):
    path = Path(path)
    anchors_path = Path(anchors_path) if anchors_path else path.with_suffix(".anchors")
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles.tolist()]
    path.write_text("\n".join(lines) + "\n")
    anchors_path.write_text("".join(f"{i + 1}\n" for i in mesh.anchor_indices))


# -- manifests ------------------------------------------------------------

def load_manifest(path) -> Manifest:
    """Tab-separated ``path identity G|NG [source]`` lines."""
    path = Path(path)
    records, seen = [], {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) not in (3, 4):
            raise ParseError(f"expected 3 or 4 tab-separated fields, got {len(parts)}", path, lineno)
        if parts[2] not in (GLASS, NO_GLASS):
            raise ParseError(f"glass flag must be G or NG, got {parts[2]!r}", path, lineno)
        if not parts[0] or not parts[1]:
            raise ParseError("empty path or identity", path, lineno)
        if parts[0] in seen:
            raise ParseError(f"duplicate path {parts[0]!r} (first on line {seen[parts[0]]})", path, lineno)
        seen[parts[0]] = lineno
        src = parts[3] if len(parts) == 4 and parts[3] else None
        records.append(ManifestRecord(parts[0], parts[1], parts[2], src))
    return Manifest(records)


def save_manifest(manifest: Manifest, path):
    lines = []
    for r in manifest:
        fields = [r.path, r.identity, r.glass] + ([r.source] if r.source else [])
        if any("\t" in x or "\n" in x for x in fields):
            raise InvalidArgument(f"manifest field contains a tab or newline: {fields}")
        lines.append("\t".join(fields) + "\n")
    Path(path).write_text("".join(lines))


# -- embeddings -----------------------------------------------------------

def save_embeddings(matrix, path):
    """Header (magic, d, count) then row-major little-endian float32."""
    m = np.asarray(matrix, dtype="<f4")
    if m.ndim != 2:
        raise InvalidArgument("embedding matrix must be 2-D")
    count, d = m.shape
    with open(path, "wb") as fh:
        fh.write(_EMB_HEADER.pack(EMBEDDING_MAGIC, d, count))
        fh.write(np.ascontiguousarray(m).tobytes())


def load_embeddings(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    if len(buf) < _EMB_HEADER.size:
        raise ParseError("embedding file too short", path)
    magic, d, count = _EMB_HEADER.unpack_from(buf)
    if magic != EMBEDDING_MAGIC:
        raise ParseError(f"bad embedding magic {magic!r}", path)
    body = buf[_EMB_HEADER.size:]
    if len(body) != 4 * d * count:
        raise ParseError(f"expected {count}x{d} floats, file holds {len(body) // 4}", path)
    return np.frombuffer(body, dtype="<f4").reshape(count, d).astype(np.float64)


# -- config ---------------------------------------------------------------

def read_config(path, allowed=None) -> dict:
    """Flat ``key = value`` text; ``#`` starts a comment.  Values stay strings."""
    path = Path(path)
    out = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ParseError("expected key = value", path, lineno)
        k, v = (x.strip() for x in s.split("=", 1))
        if allowed is not None and k not in allowed:
            raise ConfigError(f"{path}:{lineno}: unknown config key {k!r}")
        if k in out:
            raise ConfigError(f"{path}:{lineno}: duplicate config key {k!r}")
        out[k] = v
    return out


def parse_range(text: str):
    parts = text.replace(",", " ").split()
    if len(parts) != 2:
        raise ConfigError(f"expected two numbers for a range, got {text!r}")
    return float(parts[0]), float(parts[1])


def parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")
