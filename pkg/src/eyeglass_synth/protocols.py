"""Gallery/probe protocols I-IV and verification / identification metrics.

I   gallery 2 NG, probe 2 NG        II  gallery 2 G,  probe 2 G
III gallery 2 NG, probe 2 G         IV  gallery 2 NG + 2 G, probe 2 NG + 2 G

In ``shared`` mode (the default) a protocol whose gallery and probe draw
from the same flag reuses the same images on both sides and self-matches
are dropped from scoring; ``disjoint`` mode draws separate images and needs
twice as many per identity.
"""
from __future__ import annotations

import json
import math
import warnings
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyProtocolError, InsufficientDataWarning, InvalidArgument
from .manifest import Manifest

FAR_TARGETS = (1e-4, 1e-5, 1e-6)
SHARED, DISJOINT = "shared", "disjoint"


@dataclass(frozen=True)
class ProtocolSpec:
    id: str
    gallery_ng: int
    gallery_g: int
    probe_ng: int
    probe_g: int


PROTOCOLS = {
    "I": ProtocolSpec("I", 2, 0, 2, 0),
    "II": ProtocolSpec("II", 0, 2, 0, 2),
    "III": ProtocolSpec("III", 2, 0, 0, 2),
    "IV": ProtocolSpec("IV", 2, 2, 2, 2),
}


def get_protocol(proto) -> ProtocolSpec:
    if isinstance(proto, ProtocolSpec):
        return proto
    try:
        return PROTOCOLS[str(proto).upper()]
    except KeyError:
        raise InvalidArgument(f"unknown protocol {proto!r}; expected one of I, II, III, IV") from None


@dataclass(frozen=True)
class SplitEntry:
    ref: int          # row in the manifest / embedding matrix
    path: str
    identity: str


@dataclass(frozen=True)
class EvalSplit:
    protocol: ProtocolSpec
    mode: str
    gallery: tuple
    probe: tuple
    excluded: tuple = ()


def _needs(spec, mode):
    if mode == SHARED:
        ng, g = max(spec.gallery_ng, spec.probe_ng), max(spec.gallery_g, spec.probe_g)
    else:
        ng, g = spec.gallery_ng + spec.probe_ng, spec.gallery_g + spec.probe_g
    return max(ng, 2), max(g, 2)


def build_split(manifest: Manifest, proto, seed, mode=SHARED) -> EvalSplit:
    """Seeded per-identity selection of gallery and probe images.

    Identities without enough G / NG images are left out and listed in
    ``excluded``.
    """
    spec = get_protocol(proto)
    if mode not in (SHARED, DISJOINT):
        raise InvalidArgument(f"mode must be 'shared' or 'disjoint', got {mode!r}")
    need_ng, need_g = _needs(spec, mode)
    rng = np.random.default_rng(seed)
    groups = {}
    for ref, r in enumerate(manifest):
        groups.setdefault(r.identity, ([], []))[1 if r.is_glass else 0].append(ref)

    gallery, probe, excluded = [], [], []
    for ident, (ng, g) in groups.items():
        if len(ng) < need_ng or len(g) < need_g:
            excluded.append(ident)
            continue
        picks = {}
        for flag, pool, need in (("ng", ng, need_ng), ("g", g, need_g)):
            order = rng.permutation(len(pool))[:need]
            picks[flag] = [pool[k] for k in order]
        for flag, n_gal, n_probe in (("ng", spec.gallery_ng, spec.probe_ng),
                                     ("g", spec.gallery_g, spec.probe_g)):
            chosen = picks[flag]
            gal = chosen[:n_gal]
            prb = chosen[:n_probe] if mode == SHARED else chosen[n_gal:n_gal + n_probe]
            gallery += [SplitEntry(k, manifest[k].path, ident) for k in gal]
            probe += [SplitEntry(k, manifest[k].path, ident) for k in prb]
    if not gallery or not probe:
        raise EmptyProtocolError(
            f"protocol {spec.id}: no identity has >= {need_ng} NG and >= {need_g} G images")
    return EvalSplit(spec, mode, tuple(gallery), tuple(probe), tuple(excluded))


def _lookup(embeddings, entry):
    if isinstance(embeddings, Mapping):
        try:
            return np.asarray(embeddings[entry.path], dtype=np.float64)
        except KeyError:
            raise LookupError(f"no embedding for image {entry.path!r}") from None
    emb = np.asarray(embeddings)
    if not 0 <= entry.ref < len(emb):
        raise LookupError(f"no embedding for image {entry.path!r} (row {entry.ref})")
    return emb[entry.ref].astype(np.float64)


def _unit_rows(m):
    n = np.linalg.norm(m, axis=1)
    if np.any(n <= 1e-12):
        raise InvalidArgument("zero-norm embedding in split")
    return m / n[:, None]


def score_matrix(gallery, probe, embeddings) -> np.ndarray:
    """(len(probe), len(gallery)) cosine similarities."""
    G = _unit_rows(np.stack([_lookup(embeddings, e) for e in gallery]))
    P = _unit_rows(np.stack([_lookup(embeddings, e) for e in probe]))
    return np.clip(P @ G.T, -1.0, 1.0)


def valid_pairs(split: EvalSplit) -> np.ndarray:
    """Mask of scored (probe, gallery) entries: everything but self-matches."""
    p = np.array([e.ref for e in split.probe])
    g = np.array([e.ref for e in split.gallery])
    return p[:, None] != g[None, :]


def genuine_impostor(scores, split: EvalSplit):
    p = np.array([e.identity for e in split.probe])
    g = np.array([e.identity for e in split.gallery])
    same = p[:, None] == g[None, :]
    valid = valid_pairs(split)
    return scores[same & valid], scores[~same & valid]


@dataclass
class VerificationResult:
    far_targets: tuple
    tpr: list
    thresholds: list
    saturated: list      # target unreachable even above the top impostor score
    warnings: list = field(default_factory=list)


def _allowed_accepts(far, m):
    """Largest k with k / m <= far."""
    k = int(math.floor(far * m))
    while (k + 1) / m <= far:
        k += 1
    while k > 0 and k / m > far:
        k -= 1
    return k


def verification_rates(genuine, impostor, far_targets=FAR_TARGETS) -> VerificationResult:
    """TPR at the smallest threshold whose false accept rate meets each target.

    A score ``s`` is accepted at threshold ``t`` when ``s >= t``.
    """
    gen = np.sort(np.asarray(genuine, dtype=np.float64))
    imp = np.sort(np.asarray(impostor, dtype=np.float64))[::-1]
    if not len(gen) or not len(imp):
        raise InvalidArgument("genuine and impostor score lists must be nonempty")
    m = len(imp)
    all_scores = np.sort(np.concatenate([gen, imp]))
    res = VerificationResult(tuple(far_targets), [], [], [])
    for far in far_targets:
        if not 0.0 < far < 1.0:
            raise InvalidArgument(f"FAR target must lie in (0, 1), got {far}")
        if m < 1.0 / far:
            res.warnings.append(f"only {m} impostor scores for FAR target {far:g}")
        k = _allowed_accepts(far, m)
        boundary = imp[k]          # the (k+1)-th highest impostor score must be rejected
        if boundary == imp[0]:
            t = float(np.nextafter(imp[0], np.inf))
            res.saturated.append(True)
        else:
            t = float(all_scores[np.searchsorted(all_scores, boundary, side="right")])
            res.saturated.append(False)
        res.thresholds.append(t)
        res.tpr.append(float(len(gen) - np.searchsorted(gen, t, side="left")) / len(gen))
    if res.warnings:
        for w in res.warnings:
            warnings.warn(w, InsufficientDataWarning, stacklevel=2)
    return res


def rank1(scores, probe_ids, gallery_ids, valid=None) -> float:
    """Fraction of probes whose best gallery match shares their identity.

    Ties go to the lowest gallery index; entries where ``valid`` is False
    are ignored.
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        raise InvalidArgument("empty score matrix")
    if valid is not None:
        s = np.where(valid, s, -np.inf)
    best = np.argmax(s, axis=1)
    g = np.asarray(gallery_ids)
    return float(np.mean(g[best] == np.asarray(probe_ids)))


def roc_points(genuine, impostor):
    """(FAR, TPR) for thresholds just above each distinct impostor score,
    plus the (0, 0) and (1, 1) end points, sorted by FAR."""
    gen = np.sort(np.asarray(genuine, dtype=np.float64))
    imp = np.sort(np.asarray(impostor, dtype=np.float64))
    if not len(gen) or not len(imp):
        raise InvalidArgument("genuine and impostor score lists must be nonempty")
    v = np.unique(imp)
    far = (len(imp) - np.searchsorted(imp, v, side="right")) / len(imp)
    tpr = (len(gen) - np.searchsorted(gen, v, side="right")) / len(gen)
    pts = [(0.0, 0.0)] + list(zip(far.tolist(), tpr.tolist())) + [(1.0, 1.0)]
    return sorted(pts)


def roc_export(genuine, impostor, path):
    pts = roc_points(genuine, impostor)
    with open(path, "w") as fh:
        for far, tpr in pts:
            fh.write(f"{far!r},{tpr!r}\n")
    return pts


def read_roc(path):
    with open(path) as fh:
        return [tuple(float(x) for x in line.split(",")) for line in fh if line.strip()]


@dataclass
class EvalReport:
    protocol: str
    mode: str
    tpr: dict
    rank1: float
    n_genuine: int
    n_impostor: int
    n_gallery: int
    n_probe: int
    excluded: list
    warnings: list
    roc: list = field(default_factory=list, repr=False)

    def format(self) -> str:
        lines = [f"protocol: {self.protocol}", f"mode: {self.mode}"]
        lines += [f"TPR@FAR={far:g}: {self.tpr[far]:.6f}" for far in FAR_TARGETS if far in self.tpr]
        lines += [f"Rank-1: {self.rank1:.6f}",
                  f"gallery: {self.n_gallery}", f"probe: {self.n_probe}",
                  f"genuine scores: {self.n_genuine}", f"impostor scores: {self.n_impostor}",
                  f"excluded identities: {len(self.excluded)}"]
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines)

    def to_json(self) -> str:
        d = {k: v for k, v in self.__dict__.items() if k != "roc"}
        d["tpr"] = {f"{k:g}": v for k, v in self.tpr.items()}
        return json.dumps(d, sort_keys=True)


def evaluate(manifest: Manifest, embeddings, proto, seed, mode=SHARED,
             far_targets=FAR_TARGETS) -> EvalReport:
    split = build_split(manifest, proto, seed, mode)
    scores = score_matrix(split.gallery, split.probe, embeddings)
    gen, imp = genuine_impostor(scores, split)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InsufficientDataWarning)
        ver = verification_rates(gen, imp, far_targets)
    r1 = rank1(scores, [e.identity for e in split.probe], [e.identity for e in split.gallery],
               valid_pairs(split))
    return EvalReport(split.protocol.id, mode, dict(zip(far_targets, ver.tpr)), r1,
                      len(gen), len(imp), len(split.gallery), len(split.probe),
                      list(split.excluded), ver.warnings, roc_points(gen, imp))
