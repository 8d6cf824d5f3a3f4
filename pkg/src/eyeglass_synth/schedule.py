"""Gradual sampling: probability of drawing the eyeglass variant ramps with
the iteration count, ``p = min(lam * n + p0, p_cap)``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InconsistentManifestError, InvalidArgument
from .manifest import Manifest


@dataclass(frozen=True)
class SamplerSchedule:
    lam: float = 1e-5
    p0: float = 0.0
    p_cap: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.p0 <= self.p_cap <= 1.0):
            raise InvalidArgument(f"need 0 <= p0 <= p_cap <= 1, got p0={self.p0}, p_cap={self.p_cap}")
        if self.lam < 0:
            raise InvalidArgument("slope must be nonnegative")

    @classmethod
    def naive(cls):
        """Fixed 50/50 mixing."""
        return cls(0.0, 0.5, 0.5)


def glass_probability(sched: SamplerSchedule, n) -> float:
    if n < 0:
        raise InvalidArgument("iteration count must be nonnegative")
    return min(sched.lam * n + sched.p0, sched.p_cap)


def pair_variants(manifest: Manifest):
    """Split a mixture manifest into ``[(original, synthesized), ...]``.

    Synthesized records are those naming a ``source``; every original needs
    exactly one.
    """
    originals = [r for r in manifest if r.source is None]
    synth = {}
    for r in manifest:
        if r.source is not None:
            if r.source in synth:
                raise InconsistentManifestError(f"{r.source!r} has more than one synthesized variant")
            synth[r.source] = r
    known = {r.path for r in originals}
    orphans = [s for s in synth if s not in known]
    if orphans:
        raise InconsistentManifestError(f"synthesized records name unknown sources: {orphans[:3]}")
    pairs = []
    for r in originals:
        if r.path not in synth:
            raise InconsistentManifestError(f"no synthesized counterpart for {r.path!r}")
        pairs.append((r, synth[r.path]))
    return pairs


def sample_batch(manifest: Manifest, sched: SamplerSchedule, n, batch_size, seed):
    """Draw ``batch_size`` slots uniformly over originals (with replacement);
    each slot takes the synthesized variant with probability p(n)."""
    pairs = pair_variants(manifest)
    if not pairs:
        raise InconsistentManifestError("manifest has no originals to sample")
    p = glass_probability(sched, n)
    rng = np.random.default_rng(seed)
    slots = rng.integers(len(pairs), size=batch_size)
    use_glass = rng.random(batch_size) < p
    return [pairs[k][1] if g else pairs[k][0] for k, g in zip(slots, use_glass)]
