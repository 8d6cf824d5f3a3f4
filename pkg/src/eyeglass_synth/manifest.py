"""Labeled image lists with eyeglass (G) / non-eyeglass (NG) flags."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import InvalidArgument

GLASS = "G"
NO_GLASS = "NG"


@dataclass(frozen=True)
class ManifestRecord:
    path: str
    identity: str
    glass: str = NO_GLASS
    # original image a synthesized record was made from
    source: Optional[str] = None

    def __post_init__(self):
        if not self.path:
            raise InvalidArgument("record path is empty")
        if not self.identity:
            raise InvalidArgument(f"record {self.path!r} has an empty identity")
        if self.glass not in (GLASS, NO_GLASS):
            raise InvalidArgument(f"glass flag must be G or NG, got {self.glass!r}")

    @property
    def is_glass(self) -> bool:
        return self.glass == GLASS


class Manifest:
    """Ordered, path-unique sequence of :class:`ManifestRecord`."""

    def __init__(self, records: Iterable[ManifestRecord] = ()):
        self.records = tuple(records)
        dup = [p for p, c in Counter(r.path for r in self.records).items() if c > 1]
        if dup:
            raise InvalidArgument(f"duplicate paths in manifest: {dup[:5]}")

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def __eq__(self, other):
        return isinstance(other, Manifest) and self.records == other.records

    def __repr__(self):
        return f"Manifest({len(self.records)} records)"

    def identities(self):
        """Identity labels in first-appearance order."""
        return list(dict.fromkeys(r.identity for r in self.records))

    def by_identity(self):
        out = {}
        for r in self.records:
            out.setdefault(r.identity, []).append(r)
        return out
