"""Check ranked causal prior courses against a known prerequisite catalog."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import IO

from .ingest import IngestError


@dataclass(frozen=True)
class PrereqCatalog:
    """Directed (prerequisite, target) course edges."""

    edges: frozenset[tuple[str, str]]

    def __post_init__(self) -> None:
        for prereq, target in self.edges:
            if prereq == target:
                raise ValueError(f"self-edge on {prereq!r}")

    def prereqs_of(self, course_id: str) -> frozenset[str]:
        return frozenset(p for p, t in self.edges if t == course_id)

    @classmethod
    def from_csv(cls, source: bytes | IO[bytes]) -> "PrereqCatalog":
        data = source if isinstance(source, bytes) else source.read()
        reader = csv.reader(io.StringIO(data.decode("utf-8")))
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestError("missing header row in prerequisite catalog") from None
        if header != ["prereq_course_id", "target_course_id"]:
            raise IngestError(
                "prerequisite catalog header must be "
                "'prereq_course_id,target_course_id'"
            )
        edges = set()
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise IngestError(f"bad prerequisite row: {row!r}")
            edges.add((row[0].strip(), row[1].strip()))
        return cls(frozenset(edges))


@dataclass(frozen=True)
class PrereqOverlap:
    hits: int
    known_prereqs: int
    recall_at_k: float


def prereq_overlap(
    catalog: PrereqCatalog, y_course: str, ranked_x: list[str], k: int
) -> PrereqOverlap:
    """How many known prerequisites of a target land in the top-k ranking.

    Recall is hits over known prerequisites, and 0 when the catalog knows
    none (vacuous case).
    """
    known = catalog.prereqs_of(y_course)
    hits = len(set(ranked_x[:k]) & known)
    recall = hits / len(known) if known else 0.0
    return PrereqOverlap(hits=hits, known_prereqs=len(known), recall_at_k=recall)
