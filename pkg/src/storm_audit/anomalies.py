from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any


class AnomalyKind(str, enum.Enum):
    MALFORMED_ROW = "MalformedRow"
    BAD_YEAR = "BadYear"
    UNKNOWN_MAGNITUDE = "UnknownMagnitude"
    UNPARSEABLE_DAMAGE = "UnparseableDamage"
    DIGIT_MAGNITUDE = "DigitMagnitude"
    BARE_MAGNITUDE = "BareMagnitude"
    OUTLIER_EPISODE = "OutlierEpisode"
    DUPLICATE_SNAPSHOT_YEAR = "DuplicateSnapshotYear"
    ENCODING_REPLACEMENT = "EncodingReplacement"
    HEADER_ISSUE = "HeaderIssue"


@dataclass(frozen=True)
class AnomalyRecord:
    """One flagged irregularity, with enough context to find the input again.

    ``row_number`` is the 1-based data-row ordinal inside ``source_file``
    (the header is row 0). Episode-level anomalies carry ``episode_id``
    instead and leave ``row_number`` empty.
    """

    kind: AnomalyKind
    source_file: str
    row_number: int | None
    detail: str
    episode_id: str | None = None

    def sort_key(self) -> tuple:
        return (
            self.source_file,
            -1 if self.row_number is None else self.row_number,
            self.kind.value,
            self.episode_id or "",
            self.detail,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "source_file": self.source_file,
            "row_number": self.row_number,
            "detail": self.detail,
            "episode_id": self.episode_id,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> AnomalyRecord:
        return cls(
            kind=AnomalyKind(data["kind"]),
            source_file=data["source_file"],
            row_number=data["row_number"],
            detail=data["detail"],
            episode_id=data.get("episode_id"),
        )


def sort_anomalies(records) -> list[AnomalyRecord]:
    return sorted(records, key=AnomalyRecord.sort_key)
