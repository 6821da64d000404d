"""The six social-isolation life-event topics.

Member order is fixed and serialization uses the member names verbatim, so
lexicon files, match exports, and label CSVs stay stable across versions.
"""

from __future__ import annotations

from enum import Enum


class TopicId(Enum):
    CHRONIC_SOCIAL_ISOLATION = "CHRONIC_SOCIAL_ISOLATION"
    DIVORCE = "DIVORCE"
    EVICTION_MOVE = "EVICTION_MOVE"
    BREAK_UP = "BREAK_UP"
    CHILD_CUSTODY_LOSS = "CHILD_CUSTODY_LOSS"
    PET_LOSS = "PET_LOSS"

    @classmethod
    def from_name(cls, name: str) -> "TopicId":
        try:
            return cls[name]
        except KeyError:
            raise ValueError(f"unknown topic {name!r}; expected one of "
                             f"{[t.name for t in cls]}") from None


ALL_TOPICS = tuple(TopicId)
