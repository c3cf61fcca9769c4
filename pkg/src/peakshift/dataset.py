"""Aggregate acceptance-count data model.

A dataset is three things: the high schools (with enrolment), the
universities (with intake and, when known, the ground-truth difficulty
rank) and a dense school x university matrix of acceptance counts.
Individual students never appear.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np


class DatasetError(ValueError):
    """Raised when acceptance data fails validation."""


@dataclass(frozen=True)
class HighSchool:
    id: Hashable
    student_count: int


@dataclass(frozen=True)
class University:
    id: Hashable
    entrant_count: int
    true_rank: int | None = None


@dataclass(frozen=True, eq=False)
class Dataset:
    schools: tuple[HighSchool, ...]
    universities: tuple[University, ...]
    acceptance: np.ndarray = field(repr=False)

    @property
    def school_count(self) -> int:
        return len(self.schools)

    @property
    def university_count(self) -> int:
        return len(self.universities)

    @property
    def school_ids(self) -> list:
        return [s.id for s in self.schools]

    @property
    def university_ids(self) -> list:
        return [u.id for u in self.universities]

    @property
    def student_counts(self) -> np.ndarray:
        return np.array([s.student_count for s in self.schools], dtype=float)

    def university_index(self, uid) -> int:
        for j, u in enumerate(self.universities):
            if u.id == uid:
                return j
        raise KeyError(uid)

    def true_ranking(self) -> dict | None:
        """Map university id -> true rank, or None if any rank is missing."""
        if any(u.true_rank is None for u in self.universities):
            return None
        return {u.id: u.true_rank for u in self.universities}

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.schools == other.schools
            and self.universities == other.universities
            and np.array_equal(self.acceptance, other.acceptance)
        )

    def drop_schools(self, rows: Sequence[int]) -> "Dataset":
        """Return a dataset without the given school rows.

        Universities left without any acceptance are removed too, since
        the validated model does not admit them.
        """
        keep = np.setdiff1d(np.arange(self.school_count), np.asarray(rows, dtype=int))
        counts = self.acceptance[keep]
        alive = counts.sum(axis=0) > 0
        return build_dataset(
            [self.schools[i] for i in keep],
            [u for u, a in zip(self.universities, alive) if a],
            counts[:, alive],
        )

    def drop_universities(self, ids) -> "Dataset":
        ids = set(ids)
        keep = [j for j, u in enumerate(self.universities) if u.id not in ids]
        return build_dataset(
            self.schools,
            [self.universities[j] for j in keep],
            self.acceptance[:, keep],
        )


@dataclass(frozen=True)
class Ranking:
    """University ranks, optionally with the mean-rank score behind them."""

    ids: tuple
    ranks: tuple[int, ...]
    scores: tuple[float, ...] | None = None

    def __post_init__(self):
        if len(self.ids) != len(self.ranks):
            raise ValueError("ids and ranks differ in length")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("duplicate university in ranking")
        if self.scores is not None and len(self.scores) != len(self.ids):
            raise ValueError("scores and ids differ in length")

    def as_dict(self) -> dict:
        return dict(zip(self.ids, self.ranks))


def build_dataset(schools, universities, acceptance_counts) -> Dataset:
    """Validate inputs and assemble an immutable :class:`Dataset`."""
    schools = tuple(
        s if isinstance(s, HighSchool) else HighSchool(*s) for s in schools
    )
    universities = tuple(
        u if isinstance(u, University) else University(*u) for u in universities
    )
    counts = np.asarray(acceptance_counts)
    if counts.ndim != 2 or counts.shape != (len(schools), len(universities)):
        raise DatasetError(
            f"acceptance matrix has shape {counts.shape}, expected "
            f"({len(schools)}, {len(universities)})"
        )
    if counts.size and not np.all(np.equal(np.mod(counts, 1), 0)):
        raise DatasetError("acceptance counts must be integers")
    counts = counts.astype(np.int64)

    _check_unique([s.id for s in schools], "school")
    _check_unique([u.id for u in universities], "university")
    for s in schools:
        if int(s.student_count) < 1:
            raise DatasetError(f"school {s.id!r} has student_count {s.student_count}")
    for u in universities:
        if int(u.entrant_count) < 1:
            raise DatasetError(f"university {u.id!r} has entrant_count {u.entrant_count}")
    ranks = [u.true_rank for u in universities if u.true_rank is not None]
    if any(r < 1 for r in ranks):
        raise DatasetError("true_rank must be positive")
    if len(set(ranks)) != len(ranks):
        raise DatasetError("true_rank values must be unique")

    if (counts < 0).any():
        s, u = np.argwhere(counts < 0)[0]
        raise DatasetError(
            f"negative count at school {schools[s].id!r}, university {universities[u].id!r}"
        )
    empty = np.flatnonzero(counts.sum(axis=0) == 0)
    if empty.size:
        names = ", ".join(repr(universities[j].id) for j in empty)
        raise DatasetError(f"universities with zero total acceptance: {names}")

    counts.setflags(write=False)
    return Dataset(schools, universities, counts)


def _check_unique(ids, kind):
    seen = set()
    for i in ids:
        if i in seen:
            raise DatasetError(f"duplicate {kind} id {i!r}")
        seen.add(i)
