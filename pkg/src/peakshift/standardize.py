"""Conversion of raw acceptance counts into the rate matrix used for ranking."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .dataset import Dataset


class Mode(str, Enum):
    # count / students / number of universities
    LITERAL = "literal"
    # count / students, then each university column rescaled to sum to 1
    COLUMN_TOTAL = "column_total"


@dataclass(frozen=True, eq=False)
class StandardizedMatrix:
    rates: np.ndarray = field(repr=False)
    mode: Mode

    @property
    def shape(self):
        return self.rates.shape

    def scaled(self, factor: float) -> "StandardizedMatrix":
        return StandardizedMatrix(self.rates * factor, self.mode)

    def drop_rows(self, rows) -> "StandardizedMatrix":
        keep = np.setdiff1d(np.arange(self.rates.shape[0]), rows)
        return StandardizedMatrix(self.rates[keep], self.mode)


def standardize(dataset: Dataset, mode: Mode | str = Mode.COLUMN_TOTAL) -> StandardizedMatrix:
    mode = Mode(mode)
    rates = dataset.acceptance / dataset.student_counts[:, None]
    if mode is Mode.LITERAL:
        rates = rates / dataset.university_count
    else:
        # zero columns are rejected by build_dataset, so the sums are positive
        rates = rates / rates.sum(axis=0, keepdims=True)
    rates.setflags(write=False)
    return StandardizedMatrix(rates, mode)
