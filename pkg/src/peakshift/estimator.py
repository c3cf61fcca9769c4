"""Peak Shift Estimation: iterative peeling of the next-hardest university group.

One run starts from the known top universities, picks the schools that
send the most students there, clusters the still-unranked universities
on their acceptance rates from those schools, and ranks the cluster with
the highest mean rate next. Repeating this until every university is
ranked gives a temporary ranking; X-means seeding makes it random, so many
runs are averaged into the final ranking.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import Dataset, Ranking
from .standardize import Mode, StandardizedMatrix, standardize
from .xmeans import MAX_ITER, VARIANCE_FLOOR, xmeans_cluster

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EstimatorConfig:
    seed_university_ids: tuple
    repetitions: int = 1000
    mode: Mode = Mode.COLUMN_TOTAL
    rng_seed: int = 0
    k_max: int | None = None
    max_iter: int = MAX_ITER
    variance_floor: float = VARIANCE_FLOOR
    # sum step-1 rates over every ranked university instead of the latest group
    cumulative: bool = False

    def __post_init__(self):
        object.__setattr__(self, "seed_university_ids", tuple(self.seed_university_ids))
        object.__setattr__(self, "mode", Mode(self.mode))
        if not self.seed_university_ids:
            raise ValueError("at least one seed university is required")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")


@dataclass
class IterationRecord:
    rank: int
    ranked: list[int]
    schools: list[int]
    clusters: list[list[int]]


@dataclass
class RunTrace:
    """Column indices per iteration of one run; ``groups[r - 1]`` got rank r."""

    groups: list[list[int]] = field(default_factory=list)
    iterations: list[IterationRecord] = field(default_factory=list)


def child_seed(master: int, index: int) -> int:
    """Seed for repetition ``index``; independent of execution order."""
    ss = np.random.SeedSequence(entropy=master, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def select_top_schools(rates: np.ndarray, latest: Sequence[int], university_count: int | None = None) -> np.ndarray:
    """Indices of the schools with the largest summed rate over ``latest``.

    Takes the top ``max(1, floor(|latest| * schools / universities))`` rows,
    ties going to the lower row index.
    """
    rates = rates.rates if isinstance(rates, StandardizedMatrix) else np.asarray(rates)
    m, n = rates.shape
    if university_count is None:
        university_count = n
    latest = np.asarray(latest, dtype=int)
    if latest.size == 0:
        raise ValueError("ranked set must be non-empty")
    size = max(1, (len(latest) * m) // university_count)
    totals = rates[:, latest].sum(axis=1)
    order = np.lexsort((np.arange(m), -totals))
    return order[:size]


def _seed_columns(ids: Sequence, seeds: Sequence) -> list[int]:
    pos = {u: j for j, u in enumerate(ids)}
    missing = [s for s in seeds if s not in pos]
    if missing:
        raise KeyError(f"seed universities not in dataset: {missing}")
    return sorted({pos[s] for s in seeds})


def run_single_estimation(
    matrix: StandardizedMatrix | np.ndarray,
    seed_columns: Sequence[int],
    config: EstimatorConfig,
    rng_seed,
    record_clusters: bool = False,
) -> tuple[np.ndarray, RunTrace]:
    """One pass of the peeling loop; returns per-column temporary ranks.

    The trace always holds the rank groups and the schools used at every
    step; the full step-3 clusterings are kept only with ``record_clusters``.
    """
    rates = matrix.rates if isinstance(matrix, StandardizedMatrix) else np.asarray(matrix, dtype=float)
    n = rates.shape[1]
    rng = np.random.default_rng(rng_seed)
    ranks = np.zeros(n, dtype=np.int64)
    latest = list(seed_columns)
    ranks[latest] = 1
    trace = RunTrace(groups=[list(latest)])
    rank = 1

    while True:
        unranked = np.flatnonzero(ranks == 0)
        if unranked.size == 0:
            break
        rank += 1
        basis = np.flatnonzero(ranks > 0) if config.cumulative else latest
        schools = select_top_schools(rates, basis, n)
        if unranked.size <= 2:
            clusters = [unranked.tolist()]
            top = clusters[0]
        else:
            features = rates[np.ix_(schools, unranked)].T
            k_max = config.k_max or unranked.size
            result = xmeans_cluster(features, k_max, rng, config.max_iter, config.variance_floor)
            sizes = np.bincount(result.labels, minlength=result.k)
            means = np.bincount(result.labels, weights=features.mean(1), minlength=result.k) / sizes
            # argmax keeps the lowest cluster label among equal means
            best = int(np.argmax(means))
            if record_clusters:
                clusters = [unranked[result.labels == j].tolist() for j in range(result.k)]
            else:
                clusters = []
            top = unranked[result.labels == best].tolist()
        ranks[top] = rank
        latest = top
        trace.groups.append(list(top))
        trace.iterations.append(IterationRecord(rank, list(top), schools.tolist(), clusters))
    return ranks, trace


def aggregate_rankings(runs: Sequence[np.ndarray], ids: Sequence | None = None) -> Ranking:
    """Average temporary ranks and re-rank; ties go to the lower column."""
    runs = [np.asarray(r, dtype=float) for r in runs]
    if not runs:
        raise ValueError("no runs to aggregate")
    if len({len(r) for r in runs}) != 1:
        raise ValueError("runs cover different university sets")
    means = np.mean(runs, axis=0)
    n = len(means)
    order = np.lexsort((np.arange(n), means))
    final = np.empty(n, dtype=np.int64)
    final[order] = np.arange(1, n + 1)
    ids = tuple(range(n)) if ids is None else tuple(ids)
    if len(ids) != n:
        raise ValueError("ids and runs differ in length")
    return Ranking(ids, tuple(int(r) for r in final), tuple(float(m) for m in means))


def estimate_matrix(matrix: StandardizedMatrix, ids: Sequence, config: EstimatorConfig):
    seeds = _seed_columns(ids, config.seed_university_ids)
    runs, traces = [], []
    for rep in range(config.repetitions):
        ranks, trace = run_single_estimation(matrix, seeds, config, child_seed(config.rng_seed, rep))
        runs.append(ranks)
        traces.append(trace)
    return aggregate_rankings(runs, ids), traces


def estimate(dataset: Dataset, config: EstimatorConfig) -> tuple[Ranking, list[RunTrace]]:
    matrix = standardize(dataset, config.mode)
    log.debug("estimating %d universities, %d repetitions", dataset.university_count, config.repetitions)
    return estimate_matrix(matrix, dataset.university_ids, config)
