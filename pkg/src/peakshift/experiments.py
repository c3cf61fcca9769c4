"""Simulation study, dropped-school robustness sweep and university ablation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .estimator import EstimatorConfig, estimate
from .metrics import margin_hits, rank_heatmap, spearman_rho
from .simulator import SimulationParams, simulate

log = logging.getLogger(__name__)

DEFAULT_MARGINS = (0, 10, 20, 40)


class ExperimentError(RuntimeError):
    pass


def _derive(master: int, *key: int) -> int:
    ss = np.random.SeedSequence(entropy=master, spawn_key=tuple(key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _truth_of(dataset: Dataset, truth: dict | None) -> dict:
    truth = truth if truth is not None else dataset.true_ranking()
    if truth is None:
        raise ExperimentError("no true ranking supplied and the dataset carries none")
    missing = [u for u in dataset.university_ids if u not in truth]
    if missing:
        raise ExperimentError(f"true ranking lacks universities: {missing[:10]}")
    return truth


def score(ranking, truth: dict) -> float:
    """Spearman's rho between a ranking and the truth on the ranking's universities."""
    return spearman_rho([truth[u] for u in ranking.ids], list(ranking.ranks))


def dense_pairs(ranking, truth: dict) -> tuple[np.ndarray, np.ndarray]:
    """(true, estimated) ranks re-numbered 1..n over the ranked universities."""
    t = np.array([truth[u] for u in ranking.ids], dtype=float)
    dense = np.empty(len(t), dtype=np.int64)
    dense[np.argsort(t, kind="stable")] = np.arange(1, len(t) + 1)
    return dense, np.asarray(ranking.ranks, dtype=np.int64)


@dataclass
class SweepCell:
    ratio: float
    replicate: int
    seed: int
    rho: float
    schools: int
    excluded: list = field(default_factory=list)


@dataclass
class SweepResult:
    cells: list[SweepCell]

    def summary(self) -> dict[float, tuple[float, float]]:
        """ratio -> (mean rho, population std of rho)."""
        out = {}
        for ratio in sorted({c.ratio for c in self.cells}):
            rhos = np.array([c.rho for c in self.cells if c.ratio == ratio])
            out[ratio] = (float(rhos.mean()), float(rhos.std()))
        return out


def dropped_schools_sweep(
    dataset: Dataset,
    truth: dict | None,
    ratios: Sequence[float],
    config: EstimatorConfig,
    replicates: int = 1,
    seed: int = 0,
) -> SweepResult:
    """Re-estimate after removing a random share of schools.

    Each (ratio, replicate) cell draws its own subset. Universities that
    lose every acceptance are left out of that cell and listed.
    """
    truth = _truth_of(dataset, truth)
    for r in ratios:
        if not 0.0 <= r < 1.0:
            raise ExperimentError(f"drop ratio {r} outside [0, 1)")
    cells = []
    for ri, ratio in enumerate(ratios):
        for rep in range(replicates):
            cell_seed = _derive(seed, ri, rep)
            count = int(np.floor(ratio * dataset.school_count))
            rows = np.random.default_rng(cell_seed).choice(dataset.school_count, count, replace=False)
            reduced = dataset.drop_schools(np.sort(rows))
            lost = [u for u in dataset.university_ids if u not in set(reduced.university_ids)]
            if set(config.seed_university_ids) & set(lost):
                raise ExperimentError(f"ratio {ratio}: seed universities lost all acceptances")
            ranking, _ = estimate(reduced, config)
            cells.append(SweepCell(ratio, rep, cell_seed, score(ranking, truth), reduced.school_count, lost))
            log.info("ratio %.2f replicate %d: rho %.4f", ratio, rep, cells[-1].rho)
    return SweepResult(cells)


@dataclass
class AblationRow:
    university_id: object
    rho: float
    estimated_rank: int
    true_rank: int

    @property
    def diff(self) -> int:
        return self.estimated_rank - self.true_rank


@dataclass
class AblationResult:
    baseline_rho: float
    rows: list[AblationRow]
    skipped: list = field(default_factory=list)


def drop_one_university(dataset: Dataset, truth: dict | None, config: EstimatorConfig) -> AblationResult:
    """Re-estimate with each non-seed university removed in turn.

    Ranks reported per row are the dropped university's ranks in the full
    run; rows come sorted by rho, highest first.
    """
    truth = _truth_of(dataset, truth)
    if dataset.university_count < 3:
        raise ExperimentError("need at least three universities")
    baseline, _ = estimate(dataset, config)
    full_est = baseline.as_dict()
    full_true = dict(zip(baseline.ids, dense_pairs(baseline, truth)[0].tolist()))
    seeds = set(config.seed_university_ids)
    rows, skipped = [], []
    for uid in dataset.university_ids:
        if uid in seeds:
            skipped.append(uid)
            continue
        reduced = dataset.drop_universities([uid])
        ranking, _ = estimate(reduced, config)
        rows.append(AblationRow(uid, score(ranking, truth), full_est[uid], full_true[uid]))
    order = {u: j for j, u in enumerate(dataset.university_ids)}
    rows.sort(key=lambda r: (-r.rho, order[r.university_id]))
    return AblationResult(score(baseline, truth), rows, skipped)


@dataclass
class StudyRun:
    sim_seed: int
    rho: float
    true: np.ndarray
    estimated: np.ndarray
    dropped: list


@dataclass
class StudyResult:
    runs: list[StudyRun]
    heatmap: np.ndarray
    margins: tuple[int, ...]
    # margin -> accuracy per true rank, pooled over datasets
    curves: dict[int, np.ndarray]

    @property
    def rhos(self) -> np.ndarray:
        return np.array([r.rho for r in self.runs])

    def pooled_accuracy(self, margin: int) -> float:
        hits = np.concatenate([margin_hits(r.true, r.estimated, margin) for r in self.runs])
        return float(hits.mean())


def simulation_study(
    params: SimulationParams,
    n_datasets: int,
    config: EstimatorConfig,
    margins: Sequence[int] = DEFAULT_MARGINS,
    seed: int = 0,
    keep_datasets: bool = False,
) -> tuple[StudyResult, list]:
    """Simulate, estimate and score ``n_datasets`` independent datasets.

    The top true university of each dataset seeds its estimation. Returns
    the study and, with ``keep_datasets``, the (dataset, simulation) pairs.
    """
    if n_datasets < 1:
        raise ExperimentError("n_datasets must be >= 1")
    size = params.university_count
    heatmap = np.zeros((size, size), dtype=np.int64)
    sums = {m: np.zeros(size) for m in margins}
    counts = np.zeros(size)
    runs, kept = [], []
    for k in range(n_datasets):
        sim_seed = _derive(seed, k) % (2**63)
        sim = simulate(replace(params, rng_seed=sim_seed))
        dataset, dropped = sim.to_dataset()
        truth = dataset.true_ranking()
        cfg = replace(config, seed_university_ids=(sim.top_university(),))
        ranking, _ = estimate(dataset, cfg)
        true, est = dense_pairs(ranking, truth)
        rho = spearman_rho(true, est)
        runs.append(StudyRun(sim_seed, rho, true, est, dropped))
        heatmap[: len(true), : len(true)] += rank_heatmap(true, est, len(true))
        for m in margins:
            sums[m][: len(true)] += margin_hits(true, est, m)
        counts[: len(true)] += 1
        if keep_datasets:
            kept.append((dataset, sim))
        log.info("dataset %d: rho %.4f", k, rho)
    with np.errstate(invalid="ignore"):
        curves = {m: sums[m] / counts for m in margins}
    return StudyResult(runs, heatmap, tuple(margins), curves), kept
