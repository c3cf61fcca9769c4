"""Synthetic admissions data with known examination difficulties.

Students draw a standard-normal ability and are placed into fixed-size
high schools whose mean abilities follow N(0, sigma_a^2); each student then
applies to every university whose difficulty lies within a window of their
ability. Universities fill their seats in descending order of difficulty,
taking the most able unplaced candidates, and finally count as accepted
every candidate at least as able as their weakest entrant.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, HighSchool, University, build_dataset

log = logging.getLogger(__name__)

SIGMA_TOLERANCE = 1e-9


class AssignmentError(RuntimeError):
    """No school assignment met the dispersion limit within the retry budget."""


def check_sigma_identity(sigma_a: float, sigma_e: float, tol: float = SIGMA_TOLERANCE) -> bool:
    """True when between- and within-school variances add up to one."""
    if sigma_a < 0 or sigma_e < 0:
        raise ValueError("standard deviations must be non-negative")
    return abs(sigma_a**2 + sigma_e**2 - 1.0) <= tol


@dataclass(frozen=True)
class SimulationParams:
    school_count: int = 1100
    students_per_school: int = 260
    sigma_a: float = 0.8
    sigma_e: float = 0.6
    school_sigma_limit: float = 1.96 * 0.20
    university_count: int = 160
    entrants_per_university: int = 1600
    ability_window: float = 1.0
    rng_seed: int = 0
    max_assignment_retries: int = 1000

    def __post_init__(self):
        for name in ("school_count", "students_per_school", "university_count", "entrants_per_university"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not check_sigma_identity(self.sigma_a, self.sigma_e):
            raise ValueError(
                f"sigma_a^2 + sigma_e^2 must equal 1, got {self.sigma_a**2 + self.sigma_e**2:.12g}"
            )
        if self.ability_window < 0 or self.school_sigma_limit < 0:
            raise ValueError("window and sigma limit must be non-negative")

    @property
    def student_count(self) -> int:
        return self.school_count * self.students_per_school


@dataclass(eq=False)
class Population:
    abilities: np.ndarray
    # school index per student; schools are numbered by realized mean, best first
    school_of: np.ndarray
    drawn_means: np.ndarray
    realized_means: np.ndarray
    realized_stds: np.ndarray
    attempts: int = 1

    @property
    def school_count(self) -> int:
        return len(self.realized_means)


@dataclass(eq=False)
class SimulationOutput:
    candidates: np.ndarray
    entrance: np.ndarray
    acceptance: np.ndarray
    difficulties: np.ndarray
    # 1 = hardest examination
    true_ranks: np.ndarray
    population: Population
    entrant_of: np.ndarray = field(repr=False)
    zero_entrant: np.ndarray = field(repr=False)
    params: SimulationParams | None = None

    @property
    def school_ids(self) -> list[str]:
        width = len(str(self.candidates.shape[0]))
        return [f"H{i + 1:0{width}d}" for i in range(self.candidates.shape[0])]

    @property
    def university_ids(self) -> list[str]:
        width = len(str(self.candidates.shape[1]))
        return [f"U{j + 1:0{width}d}" for j in range(self.candidates.shape[1])]

    def top_university(self) -> str:
        return self.university_ids[int(np.argmin(self.true_ranks))]

    def to_dataset(self) -> tuple[Dataset, list[str]]:
        """Dataset of schools and universities with at least one acceptance.

        Returns the dataset and the ids of universities left out. True ranks
        are renumbered 1..n over the universities kept.
        """
        sizes = np.bincount(self.population.school_of, minlength=self.candidates.shape[0])
        alive = self.acceptance.sum(axis=0) > 0
        uids = self.university_ids
        kept = np.flatnonzero(alive)
        dense = np.empty(len(kept), dtype=int)
        dense[np.argsort(self.true_ranks[kept], kind="stable")] = np.arange(1, len(kept) + 1)
        capacity = self.params.entrants_per_university if self.params else int(self.entrance.sum(0).max())
        universities = [University(uids[j], capacity, int(r)) for j, r in zip(kept, dense)]
        schools = [HighSchool(sid, int(c)) for sid, c in zip(self.school_ids, sizes)]
        dropped = [uids[j] for j in np.flatnonzero(~alive)]
        if dropped:
            log.warning("universities without acceptances left out: %s", dropped)
        return build_dataset(schools, universities, self.acceptance[:, kept]), dropped

    def truth(self) -> dict[str, int]:
        return dict(zip(self.university_ids, (int(r) for r in self.true_ranks)))


def _assign(abilities, means, per_school, sigma_a, sigma_e, rng):
    """Stochastic, capacity-exact placement of students near a school's mean.

    Each student gets a latent school level z = sigma_a^2 x + sigma_a sigma_e eps,
    so that x | z ~ N(z, sigma_e^2) and z ~ N(0, sigma_a^2). Students sorted by
    z fill the schools in order of their drawn mean, per_school at a time.
    """
    z = sigma_a**2 * abilities + sigma_a * sigma_e * rng.standard_normal(len(abilities))
    by_level = np.argsort(-z, kind="stable")
    by_mean = np.argsort(-means, kind="stable")
    school_of = np.empty(len(abilities), dtype=np.int64)
    school_of[by_level] = np.repeat(by_mean, per_school)
    return school_of


def generate_population(params: SimulationParams, rng: np.random.Generator | None = None) -> Population:
    rng = np.random.default_rng(params.rng_seed) if rng is None else rng
    k = params.school_count
    abilities = rng.standard_normal(params.student_count)
    means = rng.normal(0.0, params.sigma_a, k)

    for attempt in range(1, params.max_assignment_retries + 1):
        school_of = _assign(abilities, means, params.students_per_school, params.sigma_a, params.sigma_e, rng)
        sizes = np.bincount(school_of, minlength=k)
        realized = np.bincount(school_of, weights=abilities, minlength=k) / sizes
        sq = np.bincount(school_of, weights=abilities**2, minlength=k) / sizes
        stds = np.sqrt(np.maximum(sq - realized**2, 0.0))
        bad = np.flatnonzero(np.abs(stds - params.sigma_e) > params.school_sigma_limit)
        if bad.size == 0:
            break
        log.debug("attempt %d: %d schools outside the dispersion limit", attempt, bad.size)
    else:
        raise AssignmentError(
            f"{bad.size} schools still violate the limit after {params.max_assignment_retries} "
            f"attempts; std-devs: {np.round(stds[bad], 3).tolist()[:20]}"
        )

    # rank schools by realized mean ability, best first
    order = np.argsort(-realized, kind="stable")
    relabel = np.empty(k, dtype=np.int64)
    relabel[order] = np.arange(k)
    return Population(
        abilities=abilities,
        school_of=relabel[school_of],
        drawn_means=means[order],
        realized_means=realized[order],
        realized_stds=stds[order],
        attempts=attempt,
    )


def run_admissions(
    population: Population,
    params: SimulationParams,
    rng: np.random.Generator | None = None,
    difficulties: np.ndarray | None = None,
) -> SimulationOutput:
    if difficulties is None:
        rng = np.random.default_rng(params.rng_seed) if rng is None else rng
        difficulties = rng.standard_normal(params.university_count)
    difficulties = np.asarray(difficulties, dtype=float)
    n_univ = len(difficulties)
    x = population.abilities
    k = population.school_count

    by_ability = np.argsort(-x, kind="stable")
    x_sorted = x[by_ability]
    placed = np.zeros(len(x), dtype=bool)
    entrant_of = np.full(len(x), -1, dtype=np.int64)
    shape = (k, n_univ)
    candidates = np.zeros(shape, dtype=np.int64)
    entrance = np.zeros(shape, dtype=np.int64)
    acceptance = np.zeros(shape, dtype=np.int64)
    zero_entrant = np.zeros(n_univ, dtype=bool)
    school_sorted = population.school_of[by_ability]

    # descending difficulty, ties by index
    for u in np.argsort(-difficulties, kind="stable"):
        d = difficulties[u]
        # candidates form a contiguous block of the ability-sorted students
        lo = np.searchsorted(-x_sorted, -(d + params.ability_window), side="left")
        hi = np.searchsorted(-x_sorted, -(d - params.ability_window), side="right")
        block = np.arange(lo, hi)
        free = block[~placed[block]][: params.entrants_per_university]
        placed[free] = True
        entrant_of[by_ability[free]] = u
        candidates[:, u] = np.bincount(school_sorted[block], minlength=k)
        entrance[:, u] = np.bincount(school_sorted[free], minlength=k)
        if free.size:
            accepted = block[x_sorted[block] >= x_sorted[free[-1]]]
        else:
            # every candidate was taken by a harder university; none was refused
            zero_entrant[u] = True
            accepted = block
        acceptance[:, u] = np.bincount(school_sorted[accepted], minlength=k)

    if zero_entrant.any():
        log.warning("%d universities admitted nobody", int(zero_entrant.sum()))
    true_ranks = np.empty(n_univ, dtype=np.int64)
    true_ranks[np.argsort(-difficulties, kind="stable")] = np.arange(1, n_univ + 1)
    return SimulationOutput(
        candidates=candidates,
        entrance=entrance,
        acceptance=acceptance,
        difficulties=difficulties,
        true_ranks=true_ranks,
        population=population,
        entrant_of=entrant_of,
        zero_entrant=zero_entrant,
        params=params,
    )


def simulate(params: SimulationParams) -> SimulationOutput:
    """Population then admissions, all drawn from one generator seeded by ``params``."""
    rng = np.random.default_rng(params.rng_seed)
    population = generate_population(params, rng)
    return run_admissions(population, params, rng)
