import numpy as np
import pytest

from peakshift import SimulationParams, check_sigma_identity, generate_population, run_admissions, simulate
from peakshift.simulator import AssignmentError, Population

from conftest import small_params


def one_per_school(abilities):
    x = np.asarray(abilities, dtype=float)
    n = len(x)
    return Population(x, np.arange(n), x.copy(), x.copy(), np.zeros(n))


def params_for(n_students, n_univ, capacity, window=1.0):
    return SimulationParams(
        school_count=n_students,
        students_per_school=1,
        university_count=n_univ,
        entrants_per_university=capacity,
        ability_window=window,
    )


def test_hand_traced_admissions():
    out = run_admissions(one_per_school([1.0, 0.0, -1.0]), params_for(3, 2, 1), difficulties=[0.5, -0.5])
    assert out.candidates.T.tolist() == [[1, 1, 0], [0, 1, 1]]
    assert out.entrance.T.tolist() == [[1, 0, 0], [0, 1, 0]]
    assert out.acceptance.T.tolist() == [[1, 0, 0], [0, 1, 0]]
    assert out.true_ranks.tolist() == [1, 2]
    assert out.entrant_of.tolist() == [0, 1, -1]


def test_single_student_single_university():
    out = run_admissions(one_per_school([0.2]), params_for(1, 1, 1), difficulties=[0.0])
    assert out.candidates.sum() == out.entrance.sum() == out.acceptance.sum() == 1


def test_student_outside_every_window():
    out = run_admissions(one_per_school([0.0, 5.0]), params_for(2, 2, 5), difficulties=[0.3, -0.4])
    assert out.candidates[1].sum() == out.entrance[1].sum() == out.acceptance[1].sum() == 0
    assert out.entrant_of[1] == -1


def test_zero_entrant_university_flagged():
    # the harder university takes the only candidate
    out = run_admissions(one_per_school([0.0]), params_for(1, 2, 1), difficulties=[0.1, -0.1])
    assert out.zero_entrant.tolist() == [False, True]
    assert out.entrance[:, 1].sum() == 0


@pytest.mark.parametrize(
    "sa, se, ok", [(0.8, 0.6, True), (1.0, 0.0, True), (0.0, 1.0, True), (0.5, 0.5, False), (0.8, 0.61, False)]
)
def test_sigma_identity(sa, se, ok):
    assert check_sigma_identity(sa, se) is ok


def test_sigma_identity_rejects_negative():
    with pytest.raises(ValueError):
        check_sigma_identity(-0.8, 0.6)


def test_params_reject_bad_sigma():
    with pytest.raises(ValueError):
        SimulationParams(sigma_a=0.5, sigma_e=0.5)
    with pytest.raises(ValueError):
        SimulationParams(school_count=0)


def test_default_scale():
    p = SimulationParams()
    assert p.student_count == 286_000
    assert (p.school_count, p.university_count, p.entrants_per_university) == (1100, 160, 1600)


def test_single_school():
    # one school holds the whole population, so its spread is about 1
    p = small_params(3, school_count=1, students_per_school=300, school_sigma_limit=0.6)
    pop = generate_population(p)
    assert set(pop.school_of.tolist()) == {0}
    assert pop.realized_stds[0] == pytest.approx(pop.abilities.std())


def test_retry_budget_exhausted():
    # a zero limit cannot be met by any realistic assignment
    with pytest.raises(AssignmentError):
        generate_population(small_params(0, school_sigma_limit=0.0, max_assignment_retries=3))


def test_deterministic():
    a, b = simulate(small_params(5)), simulate(small_params(5))
    assert np.array_equal(a.acceptance, b.acceptance)
    assert np.array_equal(a.population.abilities, b.population.abilities)
    assert not np.array_equal(a.acceptance, simulate(small_params(6)).acceptance)


@pytest.fixture(scope="module")
def full_population():
    return generate_population(SimulationParams(rng_seed=2024))


def test_full_scale_variance_decomposition(full_population):
    pop = full_population
    assert abs(pop.abilities.var() - 1.0) < 0.05
    assert abs(pop.realized_means.std() - 0.8) < 0.05
    pooled = np.sqrt(np.mean(pop.realized_stds**2))
    assert abs(pooled - 0.6) < 0.05
    assert np.all(np.abs(pop.realized_stds - 0.6) <= 1.96 * 0.20)
    assert np.all(np.bincount(pop.school_of) == 260)
    # schools are numbered best first
    assert np.all(np.diff(pop.realized_means) <= 0)


def check_invariants(sim, p):
    cand, ent, acc = sim.candidates, sim.entrance, sim.acceptance
    assert np.all(ent <= cand)
    assert np.all(acc >= ent)
    assert np.all(acc <= cand)
    assert np.all(ent.sum(axis=0) <= p.entrants_per_university)
    assert ent.sum() <= min(p.student_count, p.university_count * p.entrants_per_university)
    entered = sim.entrant_of >= 0
    assert entered.sum() == ent.sum()
    # per-student entrance matches the aggregated matrix
    rebuilt = np.zeros_like(ent)
    np.add.at(rebuilt, (sim.population.school_of[entered], sim.entrant_of[entered]), 1)
    assert np.array_equal(rebuilt, ent)
    assert np.all(np.bincount(sim.population.school_of, minlength=p.school_count) == p.students_per_school)
    # candidacy band
    x = sim.population.abilities
    for u in range(p.university_count):
        inside = np.abs(sim.difficulties[u] - x) <= p.ability_window
        assert cand[:, u].sum() == inside.sum()
    # the hardest university admits its most able candidates
    top = int(np.argmin(sim.true_ranks))
    inside = np.flatnonzero(np.abs(sim.difficulties[top] - x) <= p.ability_window)
    best = inside[np.argsort(-x[inside], kind="stable")][: p.entrants_per_university]
    assert set(np.flatnonzero(sim.entrant_of == top)) == set(best.tolist())


@pytest.mark.parametrize("seed", range(100))
def test_invariants_over_seeds(seed):
    p = small_params(seed)
    check_invariants(simulate(p), p)


def test_invariants_full_scale():
    p = SimulationParams(rng_seed=77)
    check_invariants(simulate(p), p)


def test_to_dataset_drops_empty_universities():
    sim = run_admissions(one_per_school([0.0, 3.0]), params_for(2, 3, 1), difficulties=[0.2, -5.0, 2.5])
    ds, dropped = sim.to_dataset()
    assert dropped == ["U2"]
    assert ds.university_ids == ("U1", "U3") or list(ds.university_ids) == ["U1", "U3"]
    assert ds.true_ranking() == {"U3": 1, "U1": 2}
