from dataclasses import replace

import numpy as np
import pytest

from iwcea.bench import brute_force_opt
from iwcea.coding import IWCEA, WCEA, DecodeContext, Genotype, SurrogateMultipliers
from iwcea.ea import (CONVERGED, MAX_EVALS, ONE_GENE, PER_GENE, EaConfig, Population, make_rng,
                      mutate, run, solve, step, tournament_select, uniform_crossover)
from iwcea.initialization import random_population
from iwcea.instance import generate_random
from iwcea.lp import solve_relaxation

from conftest import small_instance


@pytest.fixture(scope="module")
def mid():
    return generate_random(60, 4, 0.5, 21)


def _population(inst, mode=IWCEA, size=20, seed=0):
    cfg = EaConfig(mode=mode, pop_size=size, seed=seed)
    a = SurrogateMultipliers(np.maximum(solve_relaxation(inst).duals, 0)) if mode == WCEA else None
    ctx = DecodeContext.build(inst, mode, a)
    rng = make_rng(seed)
    pop = Population.from_genotypes(ctx, random_population(inst, size, cfg.bias, rng), cfg, rng)
    return pop, cfg, rng


def test_config_defaults():
    cfg = EaConfig()
    assert (cfg.pop_size, cfg.max_evals, cfg.mode, cfg.mutation) == (100, 10**6, IWCEA, ONE_GENE)
    assert cfg.bias.scheme == "uniform"
    w = EaConfig(mode=WCEA)
    assert w.mutation == PER_GENE and w.bias.scheme == "lognormal" and w.bias.gamma == 0.05
    with pytest.raises(ValueError):
        EaConfig(pop_size=1)
    with pytest.raises(ValueError):
        EaConfig(max_evals=0)


def test_tournament_picks_fitter(mid):
    pop, _, rng = _population(mid, size=2)
    winner = int(np.argmax(pop.F))
    for _ in range(50):
        assert tournament_select(pop, rng) == (winner, winner)


def test_tournament_uniform_when_fitness_equal(mid):
    pop, _, rng = _population(mid, size=10)
    pop.F[:] = 1.0
    counts = np.zeros(10)
    same = 0
    for _ in range(5000):
        a, b = tournament_select(pop, rng)
        counts[a] += 1
        counts[b] += 1
        same += a == b
    expected = counts.sum() / 10
    chi2 = ((counts - expected) ** 2 / expected).sum()
    assert chi2 < 27.88  # chi-square, 9 dof, p = 0.001
    assert same > 0  # the two tournaments are independent, so parents may coincide


class MaskRng:
    def __init__(self, u):
        self.u = np.asarray(u)

    def random(self, size):
        assert size == self.u.size
        return self.u


def test_uniform_crossover():
    child = uniform_crossover(Genotype([1, 2, 3]), Genotype([4, 5, 6]), MaskRng([0.1, 0.9, 0.2]))
    assert child.w.tolist() == [1, 5, 3]
    g = Genotype([0.5, 0.25, 2.0])
    assert np.array_equal(uniform_crossover(g, g, np.random.default_rng(0)).w, g.w)
    rng = np.random.default_rng(1)
    p1, p2 = rng.random(500), rng.random(500) + 1
    child = uniform_crossover(p1, p2, rng).w
    assert np.all((child == p1) | (child == p2))
    assert abs((child == p1).mean() - 0.5) < 0.07
    with pytest.raises(ValueError):
        uniform_crossover([1, 2], [1, 2, 3], rng)


def test_iwcea_mutation_changes_one_gene(mid):
    cfg = EaConfig(mode=IWCEA)
    rng = make_rng(3)
    upper = mid.p_max / mid.p
    w = rng.random(mid.n) * upper
    for _ in range(500):
        out = mutate(w, cfg, mid, rng).w
        changed = np.flatnonzero(out != w)
        assert changed.size <= 1
        assert np.all(out >= 0) and np.all(out <= upper)


def test_wcea_mutation_rate():
    inst = generate_random(100, 5, 0.5, 2)
    cfg = EaConfig(mode=WCEA)
    rng = make_rng(4)
    w = np.ones(inst.n)
    counts = [np.count_nonzero(mutate(w, cfg, inst, rng).w != w) for _ in range(10_000)]
    assert 2.85 <= np.mean(counts) <= 3.15


def test_wcea_one_position_flag(mid):
    cfg = EaConfig(mode=WCEA, mutation=ONE_GENE)
    rng = make_rng(5)
    w = np.ones(mid.n)
    assert all(np.count_nonzero(mutate(w, cfg, mid, rng).w != w) == 1 for _ in range(200))


def test_step_improving_child_becomes_best(mid):
    pop, cfg, rng = _population(mid)
    pop.F[:] = -1.0
    pop._best[0] = -1.0
    out = step(pop, mid, cfg, rng)
    assert out.accepted and out.replaced == 0
    assert pop.best_fitness == pop.F[0] > -1
    assert np.array_equal(pop.best_x, pop.X[0])


def test_step_replaces_worst_even_if_child_is_worse(mid):
    pop, cfg, rng = _population(mid)
    pop.F[:] = 1e9
    pop.F[7] = 1e8
    pop._best[0] = 1e9
    out = step(pop, mid, cfg, rng)
    assert out.accepted and out.replaced == 7
    assert pop.F[7] < 1e8 and pop.best_fitness == 1e9


def test_step_duplicate_is_rejected(vh5):
    # the 5-item instance has only 8 maximal phenotypes; all of them fit in the population
    cfg = EaConfig(pop_size=100, seed=1)
    ctx = DecodeContext.build(vh5, IWCEA)
    rng = make_rng(1)
    pop = Population.from_genotypes(ctx, random_population(vh5, 100, cfg.bias, rng), cfg, rng)
    assert pop.size == 8
    before = (pop.W.copy(), pop.X.copy(), pop.F.copy())
    for _ in range(200):
        assert step(pop, vh5, cfg, rng).rejected_duplicate
    assert np.array_equal(before[0], pop.W) and np.array_equal(before[2], pop.F)


def test_initial_duplicates_are_repaired(mid):
    cfg = EaConfig(pop_size=30, seed=2)
    ctx = DecodeContext.build(mid, IWCEA)
    rng = make_rng(2)
    w = rng.random(mid.n)
    pop = Population.from_genotypes(ctx, [w] * 30, cfg, rng)
    assert pop.size == 30
    pop.check()


def test_run_small_instance_finds_optimum(vh5):
    res = solve(vh5, EaConfig(max_evals=10**4, seed=0, reject_cap=5000))
    assert res.best_fitness == 25
    assert res.best_x.tolist() == [0, 0, 1, 1, 1]
    assert res.status == CONVERGED


def test_single_evaluation(mid):
    res = solve(mid, EaConfig(max_evals=1, pop_size=20, seed=3))
    assert res.evaluations == 1 == res.accepted
    assert res.status == MAX_EVALS


def test_same_seed_same_result(mid):
    cfg = EaConfig(mode=WCEA, max_evals=3000, pop_size=30, seed=9)
    a, b = solve(mid, cfg), solve(mid, cfg)
    for field in ("best_fitness", "evaluations", "rejected", "status", "initial_best"):
        assert getattr(a, field) == getattr(b, field)
    assert np.array_equal(a.best_x, b.best_x)


@pytest.mark.parametrize("mode", [IWCEA, WCEA])
def test_debug_loop_matches_compiled_loop(mid, mode):
    cfg = EaConfig(mode=mode, max_evals=1500, pop_size=25, seed=4)
    fast = solve(mid, cfg)
    slow = solve(mid, cfg, debug=True)
    assert (fast.best_fitness, fast.evaluations, fast.rejected) == (
        slow.best_fitness, slow.evaluations, slow.rejected)
    assert np.array_equal(fast.best_x, slow.best_x)
    assert all(a <= b for a, b in zip(slow.trace, slow.trace[1:]))


def test_reject_cap_stops_run(vh5):
    res = solve(vh5, EaConfig(max_evals=100, seed=0, reject_cap=50))
    assert res.status == CONVERGED and res.rejected == 50 and res.evaluations == 0


@pytest.mark.parametrize("seed", range(6))
def test_best_between_oracle_bounds(seed):
    inst = small_instance(seed + 100, n_max=14)
    res = solve(inst, EaConfig(pop_size=20, max_evals=2000, seed=seed, reject_cap=2000))
    opt, _ = brute_force_opt(inst)
    assert res.best_fitness <= opt <= res.lp_bound + 1e-9
    assert inst.is_feasible(res.best_x)
    assert inst.fitness(res.best_x) == res.best_fitness


def test_run_on_prebuilt_population(mid):
    pop, cfg, rng = _population(mid, mode=WCEA, size=15)
    res = run(mid, replace(cfg, max_evals=500), pop, rng)
    assert res.evaluations == 500
    pop.check()
    assert res.best_fitness == pop.best_fitness >= pop.F.max()


def test_population_too_small_for_tournament_pool():
    inst = generate_random(1, 1, 0.5, 0, consumption_range=(0, 0), profit_range=(3, 3))
    # a single item that always fits: exactly one phenotype exists
    res = solve(inst, EaConfig(pop_size=10, max_evals=5, reject_cap=20, seed=0))
    assert res.pop_size == 1 and res.best_fitness == 3
