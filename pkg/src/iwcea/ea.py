"""Steady-state weight-coded evolutionary algorithm (WCEA and IWCEA modes)."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K
from .coding import (IWCEA, LOGNORMAL, UNIFORM, WCEA, BiasConfig, DecodeContext,
                     Genotype, Phenotype, SurrogateMultipliers)
from .instance import MkpInstance

log = logging.getLogger(__name__)

PER_GENE = "per_gene"
ONE_GENE = "one"

MAX_EVALS = "max_evals"
CONVERGED = "converged"


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based stream for one run; distinct seeds give independent streams."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class EaConfig:
    """Engine parameters. ``mutation`` and ``bias`` default from ``mode``."""

    mode: str = IWCEA
    pop_size: int = 100
    max_evals: int = 10**6
    mutation: Optional[str] = None
    bias: Optional[BiasConfig] = None
    gamma: float = 0.05
    seed: int = 0
    reject_cap: int = 10**5
    repair_attempts: int = 200

    def __post_init__(self):
        if self.mode not in (WCEA, IWCEA):
            raise ValueError(f"mode must be 'wcea' or 'iwcea', got {self.mode!r}")
        if self.pop_size < 2:
            raise ValueError("pop_size must be at least 2")
        if self.max_evals < 1:
            raise ValueError("max_evals must be at least 1")
        if self.mutation is None:
            object.__setattr__(self, "mutation", PER_GENE if self.mode == WCEA else ONE_GENE)
        if self.mutation not in (PER_GENE, ONE_GENE):
            raise ValueError(f"unknown mutation policy {self.mutation!r}")
        if self.bias is None:
            scheme = LOGNORMAL if self.mode == WCEA else UNIFORM
            object.__setattr__(self, "bias", BiasConfig(scheme, self.gamma))
        if self.reject_cap < 1:
            raise ValueError("reject_cap must be positive")

    def mutation_args(self, inst: MkpInstance):
        policy = K.MUTATE_PER_GENE if self.mutation == PER_GENE else K.MUTATE_ONE
        return self.bias.sampler, policy, 3.0 / inst.n, self.bias.upper(inst), self.bias.log1pg


class Population:
    """N evaluated members with pairwise-distinct phenotypes plus the incumbent S*.

    Arrays are preallocated to ``capacity``; only the first ``size`` rows are
    live (``size`` drops below N only when the instance does not admit N
    distinct decoded phenotypes).
    """

    def __init__(self, ctx: DecodeContext, W, X, F, H):
        self.ctx = ctx
        self.W = W
        self.X = X
        self.F = F
        self.H = H
        self.size = F.size
        k = int(np.argmax(F))
        self._best = np.array([F[k], k], dtype=np.float64)
        self.best_w = W[k].copy()
        self.best_x = X[k].copy()

    @classmethod
    def from_genotypes(cls, ctx: DecodeContext, genotypes: Sequence, cfg: EaConfig,
                       rng: np.random.Generator) -> "Population":
        """Evaluate an initial population, mutating duplicates until distinct.

        A member that still duplicates another after ``cfg.repair_attempts``
        mutations is dropped.
        """
        inst = ctx.inst
        n = inst.n
        margs = cfg.mutation_args(inst)
        W, X, F, H = [], [], [], []
        seen = {}
        dropped = 0
        for g in genotypes:
            w = np.array(g.w if isinstance(g, Genotype) else g, dtype=np.float64)
            x = np.zeros(n, dtype=np.uint8)
            for _ in range(cfg.repair_attempts + 1):
                f, h = ctx.decode_into(w, x)
                if not any(np.array_equal(X[i], x) for i in seen.get(int(h), ())):
                    break
                K.mutate_inplace(rng, w, *margs)
            else:
                dropped += 1
                continue
            seen.setdefault(int(h), []).append(len(X))
            W.append(w)
            X.append(x)
            F.append(f)
            H.append(h)
        if dropped:
            log.warning("%s: %d of %d initial members dropped; only %d distinct phenotypes found",
                        inst.name, dropped, len(genotypes), len(X))
        if not X:
            raise ValueError("empty initial population")
        return cls(ctx, np.array(W), np.array(X, dtype=np.uint8), np.array(F, dtype=np.float64),
                   np.array(H, dtype=np.uint64))

    @property
    def best_fitness(self) -> float:
        return float(self._best[0])

    def phenotypes(self) -> list:
        return [Phenotype(self.X[i].copy(), float(self.F[i]), int(self.H[i])) for i in range(self.size)]

    def worst(self) -> int:
        return int(K.worst_index(self.F, self.size))

    def check(self, members=None):
        """Assert the engine invariants; used by debug runs and tests.

        Args:
            members: indices whose genotype, phenotype and fitness are
                re-verified; all members when None.
        """
        inst = self.ctx.inst
        X = self.X[: self.size]
        assert len({x.tobytes() for x in X}) == self.size, "duplicate phenotypes in population"
        for i in range(self.size) if members is None else members:
            assert np.all(inst.r @ X[i] <= inst.b), f"member {i} infeasible"
            assert self.F[i] == inst.fitness(X[i]), f"member {i} fitness mismatch"
            redecoded = self.ctx.decode(self.W[i])
            assert np.array_equal(redecoded.x, X[i]), f"member {i} genotype/phenotype mismatch"
        assert self.best_fitness >= self.F[: self.size].max(), "S* worse than a member"
        assert inst.fitness(self.best_x) == self.best_fitness


@dataclass(frozen=True)
class StepOutcome:
    accepted: bool
    replaced: int = -1

    @property
    def rejected_duplicate(self) -> bool:
        return not self.accepted


def tournament_select(pop: Population, rng: np.random.Generator) -> tuple:
    """Indices of two parents, each the winner of an independent binary tournament."""
    return (int(K.tournament(rng, pop.F, pop.size)), int(K.tournament(rng, pop.F, pop.size)))


def uniform_crossover(p1, p2, rng: np.random.Generator) -> Genotype:
    w1 = p1.w if isinstance(p1, Genotype) else np.asarray(p1, dtype=np.float64)
    w2 = p2.w if isinstance(p2, Genotype) else np.asarray(p2, dtype=np.float64)
    if w1.shape != w2.shape:
        raise ValueError("parents differ in length")
    take_first = rng.random(w1.size) < 0.5
    return Genotype(np.where(take_first, w1, w2))


def mutate(child, cfg: EaConfig, inst: MkpInstance, rng: np.random.Generator) -> Genotype:
    w = np.array(child.w if isinstance(child, Genotype) else child, dtype=np.float64)
    K.mutate_inplace(rng, w, *cfg.mutation_args(inst))
    return Genotype(w)


def step(pop: Population, inst: MkpInstance, cfg: EaConfig, rng: np.random.Generator,
         _buffers=None) -> StepOutcome:
    """One selection/crossover/mutation/evaluation/replacement attempt.

    A child whose phenotype already exists in the population is discarded
    and the population is left untouched. Otherwise it replaces the worst
    member (lowest index on ties) and S* is updated if it improved.
    """
    ctx = pop.ctx
    if _buffers is None:
        _buffers = (np.empty(inst.n), np.zeros(inst.n, dtype=np.uint8))
    cw, cx = _buffers
    before = pop._best[0]
    k = K.attempt(rng, pop.W, pop.X, pop.F, pop.H, pop.size, inst.p, ctx.rT, inst.b,
                  ctx.inv_den, ctx.tier2, ctx.key_kind, ctx.zkeys, *cfg.mutation_args(inst),
                  cw, cx, pop._best)
    if k < 0:
        return StepOutcome(False)
    if pop._best[0] > before:
        pop.best_w = pop.W[k].copy()
        pop.best_x = pop.X[k].copy()
    return StepOutcome(True, int(k))


@dataclass
class RunResult:
    """Outcome of one run. ``gap`` is available once ``lp_bound`` is set."""

    instance: str
    algorithm: str
    seed: int
    best_fitness: float
    best_x: np.ndarray = field(repr=False)
    evaluations: int
    accepted: int
    rejected: int
    status: str
    wall_time: float
    pop_size: int = 0
    initial_best: float = float("nan")
    lp_bound: Optional[float] = None
    trace: Optional[list] = field(default=None, repr=False)

    @property
    def gap(self) -> float:
        from .bench import gap

        if self.lp_bound is None:
            raise ValueError("lp_bound not set")
        return gap(self.best_fitness, self.lp_bound)


def run(inst: MkpInstance, cfg: EaConfig, pop: Population, rng: np.random.Generator,
        debug: bool = False) -> RunResult:
    """Evolve ``pop`` until ``cfg.max_evals`` children were accepted or the
    population stops producing new phenotypes (``cfg.reject_cap`` consecutive
    duplicates).

    With ``debug`` the loop runs step by step from Python, checking the engine
    invariants after every attempt and recording the S* trajectory; it
    consumes the random stream identically to the compiled loop.
    """
    start = time.perf_counter()
    initial_best = pop.best_fitness
    if debug:
        counters, converged, trace = _run_debug(inst, cfg, pop, rng)
    else:
        ctx = pop.ctx
        counters = np.zeros(2, dtype=np.int64)
        trace = None
        converged = K.run_loop(rng, pop.W, pop.X, pop.F, pop.H, pop.size, inst.p, ctx.rT,
                               inst.b, ctx.inv_den, ctx.tier2, ctx.key_kind, ctx.zkeys,
                               *cfg.mutation_args(inst), cfg.max_evals, cfg.reject_cap,
                               pop._best, pop.best_w, pop.best_x, counters)
    elapsed = time.perf_counter() - start
    t, rejected = int(counters[0]), int(counters[1])
    if converged:
        log.info("%s: stopped after %d consecutive duplicates at t=%d", inst.name, cfg.reject_cap, t)
    return RunResult(
        instance=inst.name,
        algorithm=cfg.mode,
        seed=cfg.seed,
        best_fitness=pop.best_fitness,
        best_x=pop.best_x.copy(),
        evaluations=t,
        accepted=t,
        rejected=rejected,
        status=CONVERGED if converged else MAX_EVALS,
        wall_time=elapsed,
        pop_size=pop.size,
        initial_best=initial_best,
        trace=trace,
    )


def _run_debug(inst, cfg, pop, rng):
    buffers = (np.empty(inst.n), np.zeros(inst.n, dtype=np.uint8))
    pop.check()
    t = rejected = consecutive = 0
    trace = [pop.best_fitness]
    while t < cfg.max_evals:
        snapshot = (pop.F[: pop.size].copy(), pop.H[: pop.size].copy())
        out = step(pop, inst, cfg, rng, buffers)
        if out.accepted:
            t += 1
            consecutive = 0
        else:
            rejected += 1
            consecutive += 1
            assert np.array_equal(snapshot[0], pop.F[: pop.size])
            assert np.array_equal(snapshot[1], pop.H[: pop.size])
        assert pop.best_fitness >= trace[-1], "S* decreased"
        trace.append(pop.best_fitness)
        # only the replaced member changed, so only it needs re-decoding
        pop.check([out.replaced] if out.accepted else [])
        if consecutive >= cfg.reject_cap:
            break
    pop.check()
    return np.array([t, rejected]), consecutive >= cfg.reject_cap, trace


def solve(inst: MkpInstance, cfg: EaConfig, lp_solution=None, z: Optional[float] = None,
          debug: bool = False) -> RunResult:
    """Initialize per ``cfg.mode`` and run; fills in ``lp_bound``.

    WCEA starts from random log-normal weights and decodes with the LP
    duals as surrogate multipliers. IWCEA starts from hyperplane-LP seeds
    and decodes by biased profit.
    """
    from . import initialization as init
    from .lp import solve_relaxation, surrogate_multipliers

    relax = lp_solution or solve_relaxation(inst)
    rng = make_rng(cfg.seed)
    if cfg.mode == WCEA:
        ctx = DecodeContext.build(inst, WCEA, SurrogateMultipliers(surrogate_multipliers(inst, relax)))
        genotypes = init.random_population(inst, cfg.pop_size, cfg.bias, rng)
    else:
        ctx = DecodeContext.build(inst, IWCEA)
        genotypes = init.iwcea_population(inst, cfg.pop_size, rng, z=z, relax=relax)
    pop = Population.from_genotypes(ctx, genotypes, cfg, rng)
    result = run(inst, cfg, pop, rng, debug=debug)
    result.lp_bound = relax.objective
    return result
