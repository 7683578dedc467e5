"""Initial populations: hyperplane-LP seeds (IWCEA) and random weights (WCEA)."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coding import (UNIFORM, WCEA, BiasConfig, DecodeContext, Genotype, SurrogateMultipliers,
                     first_fit_decode)
from .instance import MkpInstance
from .lp import LpError, bounds_lp, hyperplane_lp, solve, solve_relaxation, surrogate_multipliers

log = logging.getLogger(__name__)

OK = "ok"
CUT_INFEASIBLE = "cut_infeasible"


@dataclass(frozen=True)
class InitBounds:
    z: float
    k_min: float = float("nan")
    k_max: float = float("nan")
    status: str = OK


def greedy_lower_bound(inst: MkpInstance, relax=None) -> tuple:
    """Unbiased surrogate-ratio greedy: first-fit by ``p_j / sum_i a_i r_ij``.

    Returns ``(z, phenotype)``. Items with zero surrogate consumption go last.
    """
    relax = relax or solve_relaxation(inst)
    a = SurrogateMultipliers(surrogate_multipliers(inst, relax))
    ph = DecodeContext.build(inst, WCEA, a).decode(np.ones(inst.n))
    return ph.fitness, ph


def compute_bounds(inst: MkpInstance, z: float) -> InitBounds:
    """Range of ``sum_j x_j`` over LP points that beat ``z`` by at least 1."""
    hi = solve(bounds_lp(inst, z, "max"))
    lo = solve(bounds_lp(inst, z, "min"))
    if not (hi.optimal and lo.optimal):
        return InitBounds(z, status=CUT_INFEASIBLE)
    k_min, k_max = lo.objective, hi.objective
    if k_min > k_max:
        raise LpError(f"k_min {k_min} exceeds k_max {k_max}")
    return InitBounds(z, k_min, k_max)


def lp_seed_population(inst: MkpInstance, bounds: InitBounds, N: int,
                       rng: np.random.Generator) -> list:
    """Solve N hyperplane LPs with ``k'`` uniform in ``[k_min, k_max]``; the
    genotype is the LP point itself."""
    if bounds.status != OK:
        raise ValueError("LP seeding needs feasible bounds")
    ks = rng.uniform(bounds.k_min, bounds.k_max, size=N)
    return [lp_seed(inst, k) for k in ks]


def lp_seed(inst: MkpInstance, k: float) -> Genotype:
    sol = solve(hyperplane_lp(inst, k))
    if not sol.optimal:
        raise LpError(f"hyperplane LP with k={k!r} is {sol.status}")
    return Genotype(sol.x)


def random_population(inst: MkpInstance, N: int, bias: BiasConfig,
                      rng: np.random.Generator) -> list:
    """N genotypes with every gene drawn from the bias scheme's sampler."""
    if N < 1:
        raise ValueError("N must be positive")
    if bias.scheme == UNIFORM:
        upper = bias.upper(inst)
        return [Genotype(rng.random(inst.n) * upper) for _ in range(N)]
    return [Genotype(np.exp(rng.standard_normal(inst.n) * bias.log1pg)) for _ in range(N)]


def iwcea_population(inst: MkpInstance, N: int, rng: np.random.Generator,
                     z: Optional[float] = None, relax=None) -> list:
    """LP-guided seeds; falls back to uniform random weights when no LP point
    can beat ``z``."""
    relax = relax or solve_relaxation(inst)
    greedy = None
    if z is None:
        z, greedy = greedy_lower_bound(inst, relax)
    bounds = compute_bounds(inst, z)
    if bounds.status != OK:
        log.info("%s: no LP point reaches z+1=%g; greedy solution is within 1 of optimal",
                 inst.name, z + 1)
        return random_population(inst, N, BiasConfig(UNIFORM, p_max=inst.p_max), rng)
    seeds = lp_seed_population(inst, bounds, N, rng)
    best = max(first_fit_decode(inst, inst.p * g.w).fitness for g in seeds)
    if best < z:
        log.warning("%s: best LP seed decodes to %g, below greedy bound %g", inst.name, best, z)
    return seeds

