"""Weight-coded evolutionary algorithms for the 0-1 multidimensional knapsack problem."""

from .coding import BiasConfig, Genotype, Phenotype, evaluate, first_fit_decode
from .ea import EaConfig, RunResult, solve
from .instance import MkpInstance, generate_random, load, parse_orlib, validate
from .lp import LinearProgram, LpSolution, relax_mkp, solve as solve_lp, solve_relaxation

__version__ = "0.1.0"
