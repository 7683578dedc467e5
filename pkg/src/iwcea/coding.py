"""Weight-coding: genotypes, profit biasing, pseudo-utilities, first-fit decoding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from . import _kernels as K
from .instance import MkpInstance

LOGNORMAL = "lognormal"
UNIFORM = "uniform"

WCEA = "wcea"
IWCEA = "iwcea"


class ZeroDenominatorError(ZeroDivisionError):
    """Some item has zero surrogate consumption ``sum_i a_i r_ij``."""

    def __init__(self, items):
        super().__init__(f"zero surrogate consumption for items {list(items)}")
        self.items = np.asarray(items)


@dataclass(frozen=True)
class BiasConfig:
    """How weights are sampled.

    ``lognormal`` draws ``(1 + gamma) ** N(0, 1)``; ``uniform`` draws from
    ``[0, p_max / p_j]``.
    """

    scheme: str = UNIFORM
    gamma: float = 0.05
    p_max: Optional[float] = None

    def __post_init__(self):
        if self.scheme not in (LOGNORMAL, UNIFORM):
            raise ValueError(f"unknown bias scheme {self.scheme!r}")
        if self.scheme == LOGNORMAL and not self.gamma > 0:
            raise ValueError("gamma must be positive for log-normal biasing")

    @classmethod
    def for_instance(cls, inst: MkpInstance, scheme: str, gamma: float = 0.05) -> "BiasConfig":
        return cls(scheme, gamma, inst.p_max)

    @property
    def sampler(self) -> int:
        return K.SAMPLE_UNIFORM if self.scheme == UNIFORM else K.SAMPLE_LOGNORMAL

    @property
    def log1pg(self) -> float:
        return math.log1p(self.gamma)

    def upper(self, inst: MkpInstance) -> np.ndarray:
        p_max = self.p_max if self.p_max is not None else inst.p_max
        return p_max / inst.p


@dataclass(frozen=True, eq=False)
class SurrogateMultipliers:
    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64).ravel()
        if np.any(a < 0) or not np.all(np.isfinite(a)):
            raise ValueError("surrogate multipliers must be finite and nonnegative")
        object.__setattr__(self, "a", a)

    def denominators(self, inst: MkpInstance) -> np.ndarray:
        if self.a.size != inst.m:
            raise ValueError(f"expected {inst.m} multipliers, got {self.a.size}")
        return self.a @ inst.r


@dataclass(frozen=True, eq=False)
class Genotype:
    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64).ravel()
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        object.__setattr__(self, "w", w)

    def __len__(self):
        return self.w.size


@dataclass(frozen=True, eq=False)
class Phenotype:
    """Decoded 0/1 solution, its unbiased fitness and a 64-bit hash."""

    x: np.ndarray
    fitness: float
    hash: int = field(default=0)

    def __eq__(self, other):
        if not isinstance(other, Phenotype):
            return NotImplemented
        return self.hash == other.hash and np.array_equal(self.x, other.x)

    def __hash__(self):
        return self.hash


@lru_cache(maxsize=32)
def zobrist_keys(n: int) -> np.ndarray:
    keys = K.zobrist_keys(n)
    keys.setflags(write=False)
    return keys


def phenotype_hash(x: np.ndarray) -> int:
    keys = zobrist_keys(len(x))
    return int(np.bitwise_xor.reduce(keys[np.asarray(x).astype(bool)], initial=np.uint64(0)))


def sample_weight(cfg: BiasConfig, j: int, inst: MkpInstance, rng: np.random.Generator) -> float:
    """Draw one weight for item ``j`` (0-based)."""
    if cfg.scheme == LOGNORMAL:
        return math.exp(rng.standard_normal() * cfg.log1pg)
    return rng.random() * cfg.upper(inst)[j]


def bias_profits(inst: MkpInstance, g) -> np.ndarray:
    w = g.w if isinstance(g, Genotype) else np.asarray(g, dtype=np.float64)
    if w.size != inst.n:
        raise ValueError(f"genotype has length {w.size}, instance has {inst.n} items")
    return inst.p * w


def pseudo_utilities(p_biased, inst: MkpInstance, a) -> np.ndarray:
    """``u_j = p'_j / sum_i a_i r_ij``; raises if some denominator is zero."""
    a = a if isinstance(a, SurrogateMultipliers) else SurrogateMultipliers(a)
    den = a.denominators(inst)
    zero = np.flatnonzero(den <= 0)
    if zero.size:
        raise ZeroDenominatorError(zero)
    return np.asarray(p_biased, dtype=np.float64) / den


def _item_major(inst: MkpInstance) -> np.ndarray:
    rT = getattr(inst, "_rT", None)
    if rT is None:
        rT = np.ascontiguousarray(inst.r.T)
        object.__setattr__(inst, "_rT", rT)
    return rT


def first_fit_decode(inst: MkpInstance, key) -> Phenotype:
    """Decode by scanning items in descending ``key`` order (ties: lower index first)."""
    key = np.asarray(key, dtype=np.float64)
    if key.size != inst.n:
        raise ValueError(f"key has length {key.size}, instance has {inst.n} items")
    order = K.decode_order(key, np.zeros(inst.n, dtype=np.bool_), key)
    x = np.zeros(inst.n, dtype=np.uint8)
    f, h = K.first_fit(order, _item_major(inst), inst.b, inst.p, zobrist_keys(inst.n), x)
    return Phenotype(x, f, int(h))


@dataclass(frozen=True, eq=False)
class DecodeContext:
    """Precomputed arrays the compiled decoder needs for one instance and mode."""

    inst: MkpInstance
    key_kind: int
    inv_den: np.ndarray
    tier2: np.ndarray
    rT: np.ndarray
    zkeys: np.ndarray

    @classmethod
    def build(cls, inst: MkpInstance, mode: str, a=None) -> "DecodeContext":
        n = inst.n
        if mode == WCEA:
            if a is None:
                raise ValueError("WCEA decoding needs surrogate multipliers")
            a = a if isinstance(a, SurrogateMultipliers) else SurrogateMultipliers(a)
            den = a.denominators(inst)
            tier2 = den <= 0
            inv_den = np.where(tier2, 0.0, 1.0 / np.where(tier2, 1.0, den))
            kind = K.KEY_PSEUDO_UTILITY
        elif mode == IWCEA:
            tier2 = np.zeros(n, dtype=bool)
            inv_den = np.ones(n)
            kind = K.KEY_BIASED_PROFIT
        else:
            raise ValueError(f"unknown mode {mode!r}")
        return cls(inst, kind, inv_den, tier2, _item_major(inst), zobrist_keys(n))

    def decode_into(self, w: np.ndarray, x: np.ndarray):
        inst = self.inst
        return K.decode(w, inst.p, self.rT, inst.b, self.inv_den, self.tier2,
                        self.key_kind, self.zkeys, x)

    def decode(self, w) -> Phenotype:
        w = w.w if isinstance(w, Genotype) else np.asarray(w, dtype=np.float64)
        if w.size != self.inst.n:
            raise ValueError(f"genotype has length {w.size}, instance has {self.inst.n} items")
        x = np.zeros(self.inst.n, dtype=np.uint8)
        f, h = self.decode_into(w, x)
        return Phenotype(x, f, int(h))


def evaluate(inst: MkpInstance, g, cfg: Optional[BiasConfig] = None, a=None,
             mode: Optional[str] = None) -> Phenotype:
    """Bias, decode and evaluate a genotype.

    The mode is WCEA (pseudo-utility key) when multipliers ``a`` are given,
    IWCEA (biased-profit key) otherwise, unless ``mode`` says explicitly.
    ``cfg`` only affects sampling, so it is accepted for symmetry and
    otherwise ignored.
    """
    if mode is None:
        mode = WCEA if a is not None else IWCEA
    return DecodeContext.build(inst, mode, a).decode(g)
