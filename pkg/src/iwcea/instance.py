"""MKP instances: OR-Library parsing/serialization, validation, generation."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class InstanceFormatError(ValueError):
    """Raised when an instance token stream is malformed."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (token {position})")
        self.position = position


class InstanceValidationError(ValueError):
    """Raised when an instance is not well-stated and preprocessing is off."""

    def __init__(self, report: "ValidationReport"):
        super().__init__(f"instance is not well-stated: {report.violations}")
        self.report = report


@dataclass(frozen=True, eq=False)
class MkpInstance:
    """Immutable 0-1 multidimensional knapsack instance.

    ``r`` is stored constraint-major (m x n). All arrays are read-only.
    """

    p: np.ndarray
    r: np.ndarray
    b: np.ndarray
    name: str = "mkp"
    known_best: Optional[float] = None

    def __post_init__(self):
        p = np.array(self.p, dtype=np.float64).ravel()
        r = np.array(self.r, dtype=np.float64)
        b = np.array(self.b, dtype=np.float64).ravel()
        if r.ndim == 1:
            r = r.reshape(1, -1)
        if p.size == 0 or b.size == 0:
            raise ValueError("n and m must be positive")
        if r.shape != (b.size, p.size):
            raise ValueError(f"r has shape {r.shape}, expected {(b.size, p.size)}")
        for name, arr in (("p", p), ("r", r), ("b", b)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            arr.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "b", b)
        if self.known_best is not None and self.known_best == 0:
            object.__setattr__(self, "known_best", None)

    @property
    def n(self) -> int:
        return self.p.size

    @property
    def m(self) -> int:
        return self.b.size

    @property
    def p_max(self) -> float:
        return float(self.p.max())

    def fitness(self, x: np.ndarray) -> float:
        """Unbiased objective, summed in ascending item order."""
        total = 0.0
        for j in np.flatnonzero(x):
            total += self.p[j]
        return float(total)

    def is_feasible(self, x: np.ndarray) -> bool:
        return bool(np.all(self.r @ np.asarray(x, dtype=np.float64) <= self.b))

    def __eq__(self, other):
        if not isinstance(other, MkpInstance):
            return NotImplemented
        return (
            self.name == other.name
            and self.known_best == other.known_best
            and np.array_equal(self.p, other.p)
            and np.array_equal(self.r, other.r)
            and np.array_equal(self.b, other.b)
        )

    __hash__ = object.__hash__


NONPOSITIVE_PROFIT = "nonpositive_profit"
ITEM_EXCEEDS_CAPACITY = "item_exceeds_capacity"
SLACK_CONSTRAINT = "slack_constraint"


@dataclass
class ValidationReport:
    """Violated well-statedness conditions as ``(kind, i, j)`` triples.

    Indices are 1-based; an index that does not apply is ``None``.
    """

    violations: list = field(default_factory=list)

    def __bool__(self):
        return bool(self.violations)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(inst: MkpInstance) -> ValidationReport:
    """Check ``p_j > 0`` and ``r_ij <= b_i < sum_j r_ij``."""
    violations = []
    for j in np.flatnonzero(inst.p <= 0):
        violations.append((NONPOSITIVE_PROFIT, None, int(j) + 1))
    for i, j in zip(*np.nonzero(inst.r > inst.b[:, None])):
        violations.append((ITEM_EXCEEDS_CAPACITY, int(i) + 1, int(j) + 1))
    for i in np.flatnonzero(inst.b >= inst.r.sum(axis=1)):
        violations.append((SLACK_CONSTRAINT, int(i) + 1, None))
    return ValidationReport(violations)


@dataclass(frozen=True)
class Preprocessed:
    """Reduced instance plus the bookkeeping needed to lift solutions back."""

    instance: MkpInstance
    kept_items: np.ndarray
    fixed_zero: tuple
    dropped_constraints: tuple

    def lift(self, x_reduced: np.ndarray, n: int) -> np.ndarray:
        x = np.zeros(n, dtype=np.uint8)
        x[self.kept_items] = x_reduced
        return x


def preprocess(inst: MkpInstance) -> Preprocessed:
    """Make an instance well-stated by fixing items to 0 and dropping constraints.

    Items that do not fit some constraint on their own, or that have a
    non-positive profit, are fixed to 0. Constraints that every remaining
    item set satisfies are dropped.
    """
    fix = (inst.p <= 0) | np.any(inst.r > inst.b[:, None], axis=0)
    kept = np.flatnonzero(~fix)
    if kept.size == 0:
        raise InstanceValidationError(validate(inst))
    r = inst.r[:, kept]
    slack = inst.b >= r.sum(axis=1)
    rows = np.flatnonzero(~slack)
    if rows.size == 0:
        # every item fits together; keep one constraint so m stays positive
        rows = np.array([0])
    reduced = MkpInstance(
        inst.p[kept], r[rows], inst.b[rows], name=inst.name, known_best=inst.known_best
    )
    return Preprocessed(
        reduced,
        kept,
        tuple(int(j) for j in np.flatnonzero(fix)),
        tuple(int(i) for i in np.flatnonzero(slack)),
    )


_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


class _Tokens:
    def __init__(self, text: str):
        self.tokens = text.split()
        self.pos = 0

    def take(self, what: str) -> float:
        if self.pos >= len(self.tokens):
            raise InstanceFormatError(f"truncated stream: expected {what}", self.pos)
        tok = self.tokens[self.pos]
        if not _NUMBER.match(tok):
            raise InstanceFormatError(f"non-numeric token {tok!r} for {what}", self.pos)
        self.pos += 1
        return float(tok)

    def take_count(self, what: str) -> int:
        pos = self.pos
        value = self.take(what)
        if value != int(value) or value <= 0:
            raise InstanceFormatError(f"{what} must be a positive integer, got {value:g}", pos)
        return int(value)

    def take_many(self, k: int, what: str) -> np.ndarray:
        return np.array([self.take(what) for _ in range(k)], dtype=np.float64)


def _read_instance(tokens: _Tokens, name: str) -> MkpInstance:
    n = tokens.take_count("n")
    m = tokens.take_count("m")
    opt = tokens.take("optimal value")
    p = tokens.take_many(n, "profit")
    r = tokens.take_many(m * n, "consumption").reshape(m, n)
    b = tokens.take_many(m, "capacity")
    return MkpInstance(p, r, b, name=name, known_best=opt if opt != 0 else None)


def parse_orlib(text: str, name: str = "mkp", header: str = "count") -> list[MkpInstance]:
    """Parse an OR-Library ``mknapcb``-style token stream.

    Args:
      text: file contents.
      name: base name; instances are named ``name.00``, ``name.01``, ...
        (a single-instance stream keeps ``name`` as is).
      header: ``"count"`` when the stream starts with the number of
        instances (mknapcb files), ``"single"`` for one bare instance
        without the leading count.
    """
    tokens = _Tokens(text)
    if header == "count":
        count = tokens.take_count("instance count")
    elif header == "single":
        count = 1
    else:
        raise ValueError(f"unknown header variant {header!r}")
    instances = []
    for k in range(count):
        label = name if count == 1 else f"{name}.{k:02d}"
        instances.append(_read_instance(tokens, label))
    if tokens.pos != len(tokens.tokens):
        raise InstanceFormatError(
            f"{len(tokens.tokens) - tokens.pos} unconsumed tokens after {count} instance(s)",
            tokens.pos,
        )
    return instances


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def serialize_orlib(instances: Sequence[MkpInstance], header: str = "count") -> str:
    """Inverse of :func:`parse_orlib` (instance names are not stored)."""
    lines = []
    if header == "count":
        lines.append(str(len(instances)))
    elif len(instances) != 1:
        raise ValueError("single-instance header needs exactly one instance")
    for inst in instances:
        lines.append(f"{inst.n} {inst.m} {_fmt(inst.known_best or 0)}")
        lines.append(" ".join(_fmt(v) for v in inst.p))
        for row in inst.r:
            lines.append(" ".join(_fmt(v) for v in row))
        lines.append(" ".join(_fmt(v) for v in inst.b))
    return "\n".join(lines) + "\n"


def load(path, index: Optional[int] = None, header: str = "auto") -> list[MkpInstance]:
    """Read instances from a file; ``header="auto"`` sniffs the layout."""
    from pathlib import Path

    path = Path(path)
    text = path.read_text()
    if header == "auto":
        header = _sniff_header(text)
    instances = parse_orlib(text, name=path.stem, header=header)
    if index is not None:
        if not 0 <= index < len(instances):
            raise IndexError(f"{path} holds {len(instances)} instance(s), no index {index}")
        return [instances[index]]
    return instances


def _sniff_header(text: str) -> str:
    tokens = text.split()
    try:
        n, m = int(float(tokens[0])), int(float(tokens[1]))
    except (IndexError, ValueError):
        return "count"
    # a bare instance has exactly 3 + n + m*n + m tokens
    if n > 0 and m > 0 and len(tokens) == 3 + n + m * n + m:
        return "single"
    return "count"


def generate_random(
    n: int,
    m: int,
    alpha: float,
    seed: int,
    profit_range: tuple = (1, 1000),
    consumption_range: tuple = (0, 1000),
    integral: bool = True,
    name: Optional[str] = None,
    correlated: bool = False,
) -> MkpInstance:
    """Random instance with capacities ``b_i = alpha * sum_j r_ij``.

    Consumptions and profits are drawn uniformly from the given ranges
    (inclusive integer ranges when ``integral``). Item columns that exceed
    some capacity are redrawn until every item fits on its own.

    With ``correlated``, profits follow the OR-Library CB recipe instead:
    ``p_j = sum_i r_ij / m + 500 q_j`` with ``q_j ~ U(0, 1)`` (floored when
    ``integral``); ``profit_range`` is then ignored.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be at least 1")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    for lo, hi in (profit_range, consumption_range):
        if hi < lo or (hi == lo and not integral):
            raise ValueError(f"empty value range ({lo}, {hi})")
    if profit_range[1] <= 0:
        raise ValueError("profit range must contain positive values")

    rng = np.random.default_rng(seed)

    def draw(lo, hi, size):
        if integral:
            return rng.integers(lo, hi, size=size, endpoint=True).astype(np.float64)
        return rng.uniform(lo, hi, size=size)

    plo = max(profit_range[0], 1 if integral else np.nextafter(0.0, 1.0))
    p = draw(plo, profit_range[1], n)
    r = draw(consumption_range[0], consumption_range[1], (m, n))
    for _ in range(1000):
        b = alpha * r.sum(axis=1)
        bad = np.flatnonzero(np.any(r > b[:, None], axis=0))
        if bad.size == 0:
            break
        r[:, bad] = draw(consumption_range[0], consumption_range[1], (m, bad.size))
    else:
        raise ValueError("could not draw items fitting alpha * row sums; widen n or alpha")
    if correlated:
        p = r.sum(axis=0) / m + 500 * rng.random(n)
        if integral:
            p = np.maximum(np.floor(p), 1.0)
    tag = "c" if correlated else ""
    return MkpInstance(p, r, b, name=name or f"rand{tag}-{m}x{n}-a{alpha:g}-s{seed}")


def vasquez_hao_example() -> MkpInstance:
    """The 5-item, single-constraint instance with LP optimum 30.3 and binary optimum 25."""
    return MkpInstance(
        [12, 12, 9, 8, 8], [[11, 12, 10, 10, 10]], [30], name="vh5"
    )


def tightness(inst: MkpInstance) -> np.ndarray:
    return inst.b / inst.r.sum(axis=1)


__all__ = [
    "MkpInstance",
    "ValidationReport",
    "InstanceFormatError",
    "InstanceValidationError",
    "parse_orlib",
    "serialize_orlib",
    "load",
    "validate",
    "preprocess",
    "generate_random",
    "vasquez_hao_example",
]
