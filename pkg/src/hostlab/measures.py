"""Symbolic measure generators and level-n adic measures.

A generator (Bernoulli digit process, stationary Markov chain, or a
self-similar digit-set measure with equal contraction ratios) produces:
level-n weight vectors, conditional measures given a finite past, samples,
entropy, and correlation integrals.  A level-n measure assigns weight w_k to
the half-open interval [k/a^n, (k+1)/a^n) and is read as piecewise uniform.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NullCylinderError, ResolutionError, ResourceError

MAX_WEIGHT_ENTRIES = 1 << 24   # weight-vector budget (memory < 1 GB)
_PROB_TOL = 1e-12

BERNOULLI = "bernoulli"
MARKOV = "markov"
IFS_DIGITS = "ifs_digits"


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.flags.writeable = False
    return arr


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MeasureGen:
    """Symbolic generator of a shift-invariant digit measure.

    kind 'bernoulli': i.i.d. digits with probability vector p (length a).
    kind 'markov':    stationary chain with stochastic matrix P and pi P = pi.
    kind 'ifs_digits': digits restricted to a subset D with weights on D
                       (equal-ratio self-similar measure); stored as the
                       full-length vector p with zeros off D.
    """

    kind: str
    base: int
    p: np.ndarray | None = None
    P: np.ndarray | None = None
    pi: np.ndarray | None = None
    digits: tuple[int, ...] | None = None
    label: str = ""


def bernoulli(base: int, p) -> MeasureGen:
    p = np.asarray(p, dtype=np.float64)
    if base < 2 or len(p) != base:
        raise InputError("probability vector length must equal base >= 2")
    if np.any(p < 0) or abs(p.sum() - 1.0) > _PROB_TOL:
        raise InputError("probabilities must be >= 0 and sum to 1 within 1e-12")
    return MeasureGen(kind=BERNOULLI, base=base, p=_freeze(p),
                      label=f"bernoulli({base})")


def uniform(base: int) -> MeasureGen:
    g = bernoulli(base, np.full(base, 1.0 / base))
    return MeasureGen(kind=BERNOULLI, base=base, p=g.p, label=f"uniform({base})")


def markov(P, pi=None) -> MeasureGen:
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 2:
        raise InputError("P must be a square stochastic matrix, size >= 2")
    a = P.shape[0]
    if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > _PROB_TOL):
        raise InputError("rows of P must be >= 0 and sum to 1 within 1e-12")
    if pi is None:
        A = P.T - np.eye(a)
        A[-1] = 1.0
        rhs = np.zeros(a)
        rhs[-1] = 1.0
        pi = np.linalg.solve(A, rhs)
    pi = np.asarray(pi, dtype=np.float64)
    if np.any(pi < -_PROB_TOL) or abs(pi.sum() - 1.0) > _PROB_TOL:
        raise InputError("pi must be a probability vector")
    if np.max(np.abs(pi @ P - pi)) > _PROB_TOL:
        raise InputError("pi is not stationary for P (pi P != pi within 1e-12)")
    pi = np.clip(pi, 0.0, None)
    return MeasureGen(kind=MARKOV, base=a, P=_freeze(P), pi=_freeze(pi),
                      label=f"markov({a})")


def ifs_digits(base: int, digits, weights=None) -> MeasureGen:
    digits = tuple(sorted(int(d) for d in digits))
    if not digits or len(set(digits)) != len(digits):
        raise InputError("digit set must be nonempty without repeats")
    if any(not (0 <= d < base) for d in digits):
        raise InputError("digit set must lie in [0, base)")
    if weights is None:
        weights = np.full(len(digits), 1.0 / len(digits))
    weights = np.asarray(weights, dtype=np.float64)
    if len(weights) != len(digits) or np.any(weights < 0) or abs(weights.sum() - 1.0) > _PROB_TOL:
        raise InputError("weights must match the digit set and sum to 1")
    p = np.zeros(base)
    p[list(digits)] = weights
    return MeasureGen(kind=IFS_DIGITS, base=base, p=_freeze(p), digits=digits,
                      label=f"ifs({base};{','.join(map(str, digits))})")


def cantor3() -> MeasureGen:
    """Middle-thirds digit-set measure: base 3, digits {0, 2}, equal weights."""
    return ifs_digits(3, (0, 2))


def entropy(gen: MeasureGen) -> float:
    """Shannon entropy in nats; 0*log 0 := 0."""
    def h(v):
        v = v[v > 0]
        return float(-(v * np.log(v)).sum())

    if gen.kind in (BERNOULLI, IFS_DIGITS):
        return h(gen.p)
    rows = np.array([h(row) for row in gen.P])
    return float(gen.pi @ rows)


def gen_to_config(gen: MeasureGen) -> dict:
    cfg = {"kind": gen.kind, "a": gen.base}
    if gen.kind == MARKOV:
        cfg["P"] = [[float(x) for x in row] for row in gen.P]
        cfg["pi"] = [float(x) for x in gen.pi]
    elif gen.kind == IFS_DIGITS:
        cfg["digits"] = list(gen.digits)
        cfg["weights"] = [float(gen.p[d]) for d in gen.digits]
    else:
        cfg["p"] = [float(x) for x in gen.p]
    return cfg


def gen_from_config(cfg: dict) -> MeasureGen:
    kind = cfg["kind"]
    a = int(cfg["a"])
    if kind == BERNOULLI:
        return bernoulli(a, cfg["p"])
    if kind == MARKOV:
        return markov(cfg["P"], cfg.get("pi"))
    if kind == IFS_DIGITS:
        return ifs_digits(a, cfg["digits"], cfg.get("weights"))
    raise InputError(f"unknown generator kind {kind!r}")


# ---------------------------------------------------------------------------
# Words
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PastWord:
    """Finite truncation of a one-sided past; symbols[0] is the most recent digit."""

    base: int
    symbols: tuple[int, ...] = ()

    def __post_init__(self):
        if any(not (0 <= s < self.base) for s in self.symbols):
            raise InputError("past symbols must lie in [0, base)")

    def extended_by(self, consumed) -> "PastWord":
        """Past after the word `consumed` (oldest first) has been shifted into it."""
        new = tuple(int(d) for d in reversed(list(consumed))) + self.symbols
        return PastWord(self.base, new)


@dataclass(frozen=True)
class CylinderWord:
    """Digit word naming one level-n interval [k/a^n, (k+1)/a^n)."""

    base: int
    digits: tuple[int, ...]

    def __post_init__(self):
        if not self.digits:
            raise InputError("cylinder word must be nonempty")
        if any(not (0 <= d < self.base) for d in self.digits):
            raise InputError("cylinder digits must lie in [0, base)")

    @property
    def index(self) -> int:
        k = 0
        for d in self.digits:
            k = k * self.base + d
        return k

    def __len__(self) -> int:
        return len(self.digits)


def word(base: int, digits) -> CylinderWord:
    return CylinderWord(base, tuple(int(d) for d in digits))


# ---------------------------------------------------------------------------
# Level-n measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AdicMeasure:
    """Nonnegative weights on the a^level half-open level intervals, summing to 1.

    `structure`, when present, is a multiplicative factorization of the
    weight vector (("product", p, n) or ("chain", init, P, n)) attached by
    the generator constructors; transform code uses it as an algebraically
    exact fast path and ignores it otherwise.
    """

    base: int
    level: int
    weights: np.ndarray = field(repr=False)
    structure: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.base < 2 or self.level < 0:
            raise InputError("base >= 2 and level >= 0 required")
        w = np.asarray(self.weights, dtype=np.float64)
        if len(w) != self.base ** self.level:
            raise InputError("weight vector length must be base**level")
        if np.any(w < 0):
            raise InputError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > _PROB_TOL:
            raise InputError("weights must sum to 1 within 1e-12")
        object.__setattr__(self, "weights", _freeze(w))

    @property
    def cell_width(self) -> float:
        return float(self.base) ** -self.level


def realize(gen: MeasureGen, n: int) -> AdicMeasure:
    """Level-n weights: each digit word gets its generator cylinder probability."""
    if n < 1:
        raise InputError("level must be >= 1")
    a = gen.base
    if a ** n > MAX_WEIGHT_ENTRIES:
        raise ResourceError(f"a^n = {a}**{n} exceeds the weight-vector budget")
    if gen.kind in (BERNOULLI, IFS_DIGITS):
        w = gen.p.copy()
        for _ in range(n - 1):
            w = (w[:, None] * gen.p[None, :]).ravel()
        return AdicMeasure(base=a, level=n, weights=w,
                           structure=("product", gen.p, n))
    w = gen.pi.copy()
    for _ in range(n - 1):
        w = (w.reshape(-1, a)[:, :, None] * gen.P[None, :, :]).reshape(-1)
    return AdicMeasure(base=a, level=n, weights=w,
                       structure=("chain", gen.pi, gen.P, n))


def conditional_on_past(gen: MeasureGen, past: PastWord, n: int) -> AdicMeasure:
    """Level-n conditional measure given the finite past.

    Bernoulli and digit-set generators are past-independent; a Markov chain
    depends on the past only through its most recent symbol.
    """
    if past.base != gen.base:
        raise InputError("past and generator bases differ")
    if gen.kind in (BERNOULLI, IFS_DIGITS):
        return realize(gen, n)
    if not past.symbols:
        raise InputError("Markov conditioning requires a nonempty past")
    if n < 1:
        raise InputError("level must be >= 1")
    a = gen.base
    if a ** n > MAX_WEIGHT_ENTRIES:
        raise ResourceError(f"a^n = {a}**{n} exceeds the weight-vector budget")
    init = gen.P[past.symbols[0]]
    w = init.copy()
    for _ in range(n - 1):
        w = (w.reshape(-1, a)[:, :, None] * gen.P[None, :, :]).reshape(-1)
    return AdicMeasure(base=a, level=n, weights=w,
                       structure=("chain", init, gen.P, n))


def cylinder_condition(mu: AdicMeasure, w: CylinderWord) -> AdicMeasure:
    """Condition on the cylinder w, rescaled back to [0,1).

    Returns the normalized restriction to [k/a^n, (k+1)/a^n) pushed forward by
    n digit shifts; errors out on a null cylinder rather than inventing mass.
    """
    if w.base != mu.base:
        raise InputError("cylinder and measure bases differ")
    n = len(w)
    if n > mu.level:
        raise InputError("cylinder word longer than measure level")
    block_len = mu.base ** (mu.level - n)
    k = w.index
    block = mu.weights[k * block_len:(k + 1) * block_len]
    mass = float(block.sum())
    if mass <= 0.0:
        raise NullCylinderError(f"conditioning on null atom {w.digits}")
    if mu.level == n:
        return AdicMeasure(base=mu.base, level=0, weights=np.array([1.0]))
    return AdicMeasure(base=mu.base, level=mu.level - n, weights=block / mass)


def shift_push(mu: AdicMeasure, j: int) -> AdicMeasure:
    """Push forward by j digit shifts: w'_u = sum over length-j prefixes v of w_{v*u}."""
    if not (0 <= j <= mu.level):
        raise InputError(f"shift count {j} outside 0..{mu.level}")
    if j == 0:
        return mu
    w = mu.weights.reshape(mu.base ** j, -1).sum(axis=0)
    return AdicMeasure(base=mu.base, level=mu.level - j, weights=w)


def coarsen(mu: AdicMeasure, j: int = 1) -> AdicMeasure:
    """Drop the last j digits (marginalize the finest scales)."""
    if not (0 <= j <= mu.level):
        raise InputError(f"coarsen count {j} outside 0..{mu.level}")
    if j == 0:
        return mu
    w = mu.weights.reshape(-1, mu.base ** j).sum(axis=1)
    return AdicMeasure(base=mu.base, level=mu.level - j, weights=w)


def refine(mu: AdicMeasure, j: int = 1) -> AdicMeasure:
    """Split every cell into a^j equal parts (the piecewise-uniform reading)."""
    if j < 0:
        raise InputError("refine count must be >= 0")
    parts = mu.base ** j
    if len(mu.weights) * parts > MAX_WEIGHT_ENTRIES:
        raise ResourceError("refinement exceeds the weight-vector budget")
    w = np.repeat(mu.weights / parts, parts)
    return AdicMeasure(base=mu.base, level=mu.level + j, weights=w)


def verify_equivariance(gen: MeasureGen, past: PastWord, w: CylinderWord,
                        N: int, tol: float = 1e-12) -> bool:
    """Check that conditioning-then-shifting equals shifting the past.

    Both routes produce a level-(N - len(w)) measure; True iff they agree
    entrywise within tol.
    """
    n = len(w)
    if N <= n:
        raise InputError("N must exceed the cylinder length")
    lhs = cylinder_condition(conditional_on_past(gen, past, N), w)
    rhs = conditional_on_past(gen, past.extended_by(w.digits), N - n)
    return bool(np.max(np.abs(lhs.weights - rhs.weights)) <= tol)


# ---------------------------------------------------------------------------
# Correlation integral
# ---------------------------------------------------------------------------

def correlation_integral(mu: AdicMeasure, r: float) -> float:
    """Average mass of the open radius-r ball around a mu-random point.

    Computed in closed form for the piecewise-uniform interpretation: with
    F the CDF and G its antiderivative (piecewise quadratic), the value is
    sum_l (w_l/h) * [G(u_{l+1}+r) - G(u_l+r) - G(u_{l+1}-r) + G(u_l-r)].
    No circular wraparound: the measure lives on [0,1] inside the line.
    """
    if r <= 0:
        raise InputError("radius must be positive")
    h = mu.cell_width
    if h > r / 16.0:
        raise ResolutionError(
            f"cell width {h:g} exceeds r/16 = {r / 16:g}; deepen the level")
    if r >= 1.0:
        return 1.0
    w = mu.weights
    K = len(w)
    W = np.concatenate(([0.0], np.cumsum(w)))            # F at grid points
    seg = h * (W[:-1] + 0.5 * w)                         # cellwise integral of F
    Gk = np.concatenate(([0.0], np.cumsum(seg)))         # G at grid points
    G_total = Gk[-1]
    dens = w / h

    def G(t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros_like(t)
        above = t >= 1.0
        out[above] = G_total + (t[above] - 1.0)
        mid = (t > 0.0) & ~above
        tm = t[mid]
        idx = np.minimum((tm / h).astype(np.int64), K - 1)
        frac = tm - idx * h
        out[mid] = Gk[idx] + W[idx] * frac + 0.5 * dens[idx] * frac * frac
        return out

    grid = np.arange(K + 1, dtype=np.float64) * h
    upper = np.diff(G(grid + r))
    lower = np.diff(G(grid - r))
    return float(np.dot(dens, upper - lower))


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample_digits(gen: MeasureGen, n: int, rng: np.random.Generator,
                  start: int | None = None) -> np.ndarray:
    """n digits of the stationary process; `start` conditions a Markov chain
    on its previous symbol."""
    if n < 1:
        raise InputError("n must be >= 1")
    a = gen.base
    if gen.kind in (BERNOULLI, IFS_DIGITS):
        return rng.choice(a, size=n, p=gen.p / gen.p.sum())
    cum = np.cumsum(gen.P, axis=1)
    out = np.empty(n, dtype=np.int64)
    us = rng.random(n)
    if start is None:
        state = int(np.searchsorted(np.cumsum(gen.pi), rng.random(), side="right"))
    else:
        state = int(start)
    for i in range(n):
        state = int(np.searchsorted(cum[state], us[i], side="right"))
        state = min(state, a - 1)
        out[i] = state
    return out


def sample_past(gen: MeasureGen, length: int, rng: np.random.Generator) -> PastWord:
    """Stationary past of the given length (most recent symbol first)."""
    digits = sample_digits(gen, length, rng)
    return PastWord(gen.base, tuple(int(d) for d in digits[::-1]))


def sample_points(mu: AdicMeasure, count: int, rng: np.random.Generator) -> np.ndarray:
    """count points drawn from the piecewise-uniform measure."""
    p = mu.weights / mu.weights.sum()
    cells = rng.choice(len(p), size=count, p=p)
    return (cells + rng.random(count)) * mu.cell_width


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def measure_to_csv(mu: AdicMeasure, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# hostlab-csv v1\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "weight"])
        for k, wk in enumerate(mu.weights):
            writer.writerow([k, repr(float(wk))])


def measure_from_csv(path, base: int) -> AdicMeasure:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [row for row in csv.reader(fh)
                if row and not row[0].startswith("#") and row[0] != "index"]
    w = np.zeros(len(rows))
    for row in rows:
        w[int(row[0])] = float(row[1])
    level = round(np.log(len(w)) / np.log(base))
    if base ** level != len(w):
        raise InputError("row count is not a power of the base")
    return AdicMeasure(base=base, level=level, weights=w)


def gen_to_json(gen: MeasureGen) -> str:
    return json.dumps(gen_to_config(gen), sort_keys=True)


def gen_from_json(text: str) -> MeasureGen:
    return gen_from_config(json.loads(text))
