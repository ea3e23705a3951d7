"""Simulated checks of the soft averaging statements.

Covers Cesaro averages of windowed functions minus their closed-form
conditional expectations, the interleaved-subsequence reassembly identity,
and joint equidistribution of (n theta, shift^{floor(beta n)} x) against the
product of Lebesgue and the stationary measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InputError
from .measures import BERNOULLI, IFS_DIGITS, MARKOV, MeasureGen, realize, sample_digits


def _derive_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


# ---------------------------------------------------------------------------
# Windowed functions of the digit process
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WindowFunction:
    """Real table over digit words of a fixed window length."""

    base: int
    window: int
    table: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        t = np.ascontiguousarray(self.table, dtype=np.float64)
        if self.window < 1 or len(t) != self.base ** self.window:
            raise InputError("table length must be base**window, window >= 1")
        t.flags.writeable = False
        object.__setattr__(self, "table", t)

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.table)))


def parity_window(base: int, window: int) -> WindowFunction:
    """+-1 according to the parity of the digit sum over the window."""
    idx = np.arange(base ** window)
    total = np.zeros_like(idx)
    rest = idx.copy()
    for _ in range(window):
        total += rest % base
        rest //= base
    return WindowFunction(base=base, window=window,
                          table=np.where(total % 2 == 0, 1.0, -1.0),
                          label=f"parity{window}")


def first_digit_sign(base: int) -> WindowFunction:
    """+1 on digit 0, -1 otherwise (window length 1)."""
    t = -np.ones(base)
    t[0] = 1.0
    return WindowFunction(base=base, window=1, table=t, label="sign0")


@dataclass(frozen=True, eq=False)
class SymbolicProcess:
    """A generator viewed as a stationary digit process, with a master seed."""

    gen: MeasureGen
    seed: int

    def __post_init__(self):
        if self.gen.kind not in (BERNOULLI, MARKOV):
            raise InputError("symbolic process requires a bernoulli or markov generator")


def _conditional_table(gen: MeasureGen, f: WindowFunction) -> np.ndarray:
    """E[f(next window) | current state], in closed form.

    For i.i.d. digits this is the constant mean; for a chain it is the k-step
    transition sum, contracted one window position at a time.
    """
    a, k = gen.base, f.window
    if gen.kind == BERNOULLI:
        vals = f.table.copy()
        for _ in range(k):
            vals = vals.reshape(-1, a) @ gen.p
        return np.full(a, vals.item())
    vals = f.table.copy()
    for _ in range(k - 1):
        flat = vals.reshape(-1, a)
        prev_state = np.arange(flat.shape[0]) % a
        vals = np.einsum("ij,ij->i", gen.P[prev_state], flat)
    return gen.P @ vals.reshape(a)


def _word_indices(digits: np.ndarray, k: int, base: int) -> np.ndarray:
    windows = np.lib.stride_tricks.sliding_window_view(digits, k)
    powers = base ** np.arange(k - 1, -1, -1)
    return windows @ powers


def martingale_avg_experiment(proc: SymbolicProcess, f: WindowFunction,
                              N: int, trials: int,
                              parallel_map=map) -> np.ndarray:
    """Per-trial values of the length-N Cesaro average of f_n - E(f_n | first n digits).

    f_n reads the digits at positions n+1 .. n+window; its conditional
    expectation given the first n digits is the closed-form table above, so
    no inner simulation is involved.
    """
    gen = proc.gen
    if f.base != gen.base:
        raise InputError("window function and process bases differ")
    if N < 1 or trials < 1:
        raise InputError("N and trials must be >= 1")
    cond = _conditional_table(gen, f)
    k = f.window

    def one_trial(trial: int) -> float:
        rng = _derive_rng(proc.seed, trial)
        digits = sample_digits(gen, N + k, rng)
        words = _word_indices(digits, k, gen.base)
        f_vals = f.table[words[1:N + 1]]
        cond_vals = cond[digits[0:N]]
        return float(np.mean(f_vals - cond_vals))

    return np.asarray(list(parallel_map(one_trial, range(trials))))


def split_index_average(values, k: int):
    """Reassemble the full average from the k residue-class averages.

    Returns (full_mean, recombined_mean, class_means, class_sizes); the two
    means agree up to float association error.
    """
    values = np.asarray(values, dtype=np.float64)
    if k < 1:
        raise InputError("k must be >= 1")
    if len(values) == 0:
        raise InputError("values must be nonempty")
    full = float(values.mean())
    class_means = []
    class_sizes = []
    for p in range(k):
        cls = values[p::k]
        class_sizes.append(len(cls))
        class_means.append(float(cls.mean()) if len(cls) else 0.0)
    recombined = float(np.dot(class_means, class_sizes) / len(values))
    return full, recombined, class_means, class_sizes


# ---------------------------------------------------------------------------
# Joint equidistribution along floor(beta n)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DigitFunction:
    """Complex test function depending on a fixed number of leading digits."""

    base: int
    window: int
    table: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        t = np.ascontiguousarray(self.table, dtype=np.complex128)
        if self.window < 1 or len(t) != self.base ** self.window:
            raise InputError("table length must be base**window")
        t.flags.writeable = False
        object.__setattr__(self, "table", t)

    def integral(self, gen: MeasureGen) -> complex:
        """Exact integral against the stationary measure (cylinder function)."""
        return complex(np.dot(realize(gen, self.window).weights, self.table))


def first_digit_indicator(base: int, digit: int = 0) -> DigitFunction:
    t = np.zeros(base, dtype=np.complex128)
    t[digit] = 1.0
    return DigitFunction(base=base, window=1, table=t, label=f"ind{digit}")


def character_on_digits(base: int, window: int, m: int = 1) -> DigitFunction:
    """e(m x) read off the first `window` digits of x."""
    idx = np.arange(base ** window)
    xs = idx / float(base ** window)
    return DigitFunction(base=base, window=window,
                         table=np.exp(2j * np.pi * m * xs),
                         label=f"e{m}w{window}")


def operationally_irrational(theta: float, q_max: int = 10 ** 6,
                             tol: float = 1e-14) -> bool:
    """False iff some continued-fraction convergent p/q, q <= q_max, matches
    theta to within tol."""
    frac = Fraction(theta).limit_denominator(q_max)
    return abs(theta - float(frac)) >= tol


def _exact_floors(beta: float, N: int) -> np.ndarray:
    """floor(beta * n) for n = 0..N, exact for the dyadic rational float beta."""
    num, den = float(beta).as_integer_ratio()
    return np.asarray([(num * n) // den for n in range(N + 1)], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class JointEquidistResult:
    theta: float
    beta: float
    js: tuple[int, ...]
    g_labels: tuple[str, ...]
    averages: np.ndarray          # (len(js), len(gs)) complex
    expected: np.ndarray
    z_scores: np.ndarray
    tolerance: float
    eps_N: float
    M: int
    N: int

    def deviations(self) -> np.ndarray:
        return np.abs(self.averages - self.expected)

    def all_within_tolerance(self) -> bool:
        return bool(np.all(self.deviations() <= self.tolerance))


def time_change_joint_experiment(theta: float, beta: float, gen: MeasureGen,
                                 js, gs, N: int, M: int, seed: int,
                                 parallel_map=map) -> JointEquidistResult:
    """Empirical averages A(j, g) of e(j n theta) g(shift^{floor(beta n)} x).

    x is sampled from the stationary digit process M times; the predicted
    limits are tau-hat(j) * integral(g), with tau Lebesgue on the circle
    (theta passes an irrationality gate, so the rotation orbit closure is
    everything).  The tolerance is 5 M^{-1/2} plus a documented Cesaro
    allowance eps_N = 1/(2 N min_j ||j theta||) + N^{-1/2}.

    Only the integrated identity is asserted; per-point limit measures are
    not constructed (they need not be invariant under the product map).
    """
    if beta <= 0:
        raise InputError("beta must be positive")
    if not operationally_irrational(theta):
        raise InputError("theta is rational at working precision")
    if N < 1 or M < 1:
        raise InputError("N and M must be >= 1")
    js = tuple(int(j) for j in js)
    gs = tuple(gs)
    if any(g.base != gen.base for g in gs):
        raise InputError("test function base differs from the generator")

    offs = _exact_floors(beta, N)[1:]
    max_window = max(g.window for g in gs)
    need = int(offs[-1]) + max_window
    ns = np.arange(1, N + 1, dtype=np.float64)
    phases = np.exp(2j * np.pi * theta * np.outer(np.asarray(js, float), ns))

    def one_sample(i: int) -> np.ndarray:
        rng = _derive_rng(seed, i)
        digits = sample_digits(gen, need, rng)
        out = np.empty((len(js), len(gs)), dtype=np.complex128)
        for gi, g in enumerate(gs):
            idx = np.zeros(N, dtype=np.int64)
            for w in range(g.window):
                idx = idx * gen.base + digits[offs + w]
            g_vals = g.table[idx]
            out[:, gi] = phases @ g_vals / N
        return out

    per_sample = np.asarray(list(parallel_map(one_sample, range(M))))
    averages = per_sample.mean(axis=0)

    expected = np.zeros_like(averages)
    for ji, j in enumerate(js):
        if j == 0:
            for gi, g in enumerate(gs):
                expected[ji, gi] = g.integral(gen)

    nonzero = [abs(j * theta - round(j * theta)) for j in js if j != 0]
    eps_N = (1.0 / (2.0 * N * min(nonzero)) if nonzero else 0.0) + N ** -0.5
    tolerance = 5.0 / math.sqrt(M) + eps_N

    spread = per_sample.std(axis=0, ddof=1) if M > 1 else np.full_like(averages, np.nan, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.abs(averages - expected) / (np.abs(spread) / math.sqrt(M))

    return JointEquidistResult(
        theta=theta, beta=beta, js=js, g_labels=tuple(g.label for g in gs),
        averages=averages, expected=expected, z_scores=z,
        tolerance=tolerance, eps_N=eps_N, M=M, N=N)
