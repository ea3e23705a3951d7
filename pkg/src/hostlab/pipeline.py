"""Exponential-sum experiments along exact xb orbits of generator-typical
points, the orbit-versus-conditional comparison, and the k-indexed scale
integral whose decay drives everything.

All orbits run in exact integer arithmetic at a precision budget covering the
full orbit length; nothing is silently degraded to floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adic import (
    PrecisionBudget,
    UnitPoint,
    digits_of,
    kronecker_schedule,
    make_point_from_digits,
    mul_mod1,
    multiplicatively_dependent,
)
from .errors import InputError, NullCylinderError, PrecisionError
from .fourier import SmoothingParams, ft_adic_many, scaled_sq_integral
from .measures import (
    MARKOV,
    MAX_WEIGHT_ENTRIES,
    MeasureGen,
    PastWord,
    conditional_on_past,
    correlation_integral,
    entropy,
    sample_digits,
    sample_past,
)

TAU = 2.0 * math.pi


def _derive_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


# ---------------------------------------------------------------------------
# Weyl sums along an exact orbit
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WeylAccumulator:
    """W_N(m) at each checkpoint N for a frequency set M."""

    freqs: tuple[int, ...]
    checkpoints: tuple[int, ...]
    values: np.ndarray = field(repr=False)      # (len(checkpoints), len(freqs))

    def value(self, N: int, m: int) -> complex:
        return complex(self.values[self.checkpoints.index(N), self.freqs.index(m)])


def _orbit_character_sums(num: int, mod: int, b: int, freqs, checkpoints):
    """Partial sums of e(m * T_b^n x) over n = 1..max(checkpoints).

    One exact multiply-and-reduce per step; e_m is evaluated from the top 53
    binary digits of the current numerator (error O(m 2^-53)).
    """
    cps = sorted(checkpoints)
    taus = [TAU * m for m in freqs]
    sums = [0.0 + 0.0j] * len(freqs)
    out = np.empty((len(cps), len(freqs)), dtype=np.complex128)
    ci = 0
    bits = mod.bit_length() - 1
    pow2 = (1 << bits) == mod and bits > 60
    inv53 = 2.0 ** -53
    cos, sin = math.cos, math.sin
    for n in range(1, cps[-1] + 1):
        num = (num * b) % mod
        if pow2:
            xr = (num >> (bits - 53)) * inv53
        else:
            xr = ((num << 53) // mod) * inv53
        for i, t in enumerate(taus):
            ang = t * xr
            sums[i] += complex(cos(ang), sin(ang))
        if n == cps[ci]:
            out[ci] = [s / n for s in sums]
            ci += 1
    return out


def weyl_sum(x: UnitPoint, b: int, freqs, checkpoints,
             guard_digits: int = 64) -> WeylAccumulator:
    """Running character averages W_N(m) along the exact xb orbit of x.

    The point's retained precision must cover the longest checkpoint; running
    past the budget is a hard error, never a silent degradation.
    """
    freqs = tuple(int(m) for m in freqs)
    checkpoints = tuple(sorted(int(n) for n in checkpoints))
    if not freqs or any(m == 0 for m in freqs):
        raise InputError("frequency set must be nonempty and exclude 0")
    if not checkpoints or checkpoints[0] < 1:
        raise InputError("checkpoints must be positive integers")
    if b < 2:
        raise InputError("b must be >= 2")
    budget = PrecisionBudget.plan(x.base, b, checkpoints[-1], guard_digits)
    if x.precision < budget.L:
        raise PrecisionError(
            f"point precision {x.precision} below budget {budget.L} "
            f"for N={checkpoints[-1]}")
    vals = _orbit_character_sums(x.numerator, x.denominator, b, freqs, checkpoints)
    return WeylAccumulator(freqs=freqs, checkpoints=checkpoints, values=vals)


# ---------------------------------------------------------------------------
# Orbit average vs conditional-measure average
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompareResult:
    orbit_avg: complex
    cond_avg: complex
    cond_abs_avg: float      # average of per-step transform moduli; dominates
                             # |cond_avg| by the triangle inequality
    gap: float
    N: int
    k: int
    m: int


def _support_chain_ok(gen: MeasureGen, past: PastWord, digits) -> bool:
    if gen.kind == MARKOV:
        prev = past.symbols[0]
        for d in digits:
            if gen.P[prev, d] <= 0.0:
                return False
            prev = d
        return True
    return all(gen.p[d] > 0.0 for d in digits)


def _conditional_cache(gen: MeasureGen, past: PastWord, level: int):
    """Level-`level` conditional measures keyed by the relevant state."""
    if gen.kind == MARKOV:
        return {s: conditional_on_past(gen, PastWord(gen.base, (s,)), level)
                for s in range(gen.base)}
    mu = conditional_on_past(gen, past, level)
    return {s: mu for s in range(gen.base)}


def orbit_vs_conditional_compare(gen: MeasureGen, past: PastWord, x: UnitPoint,
                                 b: int, k: int, m: int, N: int,
                                 level: int | None = None) -> CompareResult:
    """Compare (1/N) sum of e_m(T_b^n T_a^k x) with the matching average of
    conditional-measure transforms.

    Each conditional term is the transform of the current scaled conditional
    measure at frequency m * a^(k + z_n), times the exact cylinder-position
    phase e(m * a^k * b^n * K_n / a^(n')), K_n the integer of the first n'
    digits of x.  The phase makes the term equal the transform of the direct
    n-step pushforward (without it only the moduli agree); it is computed in
    exact integer arithmetic via a^(z_n) = b^n / a^(n').
    """
    a = gen.base
    if m == 0:
        raise InputError("m must be nonzero")
    if x.base != a:
        raise InputError("point base differs from generator base")
    if k < 0 or N < 1:
        raise InputError("need k >= 0 and N >= 1")
    if past.base != a:
        raise InputError("past base differs from generator base")

    sched = kronecker_schedule(a, b, N)
    np_max = sched.nprime(N)
    budget = PrecisionBudget.plan(a, b, N)
    if x.precision < budget.L + k:
        raise PrecisionError(
            f"point precision {x.precision} below {budget.L + k} needed "
            f"for N={N}, k={k}")

    if level is None:
        extra = max(4, math.ceil(math.log(512 * abs(m)) / math.log(a)))
        level = k + extra
    if a ** level > MAX_WEIGHT_ENTRIES:
        raise InputError(f"conditional level {level} exceeds the weight budget")

    xdig = digits_of(x, max(np_max, 1))
    if not _support_chain_ok(gen, past, xdig[:np_max]):
        raise NullCylinderError("point digits leave the generator's support")

    # orbit side
    y = mul_mod1(x, a ** k)
    orbit_avg = complex(_orbit_character_sums(
        y.numerator, y.denominator, b, (m,), (N,))[0, 0])

    # conditional side
    cache = _conditional_cache(gen, past, level)
    states = np.empty(N + 1, dtype=np.int64)
    state0 = past.symbols[0] if gen.kind == MARKOV else 0
    for n in range(1, N + 1):
        npr = sched.nprime(n)
        states[n] = xdig[npr - 1] if npr >= 1 else state0

    zs = sched.z_table[1:N + 1]
    xis = m * float(a) ** k * np.power(float(a), zs)

    # exact fractional parts of m a^k b^n K_n / a^(n'); den and the digit
    # divisor are maintained incrementally since n' is nondecreasing
    num_top = x.numerator // a ** (x.precision - np_max) if np_max else 0
    mod_max = a ** max(np_max, 1)
    phases = np.empty(N, dtype=np.float64)
    bn = 1
    ma_k = m * a ** k
    den = 1                      # a^(n')
    drop = a ** np_max           # a^(np_max - n')
    npr_prev = 0
    for n in range(1, N + 1):
        bn = (bn * b) % mod_max
        npr = sched.nprime(n)
        for _ in range(npr - npr_prev):
            den *= a
            drop //= a
        npr_prev = npr
        if npr == 0:
            phases[n - 1] = 0.0
            continue
        K = num_top // drop
        phases[n - 1] = ((ma_k * (bn % den) * K) % den) / den

    vals = np.empty(N, dtype=np.complex128)
    for s in set(int(v) for v in states[1:]):
        idx = np.flatnonzero(states[1:] == s)
        vals[idx] = ft_adic_many(cache[s], xis[idx])
    vals *= np.exp(2j * np.pi * phases)
    cond_avg = complex(vals.mean())

    return CompareResult(orbit_avg=orbit_avg, cond_avg=cond_avg,
                         cond_abs_avg=float(np.abs(vals).mean()),
                         gap=abs(orbit_avg - cond_avg), N=N, k=k, m=m)


# ---------------------------------------------------------------------------
# The k-decay quantity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProofChainEstimate:
    """Monte Carlo estimate over sampled pasts of the z-averaged squared
    transform of the k-scaled conditional measures, with the companion bound
    split into its scale and correlation halves."""

    k: int
    m: int
    samples: int
    level: int
    value: float
    std_error: float
    scale_term: float
    corr_term: float
    rhs: float
    panels: int
    b: int                      # carried for provenance; the z-average itself
                                # integrates over one full power of the base


def proof_chain_quantity(gen: MeasureGen, b: int, k: int, m: int,
                         samples: int, level: int | None = None,
                         seed: int = 0, past_length: int = 32,
                         tol: float = 1e-6) -> ProofChainEstimate:
    """Estimate the average over pasts of int_0^1 |F_m(S_{a^z} S_{a^k} mu_past)|^2 dz.

    The z-integral is the scale-smoothing quantity with scale base a and
    prescale a^k; its companion bound is 1/(a^(k/2) |m| ln a) plus the
    correlation integral of the unscaled conditional at radius a^(-k/2).
    Conditional measures of the supported generator kinds depend on at most
    the most recent past symbol, so distinct sampled pasts reuse cached
    values; the Monte Carlo mean and standard error are unchanged by this.
    """
    a = gen.base
    if m == 0:
        raise InputError("m must be nonzero")
    if k < 0 or samples < 1:
        raise InputError("need k >= 0 and samples >= 1")
    if entropy(gen) <= 1e-12:
        raise InputError("generator entropy must be positive (atoms do not decay)")

    r = float(a) ** (-k / 2.0)
    if level is None:
        level = max(math.ceil(k / 2.0 + math.log(16.0) / math.log(a)) + 2, 8)
    if a ** level > MAX_WEIGHT_ENTRIES:
        raise InputError(f"level {level} exceeds the weight budget")

    prescale = float(a) ** k
    params = SmoothingParams(b_scale=float(a), m=m, r=r)
    panels = max(16, math.ceil(4.0 * abs(m) * a * math.log(a) * prescale))

    lhs_cache: dict[int, tuple[float, float]] = {}

    def values_for(state_key: int, past: PastWord) -> tuple[float, float]:
        if state_key not in lhs_cache:
            mu = conditional_on_past(gen, past, level)
            lhs = scaled_sq_integral(mu, params, prescale=prescale, tol=tol)
            corr = correlation_integral(mu, r)
            lhs_cache[state_key] = (lhs, corr)
        return lhs_cache[state_key]

    lhs_vals = np.empty(samples)
    corr_vals = np.empty(samples)
    for i in range(samples):
        rng = _derive_rng(seed, k, m, i)
        past = sample_past(gen, length=past_length, rng=rng)
        key = past.symbols[0] if gen.kind == MARKOV else -1
        lhs_vals[i], corr_vals[i] = values_for(key, past)

    scale_term = 1.0 / (float(a) ** (k / 2.0) * abs(m) * math.log(a))
    value = float(lhs_vals.mean())
    se = float(lhs_vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    corr_mean = float(corr_vals.mean())
    return ProofChainEstimate(
        k=k, m=m, samples=samples, level=level, value=value, std_error=se,
        scale_term=scale_term, corr_term=corr_mean,
        rhs=scale_term + corr_mean, panels=panels, b=b)


# ---------------------------------------------------------------------------
# Full orbit experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HostExperimentConfig:
    gen: MeasureGen
    b: int
    seed: int
    samples: int = 50
    checkpoints: tuple[int, ...] = (1000, 10_000, 100_000)
    freqs: tuple[int, ...] = (1, 2, 3)
    k: int = 0
    guard_digits: int = 64
    soft_final_threshold: float = 0.05
    label: str = ""


@dataclass(frozen=True, eq=False)
class HostReport:
    config: HostExperimentConfig
    negative_control: bool
    rows: list                       # (sample, m, N, re, im, abs)
    medians: dict                    # (m, N) -> median |W|
    percentile90: dict
    medians_decreasing: dict         # m -> bool
    final_median_ok: dict            # m -> bool
    seed_keys: list

    def soft_pass(self) -> bool:
        return all(self.medians_decreasing.values()) and all(self.final_median_ok.values())


def host_experiment(cfg: HostExperimentConfig, parallel_map=map) -> HostReport:
    """Sample points from the generator and record checkpointed Weyl sums.

    Points are sampled digit-by-digit from the generator at the orbit
    precision budget, which is exactly sampling from the measure at that
    resolution.  a and b multiplicatively dependent does not abort the run;
    the report is labeled a negative control.  No equidistribution rate is
    asserted here: the decrease/threshold flags are soft and configurable.
    """
    gen, b = cfg.gen, cfg.b
    a = gen.base
    if cfg.samples < 1:
        raise InputError("samples must be >= 1")
    if b < 2:
        raise InputError("b must be >= 2")
    if entropy(gen) <= 1e-12:
        raise InputError("generator entropy must be positive")
    negative_control = multiplicatively_dependent(a, b)

    budget = PrecisionBudget.plan(a, b, max(cfg.checkpoints), cfg.guard_digits)
    L = budget.L + cfg.k

    def run_sample(i: int):
        rng = _derive_rng(cfg.seed, i)
        digits = sample_digits(gen, L, rng)
        x = make_point_from_digits(a, digits)
        if cfg.k:
            x = mul_mod1(x, a ** cfg.k)
        acc = weyl_sum(x, b, cfg.freqs, cfg.checkpoints, cfg.guard_digits)
        return acc.values

    all_vals = list(parallel_map(run_sample, range(cfg.samples)))

    rows = []
    for i, vals in enumerate(all_vals):
        for ci, N in enumerate(cfg.checkpoints):
            for fi, m in enumerate(cfg.freqs):
                w = vals[ci, fi]
                rows.append((i, m, N, float(w.real), float(w.imag), float(abs(w))))

    medians, p90 = {}, {}
    stack = np.stack(all_vals)        # (samples, checkpoints, freqs)
    mags = np.abs(stack)
    for ci, N in enumerate(cfg.checkpoints):
        for fi, m in enumerate(cfg.freqs):
            medians[(m, N)] = float(np.median(mags[:, ci, fi]))
            p90[(m, N)] = float(np.percentile(mags[:, ci, fi], 90))

    decreasing = {}
    final_ok = {}
    for fi, m in enumerate(cfg.freqs):
        series = [medians[(m, N)] for N in cfg.checkpoints]
        decreasing[m] = all(b_ < a_ for a_, b_ in zip(series, series[1:]))
        final_ok[m] = series[-1] < cfg.soft_final_threshold

    seed_keys = [[cfg.seed, i] for i in range(cfg.samples)]
    return HostReport(config=cfg, negative_control=negative_control, rows=rows,
                      medians=medians, percentile90=p90,
                      medians_decreasing=decreasing, final_median_ok=final_ok,
                      seed_keys=seed_keys)
