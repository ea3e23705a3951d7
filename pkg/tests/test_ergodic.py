import math

import numpy as np
import pytest

from hostlab.adic import exp_weyl_bound_check
from hostlab.errors import InputError
from hostlab.ergodic import (
    DigitFunction,
    SymbolicProcess,
    WindowFunction,
    character_on_digits,
    first_digit_indicator,
    first_digit_sign,
    martingale_avg_experiment,
    operationally_irrational,
    parity_window,
    split_index_average,
    time_change_joint_experiment,
)
from hostlab.measures import bernoulli, cantor3, markov, uniform

MARKOV_P = [[0.9, 0.1], [0.5, 0.5]]
LOG23 = math.log(2) / math.log(3)


def test_constant_window_gives_exact_zero():
    proc = SymbolicProcess(gen=uniform(2), seed=5)
    f = WindowFunction(base=2, window=2, table=np.full(4, 0.7), label="const")
    vals = martingale_avg_experiment(proc, f, N=500, trials=8)
    assert np.max(np.abs(vals)) < 1e-15


def test_iid_sign_window_clt_scale():
    proc = SymbolicProcess(gen=uniform(2), seed=11)
    f = first_digit_sign(2)
    vals = martingale_avg_experiment(proc, f, N=10_000, trials=100)
    rms = float(np.sqrt(np.mean(vals ** 2)))
    # i.i.d. differences have variance 1/N
    assert 0.005 < rms < 0.02
    assert np.max(np.abs(vals)) < 0.05


def test_markov_window_rms_bound():
    proc = SymbolicProcess(gen=markov(MARKOV_P), seed=13)
    f = parity_window(2, 2)
    vals = martingale_avg_experiment(proc, f, N=10_000, trials=60)
    rms = float(np.sqrt(np.mean(vals ** 2)))
    assert rms <= 3.0 * f.sup / 100.0


def test_sqrt_law_when_n_quadruples():
    proc = SymbolicProcess(gen=markov(MARKOV_P), seed=17)
    f = parity_window(2, 3)
    r1 = martingale_avg_experiment(proc, f, N=2_500, trials=100)
    r4 = martingale_avg_experiment(proc, f, N=10_000, trials=100)
    ratio = np.sqrt(np.mean(r4 ** 2) / np.mean(r1 ** 2))
    assert 1 / 3 <= ratio <= 0.75


def test_process_rejects_ifs_kind():
    with pytest.raises(InputError):
        SymbolicProcess(gen=cantor3(), seed=1)


def test_split_index_average_exact_cases():
    full, recombined, _, _ = split_index_average(np.full(17, 2.5), 4)
    assert full == recombined == 2.5
    vals = np.array([(-1.0) ** n for n in range(1, 101)])
    full, recombined, class_means, sizes = split_index_average(vals, 2)
    assert sorted(class_means) == [-1.0, 1.0]
    assert full == recombined == 0.0
    rng = np.random.default_rng(23)
    vals = rng.normal(size=1000)
    full, recombined, _, _ = split_index_average(vals, 3)
    assert abs(full - recombined) < 1e-12


def test_time_change_total_mass_row():
    gen = markov(MARKOV_P)
    ones = DigitFunction(base=2, window=1, table=np.ones(2, complex), label="one")
    res = time_change_joint_experiment(LOG23, 1.0, gen, js=[0], gs=[ones],
                                       N=500, M=4, seed=3)
    assert abs(res.averages[0, 0] - 1.0) < 1e-12
    assert abs(res.expected[0, 0] - 1.0) < 1e-12


def test_time_change_rejects_rational_theta():
    gen = markov(MARKOV_P)
    ones = DigitFunction(base=2, window=1, table=np.ones(2, complex), label="one")
    with pytest.raises(InputError):
        time_change_joint_experiment(0.5, 1.0, gen, [1], [ones], 100, 2, seed=1)
    with pytest.raises(InputError):
        time_change_joint_experiment(LOG23, -1.0, gen, [1], [ones], 100, 2, seed=1)


def test_irrationality_gate():
    assert operationally_irrational(LOG23)
    assert not operationally_irrational(3.0 / 7.0)
    assert not operationally_irrational(0.25)


def test_one_point_system_reduces_to_geometric_sum():
    # g identically 1 makes A(j, g) the pure rotation average, whose modulus
    # matches the closed geometric form used by the rotation oracle
    gen = uniform(2)
    ones = DigitFunction(base=2, window=1, table=np.ones(2, complex), label="one")
    N = 1000
    res = time_change_joint_experiment(LOG23, 1.0, gen, js=[1], gs=[ones],
                                       N=N, M=2, seed=9)
    lhs, rhs = exp_weyl_bound_check(LOG23, 1, N)
    assert abs(abs(res.averages[0, 0]) * N - lhs) < 1e-8
    assert abs(res.averages[0, 0]) <= rhs / N + 1e-12


def test_invariant_marginal_recovered_at_j_zero():
    gen = markov(MARKOV_P)
    g = first_digit_indicator(2, 0)
    res = time_change_joint_experiment(LOG23, LOG23, gen, js=[0, 1], gs=[g],
                                       N=4000, M=60, seed=21)
    dev = res.deviations()
    assert dev[0, 0] <= res.tolerance          # A(0,g) near integral(g)
    assert dev[1, 0] <= res.tolerance          # A(1,g) near 0
    assert abs(res.expected[0, 0] - gen.pi[0]) < 1e-12


def test_character_function_integral_exact():
    gen = bernoulli(2, [0.3, 0.7])
    g = character_on_digits(2, 8, m=1)
    from hostlab.fourier import ft_adic
    from hostlab.measures import realize
    # integral of the truncated character equals the transform of the level-8
    # discretization restricted to cell left endpoints
    mu = realize(gen, 8)
    direct = np.dot(mu.weights, np.exp(2j * np.pi * np.arange(256) / 256))
    assert abs(g.integral(gen) - direct) < 1e-14
