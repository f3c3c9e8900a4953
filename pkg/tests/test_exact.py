"""Exact partition function, count-matrix law, conditionals, and marginals."""

import math

import numpy as np
import pytest

from blockpotts import (
    BlockStructure,
    CapacityError,
    InvalidInputError,
    ModelParams,
    enumerate_block_compositions,
    exact_conditional,
    exact_distribution,
    exact_observable_distribution,
    full_configuration_distribution,
)
from blockpotts.exact import export_csv

import oracles


def make(q, sizes, alpha, beta):
    total = sum(sizes)
    gamma = tuple(n / total for n in sizes)
    if len(sizes) == 1:
        gamma = (1.0,)
    p = ModelParams(q=q, s=len(sizes), alpha=alpha, beta=beta, gamma=gamma)
    return p, BlockStructure(sizes=sizes)


def test_compositions_trivial_cases():
    assert enumerate_block_compositions(0, 3).tolist() == [[0, 0, 0]]
    assert enumerate_block_compositions(2, 2).tolist() == [[2, 0], [1, 1], [0, 2]]


def test_compositions_count_stars_and_bars():
    assert enumerate_block_compositions(10, 3).shape[0] == 66  # C(12, 2)


def test_compositions_colex_order_no_duplicates():
    comp = enumerate_block_compositions(5, 4)
    assert np.all(comp.sum(axis=1) == 5)
    seen = {tuple(row) for row in comp}
    assert len(seen) == comp.shape[0] == math.comb(8, 3)
    reversed_rows = [tuple(row[::-1]) for row in comp]
    assert reversed_rows == sorted(reversed_rows)


def test_log_Z_two_sites_closed_form():
    p, b = make(3, (2,), 0.0, 1.0)
    dist = exact_distribution(b, p)
    assert dist.log_Z == pytest.approx(math.log(3 * math.e + 6 * math.exp(0.5)), abs=1e-13)


def test_probabilities_sum_to_one_and_match_weights():
    p, b = make(3, (3, 2), 0.4, 1.1)
    dist = exact_distribution(b, p)
    assert abs(dist.probabilities.sum() - 1.0) <= 1e-12
    assert np.allclose(dist.probabilities,
                       np.exp(dist.log_weights - dist.log_Z), rtol=0, atol=1e-15)
    n_expected = math.comb(3 + 2, 2) * math.comb(2 + 2, 2)
    assert len(dist) == n_expected


def test_zero_couplings_give_multinomial_law():
    p, b = make(3, (4, 2), 0.0, 0.0)
    dist = exact_distribution(b, p)
    for i in range(len(dist)):
        expected = 1.0
        for k, n in enumerate(b.sizes):
            row = dist.support[i, k]
            coeff = math.factorial(n)
            for v in row:
                coeff //= math.factorial(int(v))
            expected *= coeff / 3**n
        assert dist.probabilities[i] == pytest.approx(expected, rel=1e-12)


def test_count_law_matches_full_enumeration_N6():
    p, b = make(3, (3, 3), 0.5, 1.0)
    dist = exact_distribution(b, p)
    law = oracles.brute_count_law(b.sizes, 3, 0.5, 1.0)
    tv = 0.0
    for i in range(len(dist)):
        key = tuple(int(v) for v in dist.support[i].ravel())
        tv += abs(dist.probabilities[i] - law.pop(key, 0.0))
    tv += sum(abs(v) for v in law.values())
    assert 0.5 * tv <= 1e-13


def test_full_configuration_distribution_agrees_with_compositions():
    for sizes, beta in (((4,), 0.7), ((2, 3), 1.3)):
        p, b = make(3, sizes, beta / 2, beta)
        dist = exact_distribution(b, p)
        full = full_configuration_distribution(b, p)
        assert full.log_Z == pytest.approx(dist.log_Z, abs=1e-12)
        # push forward configurations onto count matrices
        acc = {}
        for i in range(len(full)):
            key = tuple(int(v) for v in full.count_matrices[i].ravel())
            acc[key] = acc.get(key, 0.0) + full.probabilities[i]
        tv = 0.0
        for i in range(len(dist)):
            key = tuple(int(v) for v in dist.support[i].ravel())
            tv += abs(dist.probabilities[i] - acc.pop(key, 0.0))
        tv += sum(abs(v) for v in acc.values())
        assert 0.5 * tv <= 1e-12


def test_log_Z_monotone_in_beta():
    for sizes in ((4,), (2, 2), (3, 2)):
        for beta in (0.1, 0.5, 1.0, 2.0):
            p1, b = make(3, sizes, beta / 2, beta)
            p2, _ = make(3, sizes, beta / 2, beta + 0.1)
            assert exact_distribution(b, p2).log_Z > exact_distribution(b, p1).log_Z


def test_capacity_error_names_required_size():
    p, b = make(3, (8, 8), 0.2, 0.5)
    required = math.comb(8 + 2, 2) ** 2
    with pytest.raises(CapacityError) as err:
        exact_distribution(b, p, cap=required - 1)
    assert err.value.required == required
    assert str(required) in str(err.value)


def test_conditional_uniform_cases():
    p, b = make(3, (2, 2), 0.0, 0.0)
    cond = exact_conditional([0, 1, 2, 0], 1, b, p)
    assert np.allclose(cond, 1 / 3, atol=1e-15)
    # single site: every color has the same self energy
    p1, b1 = make(3, (1,), 0.0, 2.0)
    assert np.allclose(exact_conditional([1], 0, b1, p1), 1 / 3, atol=1e-15)


def test_conditional_pair_ratio():
    # completing (1,1,.) with the same color adds 4 ordered equal pairs
    p, b = make(3, (3,), 0.0, 1.0)
    cond = exact_conditional([0, 0, 2], 2, b, p)
    assert cond[0] / cond[1] == pytest.approx(math.exp(2.0 / 3.0), rel=1e-13)


def test_conditional_matches_joint_ratio():
    rng = np.random.default_rng(5)
    p, b = make(3, (3, 3), 0.45, 0.9)
    for _ in range(25):
        cfg = rng.integers(0, 3, size=6)
        site = int(rng.integers(0, 6))
        cond = exact_conditional(cfg, site, b, p)
        brute = oracles.brute_conditional(cfg.tolist(), site, b.sizes, 3, 0.45, 0.9)
        assert np.max(np.abs(cond - np.asarray(brute))) <= 1e-12


def test_conditional_site_out_of_range():
    p, b = make(3, (2,), 0.0, 1.0)
    with pytest.raises(InvalidInputError):
        exact_conditional([0, 1], 2, b, p)


def test_observable_distribution_binomial_at_zero_coupling():
    p, b = make(3, (5, 3), 0.0, 0.0)
    dist = exact_distribution(b, p)
    for k, n in enumerate(b.sizes):
        for c in range(3):
            law = exact_observable_distribution(dist, k, c)
            assert law.size == n + 1
            assert np.max(np.abs(law - oracles.binomial_pmf(n, 1 / 3))) <= 1e-13


def test_observable_distribution_matches_full_enumeration():
    p, b = make(3, (3, 3), 0.5, 1.0)
    dist = exact_distribution(b, p)
    full = full_configuration_distribution(b, p)
    for (k, c) in ((0, 0), (1, 2)):
        law = exact_observable_distribution(dist, k, c)
        acc = np.zeros(b.sizes[k] + 1)
        for i in range(len(full)):
            acc[full.count_matrices[i, k, c]] += full.probabilities[i]
        assert np.max(np.abs(law - acc)) <= 1e-13
        assert law.sum() == pytest.approx(1.0, abs=1e-12)


def test_export_csv_round_trip(tmp_path):
    import json

    p, b = make(3, (2, 2), 0.5, 1.0)
    dist = exact_distribution(b, p)
    path = tmp_path / "exact.csv"
    export_csv(dist, path)
    lines = path.read_text().splitlines()
    header = json.loads(lines[0][2:])
    assert header["log_Z"] == pytest.approx(dist.log_Z)
    assert lines[1].split(",")[:3] == ["b_1_1", "b_1_2", "b_1_3"]
    assert len(lines) == 2 + len(dist)
    probs = [float(line.split(",")[-1]) for line in lines[2:]]
    assert sum(probs) == pytest.approx(1.0, abs=1e-12)
