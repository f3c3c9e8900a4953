"""Exact Gibbs computations for small systems.

The energy depends on a configuration only through its count matrix, so the
Gibbs law of the count matrix can be computed exactly by enumerating the
compositions of each block size into q colors and attaching multinomial
multiplicities: the weight of a count matrix B is

    prod_k multinomial(|S_k|; B[k, :]) * exp(-H(B)).

Everything is normalized in log space.  This module is the brute-force
oracle for the sampler, the rate functions and the log-Sobolev checks; for
tiny N a full q^N configuration enumeration is also provided so the two
routes can be cross-checked against each other.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import CapacityError, InvalidInputError
from .model import check_consistent, count_matrix, hamiltonian_quadratic, validate_config
from .numutil import logsumexp_tree, softmax

DEFAULT_SUPPORT_CAP = 10_000_000


def enumerate_block_compositions(n, q):
    """All vectors (b_1, .., b_q) of nonnegative integers summing to n.

    Emitted in colexicographic order (last coordinate varies slowest), with
    no duplicates; the stable order is part of the output contract.  The
    number of rows is C(n+q-1, q-1).
    """
    if n < 0 or q < 1:
        raise InvalidInputError(f"need n >= 0 and q >= 1, got n={n}, q={q}")
    if q == 1:
        return np.array([[n]], dtype=np.int64)
    parts = []
    for last in range(n + 1):
        head = enumerate_block_compositions(n - last, q - 1)
        col = np.full((head.shape[0], 1), last, dtype=np.int64)
        parts.append(np.hstack([head, col]))
    return np.vstack(parts)


def _pair_energy_terms(counts, beta, alpha, N):
    """Vector of energies for an array of count matrices (P, s, q).

    Uses sum_{k != k'} b_k b_k' = (colsum)^2 - sum_k b_k^2 to avoid the
    explicit double block sum.
    """
    b = counts.astype(np.float64)
    s2 = np.einsum("pkc,pkc->p", b, b)
    col = b.sum(axis=1)
    t2 = np.einsum("pc,pc->p", col, col)
    return -((beta - alpha) * s2 + alpha * t2) / (2.0 * N)


@dataclass(frozen=True)
class ExactDistribution:
    """Exact Gibbs law of the count matrix.

    support is a (P, s, q) integer array enumerating every count matrix,
    ordered colexicographically per block with block 0 outermost.
    probabilities[i] = exp(log_weights[i] - log_Z).
    """

    support: np.ndarray
    log_weights: np.ndarray
    log_Z: float
    probabilities: np.ndarray
    params: "ModelParams" = None
    blocks: "BlockStructure" = None

    def __len__(self):
        return self.support.shape[0]


def exact_distribution(blocks, params, cap=DEFAULT_SUPPORT_CAP):
    """Exact Gibbs distribution over count matrices.

    The support has prod_k C(|S_k|+q-1, q-1) entries; a CapacityError naming
    the required size is raised when that exceeds cap.  Multinomial
    coefficients are accumulated via log-Gamma so block sizes well beyond
    170 stay finite, and the normalization uses the pairwise-tree
    log-sum-exp, making log_Z bit-reproducible.
    """
    check_consistent(params, blocks)
    q = params.q
    comp = [enumerate_block_compositions(n, q) for n in blocks.sizes]
    sizes = [c.shape[0] for c in comp]
    required = math.prod(sizes)
    if required > cap:
        raise CapacityError(
            f"exact support needs {required} count matrices, cap is {cap}",
            required=required,
        )
    idx = np.indices(sizes, dtype=np.int64).reshape(blocks.s, -1)
    support = np.stack([comp[k][idx[k]] for k in range(blocks.s)], axis=1)

    log_mult = np.zeros(required, dtype=np.float64)
    for k, n in enumerate(blocks.sizes):
        lw_k = gammaln(n + 1.0) - gammaln(comp[k] + 1.0).sum(axis=1)
        log_mult += lw_k[idx[k]]

    energies = _pair_energy_terms(support, params.beta, params.alpha, blocks.N)
    log_weights = log_mult - energies
    log_Z = logsumexp_tree(log_weights)
    probabilities = np.exp(log_weights - log_Z)
    return ExactDistribution(
        support=support,
        log_weights=log_weights,
        log_Z=log_Z,
        probabilities=probabilities,
        params=params,
        blocks=blocks,
    )


@dataclass(frozen=True)
class ConfigurationDistribution:
    """Exact Gibbs law over all q^N configurations (tiny N only).

    Configuration index p encodes colors base q with site 0 as the least
    significant digit; configs[p] is the decoded color vector and
    count_matrices[p] its count matrix.
    """

    configs: np.ndarray
    count_matrices: np.ndarray
    log_weights: np.ndarray
    log_Z: float
    probabilities: np.ndarray
    params: "ModelParams" = None
    blocks: "BlockStructure" = None

    def __len__(self):
        return self.configs.shape[0]


def full_configuration_distribution(blocks, params, cap=DEFAULT_SUPPORT_CAP):
    """Enumerate all q^N configurations and their exact Gibbs probabilities."""
    check_consistent(params, blocks)
    q, N = params.q, blocks.N
    required = q**N
    if required > cap:
        raise CapacityError(
            f"full enumeration needs {required} configurations, cap is {cap}",
            required=required,
        )
    codes = np.arange(required, dtype=np.int64)
    place = q ** np.arange(N, dtype=np.int64)
    configs = (codes[:, None] // place[None, :]) % q
    onehot = (configs[:, :, None] == np.arange(q)).astype(np.int16)
    counts = np.add.reduceat(onehot, blocks.offsets[:-1], axis=1)
    log_weights = -_pair_energy_terms(counts, params.beta, params.alpha, N)
    log_Z = logsumexp_tree(log_weights)
    probabilities = np.exp(log_weights - log_Z)
    return ConfigurationDistribution(
        configs=configs.astype(np.int8),
        count_matrices=counts.astype(np.int16),
        log_weights=log_weights,
        log_Z=log_Z,
        probabilities=probabilities,
        params=params,
        blocks=blocks,
    )


def exact_conditional(config, site, blocks, params):
    """Exact conditional law of one site's color given all the others.

    Proportional to exp(-H(config with the site recolored)) over the q
    colors; evaluated through the quadratic form of the count matrix with
    max subtraction before exponentiating.
    """
    config = validate_config(config, blocks, params.q)
    if not 0 <= site < blocks.N:
        raise InvalidInputError(f"site {site} out of range [0, {blocks.N})")
    B = count_matrix(config, blocks, params.q)
    k = blocks.block_of(site)
    B[k, config[site]] -= 1
    logw = np.empty(params.q, dtype=np.float64)
    for c in range(params.q):
        B[k, c] += 1
        logw[c] = -hamiltonian_quadratic(B, params, blocks)
        B[k, c] -= 1
    return softmax(logw)


def exact_observable_distribution(dist, k, c):
    """Marginal law of the block-color count b_{k,c} under an exact law.

    Returns an array of length |S_k| + 1 whose index v holds P(b_{k,c} = v).
    """
    if not 0 <= k < dist.support.shape[1]:
        raise InvalidInputError(f"block index {k} out of range")
    if not 0 <= c < dist.support.shape[2]:
        raise InvalidInputError(f"color index {c} out of range")
    size_k = int(dist.support[0, k].sum())
    return np.bincount(
        dist.support[:, k, c].astype(np.int64),
        weights=dist.probabilities,
        minlength=size_k + 1,
    )


def export_csv(dist, path):
    """Write the exact law as CSV with a JSON comment header.

    The first line is '# ' + a JSON object carrying the model constants and
    log_Z; then a header row b_1_1,..,b_s_q,log_weight,probability with
    1-based block and color indices, and one row per support point.
    """
    s = dist.support.shape[1]
    q = dist.support.shape[2]
    header = {
        "q": q,
        "s": s,
        "alpha": dist.params.alpha,
        "beta": dist.params.beta,
        "gamma": list(dist.params.gamma),
        "sizes": list(dist.blocks.sizes),
        "log_Z": dist.log_Z,
    }
    cols = [f"b_{k + 1}_{c + 1}" for k in range(s) for c in range(q)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(header) + "\n")
        fh.write(",".join(cols + ["log_weight", "probability"]) + "\n")
        flat = dist.support.reshape(len(dist), s * q)
        for row, lw, p in zip(flat, dist.log_weights, dist.probabilities):
            cells = [str(int(v)) for v in row]
            cells.append(format(float(lw), ".17g"))
            cells.append(format(float(p), ".17g"))
            fh.write(",".join(cells) + "\n")
