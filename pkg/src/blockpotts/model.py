"""Block spin Potts model primitives.

Sites 0..N-1 are partitioned into s contiguous blocks and each site carries
one of q colors.  Every ordered pair of equal-color sites (the diagonal
i == j included) contributes -beta/(2N) when both sites share a block and
-alpha/(2N) otherwise.  Because only the number of equal-color pairs enters,
the energy is a quadratic form of the blocks-by-colors count matrix B, which
is therefore the sufficient statistic of the model.

Conventions: colors and sites are 0-based in memory; JSON documents use
1-based colors.  All value types are immutable after construction and all
operations are pure functions, so everything here is safe to share across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidInputError

GAMMA_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Model constants: q colors, s blocks, couplings (alpha, beta), proportions gamma.

    The ferromagnetic regime of interest is 0 < alpha < beta.  The boundary
    cases alpha == beta (block structure invisible to the energy) and
    alpha == beta == 0 (product measure) are accepted because they make
    useful sanity oracles; note the closed-form equilibrium analysis and the
    common-ordering argument behind it require alpha > 0.
    """

    q: int
    s: int
    alpha: float
    beta: float
    gamma: tuple

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 3:
            raise InvalidInputError(f"q must be an integer >= 3, got {self.q}")
        if int(self.s) != self.s or self.s < 1:
            raise InvalidInputError(f"s must be an integer >= 1, got {self.s}")
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "s", int(self.s))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))
        if not (self.beta >= 0.0 and np.isfinite(self.beta)):
            raise InvalidInputError(f"beta must be finite and >= 0, got {self.beta}")
        if not (0.0 <= self.alpha <= self.beta):
            raise InvalidInputError(
                f"need 0 <= alpha <= beta, got alpha={self.alpha}, beta={self.beta}"
            )
        gamma = tuple(float(g) for g in self.gamma)
        object.__setattr__(self, "gamma", gamma)
        if len(gamma) != self.s:
            raise InvalidInputError(f"gamma has {len(gamma)} entries, expected s={self.s}")
        if any(not (0.0 < g < 1.0) for g in gamma) and self.s > 1:
            raise InvalidInputError(f"each gamma_k must lie in (0,1), got {gamma}")
        if self.s == 1 and abs(gamma[0] - 1.0) > GAMMA_SUM_TOL:
            raise InvalidInputError(f"s=1 requires gamma=(1,), got {gamma}")
        if abs(sum(gamma) - 1.0) > GAMMA_SUM_TOL:
            raise InvalidInputError(f"gamma must sum to 1 within {GAMMA_SUM_TOL}, got {gamma}")

    @cached_property
    def gamma_array(self):
        return np.asarray(self.gamma, dtype=np.float64)

    @property
    def uniform_gamma(self):
        """True when every block proportion equals 1/s (within 1e-12)."""
        return bool(np.max(np.abs(self.gamma_array - 1.0 / self.s)) <= 1e-12)

    @property
    def effective_coupling(self):
        """g = (beta + (s-1) alpha) / s, the single parameter of the uniform phase diagram."""
        return (self.beta + (self.s - 1) * self.alpha) / self.s


@dataclass(frozen=True)
class BlockStructure:
    """Concrete block sizes |S_k| of a finite system, laid out contiguously.

    Sites 0..sizes[0]-1 form block 0, the next sizes[1] sites block 1, etc.
    The contiguous layout means the block of a site is found by prefix sums
    and no per-site map needs to be stored in hot loops.
    """

    sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sizes)
        if len(sizes) == 0 or any(n < 1 for n in sizes):
            raise InvalidInputError(f"sizes must be positive integers, got {self.sizes}")
        object.__setattr__(self, "sizes", sizes)

    @property
    def s(self):
        return len(self.sizes)

    @cached_property
    def N(self):
        return int(sum(self.sizes))

    @cached_property
    def offsets(self):
        """Start index of each block plus the terminal N, length s+1."""
        return np.concatenate([[0], np.cumsum(self.sizes)]).astype(np.int64)

    @cached_property
    def site_blocks(self):
        """Array of length N mapping each site to its block index."""
        return np.repeat(np.arange(self.s, dtype=np.int64), self.sizes)

    def block_of(self, site):
        if not 0 <= site < self.N:
            raise InvalidInputError(f"site {site} out of range [0, {self.N})")
        return int(self.site_blocks[site])


def check_consistent(params, blocks):
    """Raise unless params and blocks agree on the number of blocks."""
    if params.s != blocks.s:
        raise InvalidInputError(
            f"params has s={params.s} blocks but structure has {blocks.s}"
        )


def validate_config(config, blocks, q):
    """Return config as an int array after checking length and color range."""
    config = np.asarray(config, dtype=np.int64)
    if config.ndim != 1 or config.size != blocks.N:
        raise InvalidInputError(
            f"configuration has length {config.size}, expected N={blocks.N}"
        )
    if config.size and (config.min() < 0 or config.max() >= q):
        raise InvalidInputError(f"colors must lie in [0, {q}), got range "
                                f"[{config.min()}, {config.max()}]")
    return config


def count_matrix(config, blocks, q):
    """Count matrix B with B[k, c] = number of sites of color c in block k.

    Row k sums to |S_k| by construction.
    """
    config = validate_config(config, blocks, q)
    off = blocks.offsets
    out = np.zeros((blocks.s, q), dtype=np.int64)
    for k in range(blocks.s):
        out[k] = np.bincount(config[off[k]:off[k + 1]], minlength=q)
    return out


def hamiltonian_direct(config, blocks, params):
    """Energy from the defining pair sum over ordered pairs, diagonal included.

    H = -beta/(2N) * #{ordered intra-block equal-color pairs}
        -alpha/(2N) * #{ordered inter-block equal-color pairs}.

    The self pairs (i, i) are part of the intra-block count; they contribute
    the constant -beta/(2N) * N and must not be "corrected away", otherwise
    the quadratic-form identity below breaks.
    """
    check_consistent(params, blocks)
    colors = validate_config(config, blocks, params.q)
    same_color = colors[:, None] == colors[None, :]
    same_block = blocks.site_blocks[:, None] == blocks.site_blocks[None, :]
    n_intra = int(np.count_nonzero(same_color & same_block))
    n_inter = int(np.count_nonzero(same_color & ~same_block))
    return -(params.beta * n_intra + params.alpha * n_inter) / (2.0 * blocks.N)


def hamiltonian_quadratic(counts, params, blocks):
    """Energy as the quadratic form -tr(B^t A B) / (2N) of the count matrix.

    A is the s-by-s block interaction matrix with beta on and alpha off the
    diagonal.  For integer counts the evaluation is exact in double
    precision, so this agrees with hamiltonian_direct to rounding error.
    """
    check_consistent(params, blocks)
    B = np.asarray(counts, dtype=np.float64)
    if B.shape != (blocks.s, params.q):
        raise InvalidInputError(f"count matrix shape {B.shape}, expected "
                                f"({blocks.s}, {params.q})")
    A = np.full((blocks.s, blocks.s), params.alpha, dtype=np.float64)
    np.fill_diagonal(A, params.beta)
    return -float(np.trace(B.T @ A @ B)) / (2.0 * blocks.N)


def model_to_json(params, blocks):
    """Single JSON document describing params and block sizes."""
    check_consistent(params, blocks)
    return {
        "q": params.q,
        "s": params.s,
        "alpha": params.alpha,
        "beta": params.beta,
        "gamma": list(params.gamma),
        "sizes": list(blocks.sizes),
    }


def model_from_json(doc):
    """Inverse of model_to_json; gamma defaults to sizes/N when absent."""
    sizes = [int(n) for n in doc["sizes"]]
    gamma = doc.get("gamma")
    if gamma is None:
        total = float(sum(sizes))
        gamma = [n / total for n in sizes]
    params = ModelParams(
        q=int(doc["q"]),
        s=int(doc.get("s", len(sizes))),
        alpha=float(doc["alpha"]),
        beta=float(doc["beta"]),
        gamma=tuple(gamma),
    )
    blocks = BlockStructure(sizes=tuple(sizes))
    check_consistent(params, blocks)
    return params, blocks


def config_to_json(config):
    """Flat list of 1-based colors."""
    return [int(c) + 1 for c in np.asarray(config, dtype=np.int64)]


def config_from_json(values, blocks, q):
    """Parse a flat list of 1-based colors into a 0-based config array."""
    arr = np.asarray(values, dtype=np.int64) - 1
    return validate_config(arr, blocks, q)
