"""Entropies, large-deviation rate functions, and the free energy functional.

Two normalizations of blocks-by-colors matrices appear side by side:

* ROW matrices: every row is a probability vector (the law of a block's
  empirical color distribution).  Domain of the entropy rate I and of J.
* BLOCK matrices: row k sums to gamma_k, i.e. membership in C(gamma); mass
  is measured against the whole system.  Domain of J' and of the free
  energy functional G.

The two pictures are linked by nu' = diag(gamma) nu and J(nu) = J'(nu').
Rate evaluations carry an explicit feasibility tag instead of silently
propagating float infinities, so callers must handle the infeasible case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

FEASIBILITY_TOL = 1e-10


def _entropy_term(m):
    """sum m log m with the 0 log 0 := 0 branch taken explicitly."""
    m = np.asarray(m, dtype=np.float64)
    return float(np.sum(np.where(m > 0.0, m * np.log(np.maximum(m, 1e-300)), 0.0)))


def _clean_distribution(v, total=1.0, tol=FEASIBILITY_TOL):
    """Clip and renormalize v when it is within tol of the scaled simplex.

    Returns None for infeasible input (negative mass or wrong total).
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or np.any(v < -tol) or abs(v.sum() - total) > tol:
        return None
    v = np.maximum(v, 0.0)
    return v * (total / v.sum())


def relative_entropy(nu):
    """Relative entropy of a color distribution against the uniform one.

    Equals sum_c nu_c log(q nu_c), lies in [0, log q], and is infinite for
    vectors that are not probability distributions (the usual convention
    for rate functions).
    """
    nu = np.asarray(nu, dtype=np.float64)
    q = nu.size
    clean = _clean_distribution(nu)
    if clean is None:
        return math.inf
    return _entropy_term(clean) + math.log(q)


def rate_I(nu, gamma):
    """Entropy rate of the block empirical color matrix: sum_k gamma_k H(nu_k | uniform)."""
    nu = np.asarray(nu, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    if nu.ndim != 2 or nu.shape[0] != gamma.size:
        raise InvalidInputError(f"matrix shape {nu.shape} does not match {gamma.size} blocks")
    total = 0.0
    for k in range(gamma.size):
        h = relative_entropy(nu[k])
        if math.isinf(h):
            return math.inf
        total += gamma[k] * h
    return total


def interaction_form(mu, params):
    """Quadratic interaction <mu, mu>_A = beta sum mu^2 + alpha sum_{k != k'} mu_k . mu_k'."""
    mu = np.asarray(mu, dtype=np.float64)
    col = mu.sum(axis=0)
    return float(
        (params.beta - params.alpha) * np.sum(mu * mu) + params.alpha * np.dot(col, col)
    )


def free_energy_G(mu, params, gamma=None):
    """Free energy functional G(mu) = <mu, mu>_A / 2 - sum mu log mu on C(gamma).

    mu must be a BLOCK matrix: entry-wise nonnegative with row k summing to
    gamma_k (within 1e-10; inputs inside the tolerance are renormalized).
    Zero entries are allowed, with 0 log 0 = 0.
    """
    gamma = params.gamma_array if gamma is None else np.asarray(gamma, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != (gamma.size, params.q):
        raise InvalidInputError(f"matrix shape {mu.shape}, expected ({gamma.size}, {params.q})")
    rows = []
    for k in range(gamma.size):
        clean = _clean_distribution(mu[k], total=gamma[k])
        if clean is None:
            raise InvalidInputError(
                f"row {k} violates the C(gamma) constraint: sum {mu[k].sum()} vs {gamma[k]}"
            )
        rows.append(clean)
    mu = np.vstack(rows)
    return 0.5 * interaction_form(mu, params) - _entropy_term(mu)


def potts_functional(v, g):
    """Single-community Potts target G^P(v) = g/2 sum v_c^2 - sum v_c log v_c.

    With g = (beta + (s-1) alpha) / s this governs the uniform-block model:
    a BLOCK matrix whose rows all equal v/s has G = G^P(v) + log s.
    """
    v = np.asarray(v, dtype=np.float64)
    clean = _clean_distribution(v)
    if clean is None:
        raise InvalidInputError(f"v is not a probability vector: {v}")
    return 0.5 * g * float(np.dot(clean, clean)) - _entropy_term(clean)


@dataclass(frozen=True)
class RateEvaluation:
    """Value of a rate function at a point, with an explicit feasibility tag.

    value == math.inf exactly when feasible is False; sup_G records the
    normalizing supremum that was supplied by the caller.
    """

    feasible: bool
    value: float
    sup_G: float
    argument: np.ndarray


def _feasible_block(nu, gamma):
    nu = np.asarray(nu, dtype=np.float64)
    if nu.ndim != 2 or nu.shape[0] != gamma.size:
        return None
    rows = []
    for k in range(gamma.size):
        clean = _clean_distribution(nu[k], total=gamma[k])
        if clean is None:
            return None
        rows.append(clean)
    return np.vstack(rows)


def rate_J_prime(nu, params, sup_G, gamma=None):
    """LDP rate of the mass matrix M'_N: J'(nu) = sup_G - G(nu) on C(gamma), else infinite.

    sup_G is the maximum of G over C(gamma); computing it is the equilibrium
    solver's job and it is passed in explicitly so sweeps do not recompute it.
    """
    gamma = params.gamma_array if gamma is None else np.asarray(gamma, dtype=np.float64)
    clean = _feasible_block(nu, gamma)
    if clean is None:
        return RateEvaluation(False, math.inf, sup_G, np.asarray(nu, dtype=np.float64))
    value = sup_G - free_energy_G(clean, params, gamma)
    return RateEvaluation(True, value, sup_G, clean)


def rate_J(nu, params, sup_term, gamma=None):
    """LDP rate of the block empirical matrix M_N under the Gibbs measure.

    J(nu) = -[<Gamma nu, Gamma nu>_A / 2 - I(nu)] + sup_term for ROW
    matrices nu, infinite otherwise.  sup_term is the supremum of the
    bracket over ROW matrices; see sup_term_for_J for obtaining it from
    sup_G.  The change of variables gives J(nu) = J'(Gamma nu).
    """
    gamma = params.gamma_array if gamma is None else np.asarray(gamma, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    if nu.ndim != 2 or nu.shape[0] != gamma.size:
        return RateEvaluation(False, math.inf, sup_term, nu)
    rows = []
    for k in range(gamma.size):
        clean = _clean_distribution(nu[k], total=1.0)
        if clean is None:
            return RateEvaluation(False, math.inf, sup_term, nu)
        rows.append(clean)
    clean = np.vstack(rows)
    scaled = gamma[:, None] * clean
    bracket = 0.5 * interaction_form(scaled, params) - rate_I(clean, gamma)
    return RateEvaluation(True, -bracket + sup_term, sup_term, clean)


def sup_term_for_J(sup_G, q, gamma):
    """Convert sup of G over C(gamma) into the sup term used by rate_J.

    Follows from sum (Gamma nu) log(Gamma nu) = I(nu) - log q + sum_k
    gamma_k log gamma_k, the change of variables between the two LDP
    pictures; the constant log q - sum gamma log gamma is what separates
    the two suprema.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    return sup_G - math.log(q) + _entropy_term(gamma)
