"""Small numeric helpers: stable softmax, tree log-sum-exp, simplex projection."""

import numpy as np


def logsumexp_tree(x):
    """log(sum(exp(x))) with max shift and a fixed pairwise reduction tree.

    The pairwise tree keeps the reduction order independent of how the input
    might be chunked, so the result is bit-reproducible, and it bounds the
    accumulated rounding error by O(log n) ulps.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size == 0:
        return -np.inf
    m = np.max(x)
    if not np.isfinite(m):
        return float(m)
    t = np.exp(x - m)
    while t.size > 1:
        half = t.size // 2
        pair = t[: 2 * half : 2] + t[1 : 2 * half : 2]
        if t.size % 2:
            pair = np.concatenate([pair, t[-1:]])
        t = pair
    return float(m + np.log(t[0]))


def softmax(x):
    """Normalized exponentials of x, evaluated with max subtraction."""
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(x - np.max(x))
    return e / e.sum()


def project_simplex(x, total=1.0):
    """Euclidean projection of x onto {y >= 0, sum(y) = total}."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - total
    rho = np.nonzero(u * np.arange(1, n + 1) > css)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(x - theta, 0.0)
