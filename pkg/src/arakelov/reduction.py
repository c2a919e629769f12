"""LLL reduction of a positive definite quadratic form.

Only used as preprocessing for enumeration: a better basis shrinks the
search tree but never changes which lattice points are found.
"""

from __future__ import annotations

import numpy as np


def lll_gram(gram: np.ndarray, delta: float = 0.99, max_iter: int = 100000) -> np.ndarray:
    """Return a unimodular integer matrix ``U`` with ``U.T @ gram @ U`` LLL-reduced.

    The columns of ``U`` are the reduced basis vectors written in the old basis.
    """
    g = np.array(gram, dtype=float)
    n = g.shape[0]
    u = np.eye(n, dtype=np.int64)
    if n <= 1:
        return u

    def gso(g):
        mu = np.zeros((n, n))
        b = np.zeros(n)
        for i in range(n):
            for j in range(i):
                mu[i, j] = (g[i, j] - np.dot(mu[j, :j] * mu[i, :j], b[:j])) / b[j]
            b[i] = g[i, i] - np.dot(mu[i, :i] ** 2, b[:i])
        return mu, b

    k = 1
    mu, b = gso(g)
    it = 0
    while k < n:
        it += 1
        if it > max_iter:
            break
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                # b_k <- b_k - q b_j
                u[:, k] -= q * u[:, j]
                g[k, :] -= q * g[j, :]
                g[:, k] -= q * g[:, j]
                mu[k, : j + 1] -= q * np.append(mu[j, :j], 1.0)
        if b[k] >= (delta - mu[k, k - 1] ** 2) * b[k - 1]:
            k += 1
        else:
            u[:, [k - 1, k]] = u[:, [k, k - 1]]
            g[[k - 1, k], :] = g[[k, k - 1], :]
            g[:, [k - 1, k]] = g[:, [k, k - 1]]
            mu, b = gso(g)
            k = max(k - 1, 1)
    return u
