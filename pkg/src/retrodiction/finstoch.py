"""Finite stochastic maps: composition, tensor product, Bayesian inversion.

Stochastic maps are plain ``float64`` arrays of shape ``(n_out, n_in)``
whose columns are probability distributions; ``f[y, x]`` is the probability
of ``y`` given ``x``. Probability vectors are 1-D arrays. Validation happens
in :func:`as_stochastic` / :func:`as_prob`; everything else trusts its
inputs.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EvidenceNotAbsolutelyContinuous, InvalidStochastic
from .matrixcore import eig_cutoff

NEG_CLAMP = 1e-12
SUM_TOL = 1e-10


def as_stochastic(f) -> np.ndarray:
    """Validate and normalize a column-stochastic matrix."""
    f = np.array(f, dtype=float)
    if f.ndim != 2 or 0 in f.shape:
        raise InvalidStochastic(f"stochastic matrix must be 2-D and non-empty, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise InvalidStochastic("stochastic matrix has non-finite entries")
    bad = np.argwhere(f < -NEG_CLAMP)
    if bad.size:
        y, x = bad[0]
        raise InvalidStochastic(f"entry ({y}, {x}) is negative: {f[y, x]:.3e}")
    f = np.clip(f, 0.0, None)
    sums = f.sum(axis=0)
    for x, s in enumerate(sums):
        if abs(s - 1.0) > SUM_TOL:
            raise InvalidStochastic(f"column {x} sums to {s:.12g}")
    return f / sums


def as_prob(p) -> np.ndarray:
    """Validate and normalize a probability vector."""
    p = np.array(p, dtype=float)
    if p.ndim == 2 and p.shape[1] == 1:
        p = p[:, 0]
    if p.ndim != 1 or p.size == 0:
        raise InvalidStochastic(f"probability vector must be 1-D and non-empty, got shape {p.shape}")
    return as_stochastic(p[:, None])[:, 0]


def identity(n: int) -> np.ndarray:
    return np.eye(n)


def deterministic(func: Sequence[int], n_out: int) -> np.ndarray:
    """The stochastic map of a function given as a table ``x -> func[x]``."""
    f = np.zeros((n_out, len(func)))
    f[list(func), np.arange(len(func))] = 1.0
    return f


def swap(n: int, m: int) -> np.ndarray:
    """Braiding X x Y -> Y x X under row-major pair indexing."""
    g = np.zeros((m * n, n * m))
    for x in range(n):
        for y in range(m):
            g[y * n + x, x * m + y] = 1.0
    return g


def compose(g: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``g o f`` (apply ``f`` first). A 1-D ``f`` is pushed forward."""
    if g.shape[1] != f.shape[0]:
        raise DimensionMismatch(f"cannot compose {g.shape} after {f.shape}")
    return g @ f


def pushforward(f: np.ndarray, p: np.ndarray) -> np.ndarray:
    return compose(f, p)


def tensor(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Monoidal product; pairs ``(x, x')`` are indexed as ``x * n' + x'``."""
    return np.kron(f, g)


def support(p: np.ndarray) -> np.ndarray:
    """Boolean mask of entries above the shared rank cutoff."""
    return p > eig_cutoff(float(np.max(p)))


def bayes_inverse(f: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Bayesian inverse of ``f`` with respect to the prior ``p``.

    Column ``y`` of the result is the posterior ``f[y, x] p[x] / q[y]``.
    Where the prediction ``q = f p`` vanishes, the column is the uniform
    distribution on the support of ``p``.
    """
    if f.shape[1] != p.shape[0]:
        raise DimensionMismatch(f"prior has length {p.shape[0]}, map expects {f.shape[1]}")
    q = f @ p
    reach = support(q)
    joint = (f * p[None, :]).T
    inv = np.empty_like(joint)
    inv[:, reach] = joint[:, reach] / q[reach]
    supp_p = support(p).astype(float)
    inv[:, ~reach] = (supp_p / supp_p.sum())[:, None]
    return inv


def absolutely_continuous(e: np.ndarray, q: np.ndarray) -> bool:
    """``e << q``: every outcome with evidence must be predicted."""
    return not np.any(support(e) & ~support(q))


def jeffrey_update(f: np.ndarray, p: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Push soft evidence ``e`` on the outputs back to an updated prior."""
    q = f @ p
    if e.shape != q.shape:
        raise DimensionMismatch(f"evidence has length {e.shape[0]}, map outputs {q.shape[0]}")
    if not absolutely_continuous(e, q):
        bad = np.flatnonzero(support(e) & ~support(q))
        raise EvidenceNotAbsolutelyContinuous(
            f"evidence puts weight on outcomes {bad.tolist()} that have zero prediction"
        )
    return bayes_inverse(f, p) @ e


def random_stochastic(
    n_out: int, n_in: int, rng: np.random.Generator, zero_rows: Sequence[int] = ()
) -> np.ndarray:
    """Columns drawn from a flat Dirichlet, optionally with forbidden outputs."""
    alpha = np.ones(n_out)
    f = rng.dirichlet(alpha, size=n_in).T
    if len(zero_rows):
        f[list(zero_rows), :] = 0.0
        f /= f.sum(axis=0, keepdims=True)
    return f


def random_prob(n: int, rng: np.random.Generator, zeros: Sequence[int] = ()) -> np.ndarray:
    p = rng.dirichlet(np.ones(n))
    if len(zeros):
        p[list(zeros)] = 0.0
        p /= p.sum()
    return p


def random_permutation(n: int, rng: np.random.Generator) -> np.ndarray:
    return deterministic(rng.permutation(n), n)
