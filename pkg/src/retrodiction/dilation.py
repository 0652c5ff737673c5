"""Dilations of states, dilational equality, and dilation factorization.

A dilation of a state ``alpha`` on ``A`` is a state on ``A (x) E`` whose
partial trace over ``E`` is ``alpha``. Every dilation factors through the
canonical one built from the block embedding ``A -> M_n``, which is what
makes the support-projection test for dilational equality complete.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from . import channel as ch
from . import matrixcore as mc
from .cstar import (
    Algebra,
    Element,
    State,
    matrix_algebra,
    pair_index,
    partial_trace_element,
    require_factors,
    support_projection_state,
    tensor_algebra,
    unit,
)
from .errors import DimensionMismatch, NotADilation
from .matrixcore import Tolerance, get_tolerance


@dataclass(frozen=True, eq=False)
class Dilation:
    base_state: State
    environment: Algebra
    joint: State

    def __post_init__(self) -> None:
        a, env = require_factors(self.joint.algebra)
        if a != self.base_state.algebra or env != self.environment:
            raise DimensionMismatch(
                f"joint lives in {a} (x) {env}, expected {self.base_state.algebra} (x) {self.environment}"
            )
        marginal = partial_trace_element(self.joint, 1)
        if not marginal.close_to(self.base_state):
            gap = (marginal - self.base_state).norm()
            raise NotADilation(f"marginal differs from the base state by {gap:.3e}")


@dataclass(frozen=True, eq=False)
class _Canonical:
    n: int
    probs: np.ndarray  # eigenvalues of phi(alpha), rank-cut values set to 0
    basis: np.ndarray  # eigenvectors of phi(alpha) as columns
    vector: np.ndarray  # sum_i sqrt(p_i) |i> (x) |i>


def _canonical(alpha: State, tol: Tolerance | None = None) -> _Canonical:
    big = alpha.to_matrix()
    lam, vec = mc.herm_eig(big, tol)
    p = np.where(lam > mc.eig_cutoff(float(lam[0]), tol), lam, 0.0)
    root = np.sqrt(p)
    v = np.einsum("i,ai,bi->ab", root, vec, vec).reshape(-1)
    return _Canonical(big.shape[0], p, vec, v)


def canonical_purification(alpha: State, tol: Tolerance | None = None) -> Dilation:
    """The dilation ``(psi (x) id)(nu)`` of ``alpha`` with environment ``M_n``.

    ``nu`` is the vector state ``sum_i sqrt(p_i) |i>|i>`` built from an
    eigenbasis of the block-diagonal embedding of ``alpha``. For a matrix
    algebra this is the usual purification; for direct sums the pinching
    makes it mixed.
    """
    a = alpha.algebra
    c = _canonical(alpha, tol)
    n = c.n
    env = matrix_algebra(n)
    vmat = c.vector.reshape(n, n)
    blocks = []
    for o, m in zip(a.offsets, a.block_dims):
        w = vmat[o : o + m, :].reshape(-1)
        blocks.append(np.outer(w, w.conj()))
    return Dilation(alpha, env, State(tensor_algebra(a, env), blocks))


def derived_dilation(alpha: State, g: ch.LinearBlockMap, tol: Tolerance | None = None) -> Dilation:
    """``(id (x) G)`` applied to the canonical purification; ``G: M_n -> E``."""
    n = alpha.algebra.hilbert_dim
    if g.domain != matrix_algebra(n):
        raise DimensionMismatch(f"G must act on M{n}, got {g.domain}")
    pi = canonical_purification(alpha, tol)
    joint = ch.apply_on_factor(g, pi.joint, 1)
    return Dilation(alpha, g.codomain, State.of(joint))


def _check_pair(e: ch.LinearBlockMap, f: ch.LinearBlockMap, alpha: State) -> None:
    if e.domain != alpha.algebra or f.domain != alpha.algebra:
        raise DimensionMismatch(f"maps must act on {alpha.algebra}")
    if e.codomain != f.codomain:
        raise DimensionMismatch(f"codomains differ: {e.codomain} vs {f.codomain}")


def dilation_gap(
    e: ch.LinearBlockMap, f: ch.LinearBlockMap, alpha: State, tol: Tolerance | None = None
) -> float:
    """Normalized distance between ``e o Ad_P`` and ``f o Ad_P``, ``P`` the support of ``alpha``."""
    _check_pair(e, f, alpha)
    p = support_projection_state(alpha, tol)
    return mc.rel_residual(ch.compress(e, p).matrix, ch.compress(f, p).matrix)


def dilationally_equal(
    e: ch.LinearBlockMap, f: ch.LinearBlockMap, alpha: State, tol: Tolerance | None = None
) -> bool:
    """Support-projection criterion: ``e o Ad_P == f o Ad_P``."""
    _check_pair(e, f, alpha)
    p = support_projection_state(alpha, tol)
    return mc.close(ch.compress(e, p).matrix, ch.compress(f, p).matrix, tol)


ENV_SCHEDULE = ("1", "2", "n")


def dilationally_equal_empirical(
    e: ch.LinearBlockMap,
    f: ch.LinearBlockMap,
    alpha: State,
    trials: int = 6,
    seed=None,
    tol: Tolerance | None = None,
) -> bool:
    """Look for a dilation that separates ``e`` and ``f``.

    Always tries the canonical purification first, then ``trials`` derived
    dilations ``(id (x) G) pi`` with random ``G: M_n -> M_k`` and ``k``
    cycling through 1, 2, n. Returns False on the first witnessed
    difference.
    """
    _check_pair(e, f, alpha)
    rng = ch.as_rng(seed)
    n = alpha.algebra.hilbert_dim
    pi = canonical_purification(alpha, tol)

    def separates(d: Element) -> bool:
        left = ch.apply_on_factor(e, d, 0)
        right = ch.apply_on_factor(f, d, 0)
        return not left.close_to(right, tol)

    if separates(pi.joint):
        return False
    for t in range(trials):
        label = ENV_SCHEDULE[t % len(ENV_SCHEDULE)]
        k = n if label == "n" else int(label)
        env_dim = ceil(n / k) + int(rng.integers(0, 2))
        g = ch.random_channel(matrix_algebra(n), matrix_algebra(k), env_dim, rng)
        d = ch.apply_on_factor(g, pi.joint, 1)
        if separates(d):
            return False
    return True


def absolutely_continuous(eps: State, beta: State, tol: Tolerance | None = None) -> bool:
    """``eps << beta``: the support of ``eps`` lies inside the support of ``beta``."""
    if eps.algebra != beta.algebra:
        raise DimensionMismatch(f"states live in {eps.algebra} and {beta.algebra}")
    pe = support_projection_state(eps, tol)
    pb = support_projection_state(beta, tol)
    return (pb @ pe @ pb).close_to(pe, tol)


def factor_dilation(d: Dilation, tol: Tolerance | None = None) -> ch.Channel:
    """Find ``G: M_n -> E`` with ``derived_dilation(alpha, G).joint == d.joint``.

    The joint state is pushed into ``M_n (x) M_K`` by the block embeddings,
    purified there, and the purifying vector is matched against the
    canonical vector through their common ``M_n`` marginal. The matching
    isometry ``W: C^n -> C^K (x) C^n (x) C^K`` is fixed on the support and
    completed deterministically off it; ``G`` then traces out the last two
    tensor factors and pinches ``M_K`` back onto ``E``.
    """
    tol = get_tolerance(tol)
    alpha, env = d.base_state, d.environment
    a = alpha.algebra
    n, big_k = a.hilbert_dim, env.hilbert_dim
    s_a = ch.inclusions(a)
    s_e = ch.inclusions(env)

    omega = np.zeros((n * big_k, n * big_k), dtype=complex)
    for x in range(a.n_blocks):
        for z in range(env.n_blocks):
            s = np.kron(s_a[x], s_e[z])
            omega += s @ d.joint.blocks[pair_index(a, env, x, z)] @ s.T
    lam, vec = mc.herm_eig(omega, tol)
    lam = np.where(lam > mc.eig_cutoff(float(lam[0]), tol), lam, 0.0)
    purified = np.einsum("i,ai,bi->ab", np.sqrt(lam), vec, vec)
    # rows: H; columns: K (x) H (x) K
    m_prime = purified.reshape(n, big_k * n * big_k)

    c = _canonical(alpha, tol)
    on_support = c.probs > 0
    rows = []
    for i in np.flatnonzero(on_support):
        rows.append(c.basis[:, i].conj() @ m_prime / np.sqrt(c.probs[i]))
    images = np.array(rows).T if rows else np.zeros((m_prime.shape[1], 0), dtype=complex)
    residual = mc.frob(mc.dagger(images) @ images - np.eye(images.shape[1]))
    if residual > 1e-6:
        raise ValueError(f"Schmidt vectors are not orthonormal (residual {residual:.3e})")
    # re-orthonormalize to absorb rounding before completing
    if images.shape[1]:
        u, _, vh = np.linalg.svd(images, full_matrices=False)
        images = u @ vh
    full = mc.complete_orthonormal(images, n)
    order = list(np.flatnonzero(on_support)) + list(np.flatnonzero(~on_support))
    w = np.zeros((m_prime.shape[1], n), dtype=complex)
    for col, i in enumerate(order):
        w += np.outer(full[:, col], c.basis[:, i].conj())

    w3 = w.reshape(big_k, n * big_k, n)
    mid = ch.kraus_transfer([w3[:, j, :] for j in range(n * big_k)])
    _, zeta, _ = ch.block_embedding(env)
    return ch.Channel(matrix_algebra(n), env, zeta.matrix @ mid)


def reconstruction_residual(d: Dilation, g: ch.LinearBlockMap, tol: Tolerance | None = None) -> float:
    rebuilt = derived_dilation(d.base_state, g, tol)
    return (rebuilt.joint - d.joint).norm()


def product_dilation(alpha: State, eps: State) -> Dilation:
    """``alpha (x) eps``; every dilation of a pure state has this form."""
    from .cstar import tensor_element

    return Dilation(alpha, eps.algebra, State.of(tensor_element(alpha, eps)))


def support_identity_residuals(alpha: State, tol: Tolerance | None = None) -> tuple[float, float]:
    """Residuals of ``(Ad_P (x) id) pi = pi`` and ``(id (x) Ad_Q) pi = pi`` for the canonical ``pi``.

    ``P`` is the support of ``alpha`` and ``Q`` the support of its
    block-diagonal embedding.
    """
    pi = canonical_purification(alpha, tol)
    p = support_projection_state(alpha, tol)
    q = mc.support_projection(alpha.to_matrix(), tol)
    left = ch.apply_on_factor(ch.ad_map(p, alpha.algebra), pi.joint, 0)
    right = ch.apply_on_factor(ch.ad_map([q], pi.environment), pi.joint, 1)
    return (left - pi.joint).norm(), (right - pi.joint).norm()


def equal_off_support(
    e: ch.LinearBlockMap, g: ch.LinearBlockMap, alpha: State, tol: Tolerance | None = None
) -> ch.LinearBlockMap:
    """``e o Ad_P + g o Ad_{1-P}``: agrees with ``e`` at ``alpha``, CPTP when both are."""
    p = support_projection_state(alpha, tol)
    perp = unit(alpha.algebra) - p
    out = ch.add(ch.compress(e, p), ch.compress(g, perp))
    if isinstance(e, ch.Channel) and isinstance(g, ch.Channel):
        return ch.Channel.of(out)
    return out
