"""Linear maps between direct-sum algebras, stored as transfer matrices.

A map ``A -> B`` is one complex matrix of shape ``(B.dim, A.dim)`` acting on
the concatenated column-major vectorization of the blocks (see
:meth:`Element.vec`). The ``(y, x)`` sub-block, of shape
``(n_y**2, m_x**2)``, is the transfer matrix from domain block ``x`` to
codomain block ``y``. Composition is matrix multiplication and the
Hilbert-Schmidt adjoint is the conjugate transpose.

Kraus operators and Choi matrices are conversion views; nothing else is
stored.
"""
from __future__ import annotations

import os
from typing import Callable, Mapping, Sequence

import numpy as np

from . import matrixcore as mc
from .cstar import (
    Algebra,
    Element,
    State,
    embed_classical,
    matrix_algebra,
    pair_index,
    require_factors,
    tensor_algebra,
)
from .errors import DimensionMismatch, DimensionTooSmall, NotCPTP
from .matrixcore import Tolerance, get_tolerance

DEBUG = os.environ.get("RETRO_DEBUG", "") not in ("", "0")


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def to4(t: np.ndarray, n: int, m: int) -> np.ndarray:
    """View a ``(n*n, m*m)`` transfer block as ``T[i, j, k, l]``: out ``(i, j)``, in ``(k, l)``."""
    return t.reshape(n, n, m, m, order="F")


def to2(t4: np.ndarray) -> np.ndarray:
    n, _, m, _ = t4.shape
    return t4.reshape(n * n, m * m, order="F")


def kraus_transfer(ops: Sequence[np.ndarray]) -> np.ndarray:
    """Transfer matrix of ``X -> sum_j A_j X A_j^dagger``."""
    ops = np.asarray(ops, dtype=complex)
    if ops.ndim == 2:
        ops = ops[None]
    _, n, m = ops.shape
    t4 = np.einsum("jrc,jsd->rscd", ops, ops.conj())
    return t4.reshape(n * n, m * m, order="F")


class LinearBlockMap:
    """A linear map between algebras; no positivity or trace constraints."""

    __slots__ = ("domain", "codomain", "matrix")

    def __init__(self, domain: Algebra, codomain: Algebra, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape != (codomain.dim, domain.dim):
            raise DimensionMismatch(
                f"transfer matrix {matrix.shape} does not fit {domain} -> {codomain}"
            )
        self.domain = domain
        self.codomain = codomain
        self.matrix = matrix

    def block(self, y: int, x: int) -> np.ndarray:
        return self.matrix[self.codomain.vec_slices[y], self.domain.vec_slices[x]]

    def block4(self, y: int, x: int) -> np.ndarray:
        return to4(self.block(y, x), self.codomain.block_dims[y], self.domain.block_dims[x])

    def __call__(self, a: Element) -> Element:
        return apply(self, a)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.domain} -> {self.codomain})"


class Channel(LinearBlockMap):
    """A completely positive trace-preserving map, verified on construction."""

    __slots__ = ()

    def __init__(
        self,
        domain: Algebra,
        codomain: Algebra,
        matrix: np.ndarray,
        check: bool = True,
        tol: Tolerance | None = None,
    ):
        super().__init__(domain, codomain, matrix)
        if check:
            cp, tp = cptp_defect(self)
            tol = get_tolerance(tol)
            if tp > tol.bound(1.0):
                raise NotCPTP(f"not trace preserving (residual {tp:.3e})")
            if cp > 0:
                raise NotCPTP(f"not completely positive (Choi eigenvalue {-cp:.3e})")

    @classmethod
    def of(cls, m: LinearBlockMap, check: bool = True, tol: Tolerance | None = None) -> "Channel":
        return cls(m.domain, m.codomain, m.matrix, check=check, tol=tol)


def _wrap(domain: Algebra, codomain: Algebra, matrix: np.ndarray, *maps: LinearBlockMap) -> LinearBlockMap:
    if all(isinstance(m, Channel) for m in maps):
        return Channel(domain, codomain, matrix, check=DEBUG)
    return LinearBlockMap(domain, codomain, matrix)


def from_blocks(
    domain: Algebra, codomain: Algebra, blocks: Mapping[tuple[int, int], np.ndarray]
) -> np.ndarray:
    """Assemble a full transfer matrix from ``{(y, x): block}``; missing blocks are zero."""
    t = np.zeros((codomain.dim, domain.dim), dtype=complex)
    for (y, x), b in blocks.items():
        t[codomain.vec_slices[y], domain.vec_slices[x]] = b
    return t


def from_kraus(
    domain: Algebra,
    codomain: Algebra,
    kraus: Mapping[tuple[int, int], Sequence[np.ndarray]],
    channel: bool = True,
) -> LinearBlockMap:
    blocks = {}
    for (y, x), ops in kraus.items():
        ops = [np.asarray(k, dtype=complex) for k in ops]
        for k in ops:
            if k.shape != (codomain.block_dims[y], domain.block_dims[x]):
                raise DimensionMismatch(f"Kraus operator for block ({y},{x}) has shape {k.shape}")
        if ops:
            blocks[(y, x)] = kraus_transfer(ops)
    t = from_blocks(domain, codomain, blocks)
    return Channel(domain, codomain, t) if channel else LinearBlockMap(domain, codomain, t)


def from_function(
    domain: Algebra, codomain: Algebra, fn: Callable[[Element], Element]
) -> LinearBlockMap:
    """Tabulate a linear function by evaluating it on the matrix-unit basis."""
    cols = []
    for j in range(domain.dim):
        e = np.zeros(domain.dim, dtype=complex)
        e[j] = 1.0
        out = fn(Element.from_vec(domain, e))
        if out.algebra != codomain:
            raise DimensionMismatch(f"function returned an element of {out.algebra}, expected {codomain}")
        cols.append(out.vec())
    return LinearBlockMap(domain, codomain, np.stack(cols, axis=1))


def identity(a: Algebra) -> Channel:
    return Channel(a, a, np.eye(a.dim), check=False)


def apply(e: LinearBlockMap, a: Element) -> Element:
    if a.algebra != e.domain:
        raise DimensionMismatch(f"map expects {e.domain}, element lives in {a.algebra}")
    out = Element.from_vec(e.codomain, e.matrix @ a.vec())
    if isinstance(e, Channel) and isinstance(a, State):
        return State.of(out)
    return out


def compose(f: LinearBlockMap, e: LinearBlockMap) -> LinearBlockMap:
    """``f o e`` (apply ``e`` first)."""
    if f.domain != e.codomain:
        raise DimensionMismatch(f"cannot compose {f} after {e}")
    return _wrap(e.domain, f.codomain, f.matrix @ e.matrix, f, e)


def compose_all(*maps: LinearBlockMap) -> LinearBlockMap:
    """``compose_all(f, g, h) == f o g o h``."""
    out = maps[-1]
    for m in reversed(maps[:-1]):
        out = compose(m, out)
    return out


def add(e: LinearBlockMap, f: LinearBlockMap) -> LinearBlockMap:
    if (e.domain, e.codomain) != (f.domain, f.codomain):
        raise DimensionMismatch(f"cannot add {e} and {f}")
    return LinearBlockMap(e.domain, e.codomain, e.matrix + f.matrix)


def tensor(e: LinearBlockMap, f: LinearBlockMap) -> LinearBlockMap:
    dom = tensor_algebra(e.domain, f.domain)
    cod = tensor_algebra(e.codomain, f.codomain)
    blocks = {}
    for y, ny in enumerate(e.codomain.block_dims):
        for x, mx in enumerate(e.domain.block_dims):
            a4 = e.block4(y, x)
            if not a4.any():
                continue
            for yy, nyy in enumerate(f.codomain.block_dims):
                for xx, mxx in enumerate(f.domain.block_dims):
                    b4 = f.block4(yy, xx)
                    if not b4.any():
                        continue
                    t = np.einsum("ijkl,abcd->iajbkcld", a4, b4).reshape(
                        ny * nyy, ny * nyy, mx * mxx, mx * mxx
                    )
                    key = (pair_index(e.codomain, f.codomain, y, yy), pair_index(e.domain, f.domain, x, xx))
                    blocks[key] = to2(t)
    return _wrap(dom, cod, from_blocks(dom, cod, blocks), e, f)


def hs_adjoint(e: LinearBlockMap) -> LinearBlockMap:
    """Adjoint with respect to ``<A, B> = sum_x Tr[A_x^dagger B_x]``."""
    return LinearBlockMap(e.codomain, e.domain, e.matrix.conj().T)


def ad_map(
    v: Sequence[np.ndarray] | Element, domain: Algebra, codomain: Algebra | None = None
) -> LinearBlockMap:
    """``A -> V A V^dagger`` with one ``V_x`` per block (block ``x`` to block ``x``)."""
    codomain = domain if codomain is None else codomain
    mats = v.blocks if isinstance(v, Element) else tuple(np.asarray(b, dtype=complex) for b in v)
    if len(mats) != domain.n_blocks or codomain.n_blocks != domain.n_blocks:
        raise DimensionMismatch("Ad_V needs one matrix per block and equal block counts")
    blocks = {}
    for x, vx in enumerate(mats):
        if vx.shape != (codomain.block_dims[x], domain.block_dims[x]):
            raise DimensionMismatch(f"V block {x} has shape {vx.shape}")
        blocks[(x, x)] = kraus_transfer([vx])
    t = from_blocks(domain, codomain, blocks)
    if all(np.allclose(mc.dagger(vx) @ vx, np.eye(vx.shape[1])) for vx in mats):
        return Channel(domain, codomain, t, check=False)
    return LinearBlockMap(domain, codomain, t)


def compress(e: LinearBlockMap, p: Element) -> LinearBlockMap:
    """``e o Ad_p``: the canonical representative of ``e`` at a state with support ``p``."""
    return compose(e, ad_map(p, e.domain))


def trace_functional(a: Algebra) -> np.ndarray:
    return np.concatenate([np.eye(m).reshape(-1, order="F") for m in a.block_dims])


def choi_block(e: LinearBlockMap, y: int, x: int) -> np.ndarray:
    """Choi matrix ``sum_kl E_kl (x) T(E_kl)`` of the ``(y, x)`` component."""
    t4 = e.block4(y, x)
    n, m = t4.shape[0], t4.shape[2]
    return t4.transpose(2, 0, 3, 1).reshape(m * n, m * n)


def cptp_defect(e: LinearBlockMap, tol: Tolerance | None = None) -> tuple[float, float]:
    """``(cp, tp)``: how far ``e`` is from complete positivity and trace preservation.

    ``cp`` is the magnitude of the most negative Choi eigenvalue outside the
    clamp band (0 when CP); ``tp`` is the Frobenius residual of the
    trace-functional intertwining.
    """
    tol = get_tolerance(tol)
    spectra = []
    for y in range(e.codomain.n_blocks):
        for x in range(e.domain.n_blocks):
            c = choi_block(e, y, x)
            herm = mc.frob(c - mc.dagger(c))
            lam = np.linalg.eigvalsh((c + mc.dagger(c)) / 2)
            spectra.append((lam, herm))
    lam_max = max(float(s[0][-1]) for s in spectra)
    band = max(tol.eig_cut_rel * lam_max, mc.ZERO_FLOOR)
    cp = 0.0
    for lam, herm in spectra:
        cp = max(cp, herm - band, -float(lam[0]) - band)
    tp = mc.frob(trace_functional(e.codomain) @ e.matrix - trace_functional(e.domain))
    return max(cp, 0.0), tp


def is_cptp(e: LinearBlockMap, tol: Tolerance | None = None) -> bool:
    cp, tp = cptp_defect(e, tol)
    return cp == 0.0 and tp <= get_tolerance(tol).bound(1.0)


def partial_trace(ab: Algebra, trace_out: int = 1) -> Channel:
    """Discard one tensor factor of ``ab`` (``trace_out=1`` is ``Tr_2``)."""
    a, b = require_factors(ab)
    if trace_out not in (0, 1):
        raise ValueError("trace_out must be 0 or 1")
    keep = a if trace_out == 1 else b
    kraus = {}
    for x, ma in enumerate(a.block_dims):
        for e, mb in enumerate(b.block_dims):
            src = pair_index(a, b, x, e)
            if trace_out == 1:
                ops = [np.kron(np.eye(ma), row[None, :]) for row in np.eye(mb)]
                kraus[(x, src)] = ops
            else:
                ops = [np.kron(row[None, :], np.eye(mb)) for row in np.eye(ma)]
                kraus[(e, src)] = ops
    return from_kraus(ab, keep, kraus)


def apply_on_factor(e: LinearBlockMap, joint: Element, factor: int = 0) -> Element:
    """Apply ``e (x) id`` (``factor=0``) or ``id (x) e`` (``factor=1``) to ``joint``.

    Equivalent to ``apply(tensor(e, identity(env)), joint)`` but never builds
    the tensor transfer matrix.
    """
    a, b = require_factors(joint.algebra)
    src = a if factor == 0 else b
    if src != e.domain:
        raise DimensionMismatch(f"map expects {e.domain}, factor {factor} is {src}")
    if factor == 0:
        out_alg = tensor_algebra(e.codomain, b)
    else:
        out_alg = tensor_algebra(a, e.codomain)
    out = [np.zeros((m, m), dtype=complex) for m in out_alg.block_dims]
    for x, ma in enumerate(a.block_dims):
        for z, mb in enumerate(b.block_dims):
            blk = joint.blocks[pair_index(a, b, x, z)]
            if not blk.any():
                continue
            blk = blk.reshape(ma, mb, ma, mb)
            if factor == 0:
                for y, ny in enumerate(e.codomain.block_dims):
                    t4 = e.block4(y, x)
                    if t4.any():
                        r = np.einsum("ijkl,kalb->iajb", t4, blk)
                        out[pair_index(e.codomain, b, y, z)] += r.reshape(ny * mb, ny * mb)
            else:
                for y, ny in enumerate(e.codomain.block_dims):
                    t4 = e.block4(y, z)
                    if t4.any():
                        r = np.einsum("ijkl,akbl->aibj", t4, blk)
                        out[pair_index(a, e.codomain, x, y)] += r.reshape(ma * ny, ma * ny)
    if isinstance(e, Channel) and isinstance(joint, State):
        return State(out_alg, out)
    return Element(out_alg, out)


def inclusions(a: Algebra) -> list[np.ndarray]:
    """``S_x``: the ``n x m_x`` isometry placing block ``x`` on the diagonal of ``M_n``."""
    n = a.hilbert_dim
    out = []
    for o, m in zip(a.offsets, a.block_dims):
        s = np.zeros((n, m))
        s[o : o + m, :] = np.eye(m)
        out.append(s)
    return out


def block_embedding(a: Algebra) -> tuple[Channel, Channel, int]:
    """``(phi, psi, n)``: ``phi`` embeds ``a`` block-diagonally in ``M_n``, ``psi`` pinches back.

    ``n = sum m_x``. ``psi o phi`` is exactly the identity, ``phi`` is a
    trace-preserving unital *-homomorphism and ``psi`` is a unital
    conditional expectation.
    """
    n = a.hilbert_dim
    big = matrix_algebra(n)
    s = inclusions(a)
    phi = from_kraus(a, big, {(0, x): [sx] for x, sx in enumerate(s)})
    psi = from_kraus(big, a, {(x, 0): [sx.T] for x, sx in enumerate(s)})
    return phi, psi, n


def random_channel(dom: Algebra, cod: Algebra, env_dim: int, seed=None) -> Channel:
    """Random CPTP map built from a Stinespring isometry through the block embeddings.

    ``E = psi_cod o Tr_env o Ad_V o phi_dom`` with ``V`` a random isometry
    ``C^{n_dom} -> C^{n_cod} (x) C^{env_dim}``.
    """
    n_dom, n_cod = dom.hilbert_dim, cod.hilbert_dim
    if env_dim < 1 or env_dim * n_cod < n_dom:
        raise DimensionTooSmall(
            f"env_dim={env_dim} too small: need env_dim * {n_cod} >= {n_dom}"
        )
    rng = as_rng(seed)
    v = mc.random_isometry(n_cod * env_dim, n_dom, rng).reshape(n_cod, env_dim, n_dom)
    mid = kraus_transfer([v[:, j, :] for j in range(env_dim)])
    phi, _, _ = block_embedding(dom)
    _, psi, _ = block_embedding(cod)
    t = psi.matrix @ mid @ phi.matrix
    return Channel(dom, cod, t)


def random_unitary_channel(a: Algebra, seed=None) -> Channel:
    rng = as_rng(seed)
    return Channel.of(ad_map([mc.random_unitary(m, rng) for m in a.block_dims], a))


def block_permutation(a: Algebra, perm: Sequence[int]) -> tuple[Algebra, Channel]:
    """Isomorphism ``a -> b`` with ``b`` block ``y`` equal to ``a`` block ``perm[y]``."""
    perm = list(perm)
    if sorted(perm) != list(range(a.n_blocks)):
        raise DimensionMismatch(f"{perm} is not a permutation of {a.n_blocks} blocks")
    b = Algebra(tuple(a.block_dims[p] for p in perm))
    blocks = {(y, p): np.eye(a.block_dims[p] ** 2) for y, p in enumerate(perm)}
    return b, Channel(a, b, from_blocks(a, b, blocks), check=False)


def embed_stoch(f: np.ndarray) -> Channel:
    """The channel between commutative algebras induced by a stochastic matrix.

    Each block is 1x1, so the transfer matrix is ``f`` itself.
    """
    f = np.asarray(f, dtype=float)
    n_out, n_in = f.shape
    return Channel(embed_classical(n_in), embed_classical(n_out), f.astype(complex))


def depolarizing(m: int) -> Channel:
    """``rho -> Tr[rho] I/m`` on ``M_m``."""
    a = matrix_algebra(m)
    t = np.outer(np.eye(m).reshape(-1, order="F") / m, np.eye(m).reshape(-1, order="F"))
    return Channel(a, a, t)
