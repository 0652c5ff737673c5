"""Finite-dimensional C*-algebras as direct sums of full matrix blocks.

An :class:`Algebra` is its list of block sizes. Elements hold one square
complex matrix per block. Tensor products of algebras index their blocks by
pairs ``(x, x')`` in row-major order, matching :func:`finstoch.tensor`, and
each pair block is the Kronecker product ``M_{m_x} (x) M_{m_x'}``.

Elements also have a flat vector form: the column-major ``vec`` of every
block, concatenated in block order. Linear maps in :mod:`retrodiction.channel`
act on that form.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import matrixcore as mc
from .errors import DimensionMismatch, InvalidState, NotATensorAlgebra
from .matrixcore import Tolerance, get_tolerance


@dataclass(frozen=True)
class Algebra:
    block_dims: tuple[int, ...]
    # the two factors when built by tensor_algebra; not part of equality
    factors: tuple["Algebra", "Algebra"] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        dims = tuple(int(m) for m in self.block_dims)
        if not dims or any(m < 1 for m in dims):
            raise DimensionMismatch(f"block dims must be a non-empty list of positive ints, got {self.block_dims}")
        object.__setattr__(self, "block_dims", dims)

    @property
    def n_blocks(self) -> int:
        return len(self.block_dims)

    @property
    def hilbert_dim(self) -> int:
        """``sum m_x``: the trace of the unit, and the size of the block-diagonal embedding."""
        return sum(self.block_dims)

    @property
    def dim(self) -> int:
        """Linear dimension ``sum m_x**2``."""
        return sum(m * m for m in self.block_dims)

    @cached_property
    def vec_slices(self) -> tuple[slice, ...]:
        out, start = [], 0
        for m in self.block_dims:
            out.append(slice(start, start + m * m))
            start += m * m
        return tuple(out)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        """Row offset of each block in the block-diagonal embedding."""
        return tuple(int(o) for o in np.cumsum((0,) + self.block_dims[:-1]))

    @property
    def is_commutative(self) -> bool:
        return all(m == 1 for m in self.block_dims)

    def __str__(self) -> str:
        return "+".join(f"M{m}" for m in self.block_dims)


def matrix_algebra(m: int) -> Algebra:
    return Algebra((m,))


def embed_classical(n: int) -> Algebra:
    """The commutative algebra of functions on an ``n``-point set."""
    return Algebra((1,) * n)


def tensor_algebra(a: Algebra, b: Algebra) -> Algebra:
    dims = tuple(ma * mb for ma in a.block_dims for mb in b.block_dims)
    return Algebra(dims, factors=(a, b))


def pair_index(a: Algebra, b: Algebra, x: int, e: int) -> int:
    return x * b.n_blocks + e


def require_factors(ab: Algebra) -> tuple[Algebra, Algebra]:
    if ab.factors is None:
        raise NotATensorAlgebra(f"algebra {ab} was not built as a tensor product")
    return ab.factors


class Element:
    """An element of a direct-sum algebra (one square block per summand)."""

    __slots__ = ("algebra", "blocks")

    def __init__(self, algebra: Algebra, blocks: Iterable[np.ndarray]):
        blocks = tuple(np.array(b, dtype=complex).reshape(np.shape(b)) for b in blocks)
        if len(blocks) != algebra.n_blocks:
            raise DimensionMismatch(f"{algebra} has {algebra.n_blocks} blocks, got {len(blocks)}")
        for k, (b, m) in enumerate(zip(blocks, algebra.block_dims)):
            if b.shape != (m, m):
                raise DimensionMismatch(f"block {k} should be {m}x{m}, got {b.shape}")
        self.algebra = algebra
        self.blocks = blocks

    @classmethod
    def from_vec(cls, algebra: Algebra, v: np.ndarray) -> "Element":
        v = np.asarray(v)
        if v.shape != (algebra.dim,):
            raise DimensionMismatch(f"vector of length {v.shape} does not fit {algebra}")
        return cls(
            algebra,
            (v[s].reshape(m, m, order="F") for s, m in zip(algebra.vec_slices, algebra.block_dims)),
        )

    def vec(self) -> np.ndarray:
        return np.concatenate([b.reshape(-1, order="F") for b in self.blocks])

    def _check(self, other: "Element") -> None:
        if other.algebra != self.algebra:
            raise DimensionMismatch(f"elements live in {self.algebra} and {other.algebra}")

    def __add__(self, other: "Element") -> "Element":
        self._check(other)
        return Element(self.algebra, (a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other: "Element") -> "Element":
        self._check(other)
        return Element(self.algebra, (a - b for a, b in zip(self.blocks, other.blocks)))

    def __mul__(self, c: complex) -> "Element":
        return Element(self.algebra, (c * b for b in self.blocks))

    __rmul__ = __mul__

    def __matmul__(self, other: "Element") -> "Element":
        self._check(other)
        return Element(self.algebra, (a @ b for a, b in zip(self.blocks, other.blocks)))

    def dagger(self) -> "Element":
        return Element(self.algebra, (mc.dagger(b) for b in self.blocks))

    def norm(self) -> float:
        return float(np.sqrt(sum(np.linalg.norm(b) ** 2 for b in self.blocks)))

    def close_to(self, other: "Element", tol: Tolerance | None = None) -> bool:
        self._check(other)
        return mc.close(self.vec(), other.vec(), tol)

    def to_matrix(self) -> np.ndarray:
        """Block-diagonal matrix of size ``hilbert_dim``."""
        n = self.algebra.hilbert_dim
        out = np.zeros((n, n), dtype=complex)
        for o, b in zip(self.algebra.offsets, self.blocks):
            out[o : o + b.shape[0], o : o + b.shape[0]] = b
        return out

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.algebra}, {[b.tolist() for b in self.blocks]})"


class State(Element):
    """A positive, unit-trace element. Validated once, at construction."""

    __slots__ = ()

    def __init__(self, algebra: Algebra, blocks: Iterable[np.ndarray], tol: Tolerance | None = None):
        super().__init__(algebra, blocks)
        tol = get_tolerance(tol)
        fixed = []
        for k, b in enumerate(self.blocks):
            if np.linalg.norm(b - mc.dagger(b)) > tol.abs_eps:
                raise InvalidState(f"block {k} is not Hermitian")
            fixed.append((b + mc.dagger(b)) / 2)
        lam_max = max(float(np.linalg.eigvalsh(b)[-1]) for b in fixed)
        for k, b in enumerate(fixed):
            lo = float(np.linalg.eigvalsh(b)[0])
            if lo < -max(tol.eig_cut_rel * lam_max, mc.ZERO_FLOOR):
                raise InvalidState(f"block {k} has negative eigenvalue {lo:.3e}")
        tr = sum(np.trace(b).real for b in fixed)
        if abs(tr - 1.0) > tol.abs_eps:
            raise InvalidState(f"trace is {tr:.12g}, expected 1")
        self.blocks = tuple(fixed)

    @classmethod
    def of(cls, element: Element, tol: Tolerance | None = None) -> "State":
        return cls(element.algebra, element.blocks, tol)

    @property
    def lam_max(self) -> float:
        return max(float(np.linalg.eigvalsh(b)[-1]) for b in self.blocks)


def unit(a: Algebra) -> Element:
    return Element(a, (np.eye(m) for m in a.block_dims))


def zero(a: Algebra) -> Element:
    return Element(a, (np.zeros((m, m)) for m in a.block_dims))


def trace(a: Element) -> complex:
    return complex(sum(np.trace(b) for b in a.blocks))


def uniform_state(a: Algebra) -> State:
    n = a.hilbert_dim
    return State(a, (np.eye(m) / n for m in a.block_dims))


def _blockwise(fn, s: State, tol: Tolerance | None) -> Element:
    scale = s.lam_max
    return Element(s.algebra, (fn(b, tol, scale) for b in s.blocks))


def support_projection_state(s: State, tol: Tolerance | None = None) -> Element:
    """Support projection, with the rank cutoff relative to the whole state."""
    return _blockwise(mc.support_projection, s, tol)


def sqrt_state(s: State, tol: Tolerance | None = None) -> Element:
    return _blockwise(mc.psd_sqrt, s, tol)


def pinv_state(s: State, tol: Tolerance | None = None) -> Element:
    return _blockwise(mc.pinv_psd, s, tol)


def pinv_sqrt_state(s: State, tol: Tolerance | None = None) -> Element:
    """``pinv(s) ** (1/2)``."""
    return _blockwise(mc.pinv_sqrt_psd, s, tol)


def is_faithful(s: State, tol: Tolerance | None = None) -> bool:
    p = support_projection_state(s, tol)
    return p.close_to(unit(s.algebra), tol)


def tensor_element(a: Element, b: Element) -> Element:
    alg = tensor_algebra(a.algebra, b.algebra)
    blocks = [np.kron(x, y) for x in a.blocks for y in b.blocks]
    if isinstance(a, State) and isinstance(b, State):
        return State(alg, blocks)
    return Element(alg, blocks)


def embed_prob(p: Sequence[float]) -> State:
    p = np.asarray(p, dtype=float)
    return State(embed_classical(p.size), ([[px]] for px in p))


def embed_stoch(f):
    """Channel between commutative algebras induced by a stochastic matrix (lives in ``channel``)."""
    from .channel import embed_stoch as _embed

    return _embed(f)


def diagonal_of(s: Element) -> np.ndarray:
    """Inverse of :func:`embed_prob` for commutative algebras."""
    if not s.algebra.is_commutative:
        raise DimensionMismatch(f"{s.algebra} is not commutative")
    return np.array([b[0, 0].real for b in s.blocks])


def random_density(m: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    rho = z @ mc.dagger(z)
    return rho / np.trace(rho).real


def random_state(
    a: Algebra, rng: np.random.Generator, faithful: bool = True
) -> State:
    """Random state; ``faithful=False`` zeroes a random proper subset of its eigenvalues.

    The subset is drawn over all ``sum m_x`` eigenvalues of the direct sum,
    so whole blocks can vanish. At least one eigenvalue is zeroed and at
    least one survives; an algebra with a single one-dimensional block has
    no non-faithful states and raises ``ValueError``.
    """
    n = a.hilbert_dim
    if not faithful and n < 2:
        raise ValueError(f"{a} has no non-faithful states")
    weights = rng.dirichlet(np.ones(a.n_blocks))
    spectra, bases = [], []
    for m, w in zip(a.block_dims, weights):
        lam, vec = np.linalg.eigh(random_density(m, rng))
        spectra.append(w * np.clip(lam, 0.0, None))
        bases.append(vec)
    if not faithful:
        flat = np.concatenate(spectra)
        n_zero = int(rng.integers(1, n))
        kill = rng.choice(n, size=n_zero, replace=False)
        flat[kill] = 0.0
        flat /= flat.sum()
        spectra = np.split(flat, np.cumsum(a.block_dims)[:-1])
    else:
        total = sum(s.sum() for s in spectra)
        spectra = [s / total for s in spectra]
    blocks = [(v * s) @ mc.dagger(v) for v, s in zip(bases, spectra)]
    return State(a, blocks)


def random_element(a: Algebra, rng: np.random.Generator) -> Element:
    return Element(
        a,
        (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m)) for m in a.block_dims),
    )


def partial_trace_element(e: Element, trace_out: int = 1) -> Element:
    """Partial trace of an element of a tensor algebra over one factor."""
    a, b = require_factors(e.algebra)
    if trace_out not in (0, 1):
        raise ValueError("trace_out must be 0 or 1")
    keep = a if trace_out == 1 else b
    out = [np.zeros((m, m), dtype=complex) for m in keep.block_dims]
    for x, ma in enumerate(a.block_dims):
        for y, mb in enumerate(b.block_dims):
            blk = e.blocks[pair_index(a, b, x, y)].reshape(ma, mb, ma, mb)
            if trace_out == 1:
                out[x] += np.einsum("iaja->ij", blk)
            else:
                out[y] += np.einsum("aiaj->ij", blk)
    cls = State if isinstance(e, State) else Element
    return cls(keep, out)
