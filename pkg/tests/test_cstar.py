import numpy as np
import pytest

from conftest import ALGEBRAS
from retrodiction import cstar
from retrodiction.cstar import Algebra, Element, State
from retrodiction.errors import InvalidState, NotATensorAlgebra


def test_algebra_shape():
    a = Algebra((2, 3))
    assert (a.n_blocks, a.hilbert_dim, a.dim) == (2, 5, 13)
    assert str(a) == "M2+M3"
    assert cstar.embed_classical(3).is_commutative
    assert not a.is_commutative
    with pytest.raises(ValueError):
        Algebra(())


def test_trace_examples():
    a = Algebra((2, 3))
    assert cstar.trace(cstar.unit(a)) == 5
    e = Element(Algebra((2, 1)), [np.diag([1.0, 2.0]), np.array([[3.0]])])
    assert cstar.trace(e) == 6


def test_uniform_states():
    assert np.allclose(cstar.uniform_state(Algebra((2,))).blocks[0], np.eye(2) / 2)
    u = cstar.uniform_state(Algebra((1, 1)))
    assert np.allclose(cstar.diagonal_of(u), [0.5, 0.5])
    u = cstar.uniform_state(Algebra((2, 1)))
    assert np.allclose(u.blocks[0], np.eye(2) / 3) and np.allclose(u.blocks[1], 1 / 3)


def test_state_validation():
    a = Algebra((2,))
    with pytest.raises(InvalidState, match="trace"):
        State(a, [np.eye(2)])
    with pytest.raises(InvalidState, match="negative"):
        State(a, [np.diag([1.2, -0.2])])
    with pytest.raises(InvalidState, match="Hermitian"):
        State(a, [np.array([[0.5, 1.0], [0.0, 0.5]])])


def test_support_projection_of_states(rng):
    a = Algebra((2, 1))
    s = State(a, [np.diag([0.5, 0.0]), np.array([[0.5]])])
    p = cstar.support_projection_state(s)
    assert np.allclose(p.blocks[0], np.diag([1, 0])) and np.allclose(p.blocks[1], 1)
    s = State(a, [np.diag([0.4, 0.6]), np.array([[0.0]])])
    p = cstar.support_projection_state(s)
    assert np.allclose(p.blocks[1], 0)
    for dims in ALGEBRAS:
        f = cstar.random_state(Algebra(dims), rng)
        assert cstar.support_projection_state(f).close_to(cstar.unit(f.algebra))


def test_faithfulness():
    a = Algebra((2, 1))
    assert cstar.is_faithful(cstar.uniform_state(a))
    assert not cstar.is_faithful(State(a, [np.diag([0.5, 0.0]), np.array([[0.5]])]))
    # a vanishing block weight
    assert not cstar.is_faithful(State(a, [np.eye(2) / 2, np.array([[0.0]])]))


def test_random_states_respect_faithfulness_flag(rng):
    for dims in ALGEBRAS:
        a = Algebra(dims)
        for _ in range(5):
            assert cstar.is_faithful(cstar.random_state(a, rng))
            assert not cstar.is_faithful(cstar.random_state(a, rng, faithful=False))
    with pytest.raises(ValueError):
        cstar.random_state(Algebra((1,)), rng, faithful=False)


def test_tensor_algebra_and_elements():
    ab = cstar.tensor_algebra(cstar.embed_classical(2), cstar.embed_classical(3))
    assert ab.block_dims == (1,) * 6
    assert cstar.tensor_algebra(Algebra((2,)), Algebra((2,))).block_dims == (4,)
    a, b = Algebra((2, 1)), Algebra((1, 3))
    prod = cstar.tensor_element(cstar.uniform_state(a), cstar.uniform_state(b))
    assert isinstance(prod, State)
    assert prod.close_to(cstar.uniform_state(cstar.tensor_algebra(a, b)))
    with pytest.raises(NotATensorAlgebra):
        cstar.require_factors(Algebra((4,)))


def test_partial_trace_of_product(rng):
    a, b = Algebra((2, 1)), Algebra((1, 2))
    s, t = cstar.random_state(a, rng), cstar.random_state(b, rng)
    st = cstar.tensor_element(s, t)
    assert cstar.partial_trace_element(st, 1).close_to(s)
    assert cstar.partial_trace_element(st, 0).close_to(t)


def test_embed_prob_round_trip():
    s = cstar.embed_prob([0.75, 0.25])
    assert [b[0, 0] for b in s.blocks] == [0.75, 0.25]
    assert np.allclose(cstar.diagonal_of(s), [0.75, 0.25])


def test_element_arithmetic(rng):
    a = Algebra((2, 1))
    x, y = cstar.random_element(a, rng), cstar.random_element(a, rng)
    assert np.allclose((x + y - y).vec(), x.vec())
    assert np.allclose((x @ cstar.unit(a)).vec(), x.vec())
    assert np.allclose(Element.from_vec(a, x.vec()).to_matrix(), x.to_matrix())
    assert np.allclose((x * 2).vec(), 2 * x.vec())
