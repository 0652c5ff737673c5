import numpy as np
import pytest

import oracles
from conftest import ALGEBRAS
from retrodiction import channel as ch
from retrodiction import cstar, finstoch
from retrodiction import matrixcore as mc
from retrodiction.cstar import Algebra, State
from retrodiction.errors import DimensionMismatch, DimensionTooSmall, NotCPTP

M2 = Algebra((2,))
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def test_transfer_matches_kraus_action(rng):
    ops = oracles.random_kraus(3, 2, 2, rng)
    e = ch.from_kraus(Algebra((3,)), M2, {(0, 0): ops})
    rho = oracles.random_density(3, rng)
    out = ch.apply(e, State(Algebra((3,)), [rho]))
    assert np.allclose(out.blocks[0], oracles.kraus_apply(ops, rho))


def test_choi_matches_oracle(rng):
    ops = oracles.random_kraus(2, 3, 2, rng)
    e = ch.from_kraus(M2, Algebra((3,)), {(0, 0): ops})
    ref = oracles.choi(lambda m: oracles.kraus_apply(ops, m), 2)
    assert np.allclose(ch.choi_block(e, 0, 0), ref)


def test_depolarizing():
    d = ch.depolarizing(2)
    rho = State(M2, [np.array([[0.7, 0.2j], [-0.2j, 0.3]])])
    assert np.allclose(ch.apply(d, rho).blocks[0], np.eye(2) / 2)
    adj = ch.hs_adjoint(d)
    for i, j in np.ndindex(2, 2):
        b = oracles.matrix_unit(2, i, j)
        out = adj(cstar.Element(M2, [b]))
        assert np.allclose(out.blocks[0], np.trace(b) * np.eye(2) / 2)


def test_identity_and_composition_laws(rng):
    a, b = Algebra((2, 1)), Algebra((3,))
    e = ch.random_channel(a, b, 2, rng)
    assert np.allclose(ch.compose(e, ch.identity(a)).matrix, e.matrix)
    assert np.allclose(ch.compose(ch.identity(b), e).matrix, e.matrix)
    u, v = mc.random_unitary(2, rng), mc.random_unitary(2, rng)
    lhs = ch.compose(ch.ad_map([u], M2), ch.ad_map([v], M2))
    assert np.allclose(lhs.matrix, ch.ad_map([u @ v], M2).matrix)
    with pytest.raises(DimensionMismatch):
        ch.compose(e, e)


def test_interchange_law(rng):
    a, b, c = Algebra((2,)), Algebra((1, 1)), Algebra((2, 1))
    e, f = ch.random_channel(a, b, 2, rng), ch.random_channel(b, c, 2, rng)
    e2, f2 = ch.random_channel(c, a, 2, rng), ch.random_channel(a, a, 2, rng)
    lhs = ch.compose(ch.tensor(f, f2), ch.tensor(e, e2))
    rhs = ch.tensor(ch.compose(f, e), ch.compose(f2, e2))
    assert mc.rel_residual(lhs.matrix, rhs.matrix) < 1e-9


def test_tensor_matches_kron_on_matrix_algebras(rng):
    k1 = oracles.random_kraus(2, 2, 2, rng)
    k2 = oracles.random_kraus(2, 3, 1, rng)
    e = ch.from_kraus(M2, M2, {(0, 0): k1})
    f = ch.from_kraus(M2, Algebra((3,)), {(0, 0): k2})
    joint = [np.kron(p, q) for p in k1 for q in k2]
    ref = ch.from_kraus(Algebra((4,)), Algebra((6,)), {(0, 0): joint})
    assert np.allclose(ch.tensor(e, f).matrix, ref.matrix)


def test_adjoints():
    u = mc.random_unitary(2, np.random.default_rng(1))
    assert np.allclose(ch.hs_adjoint(ch.ad_map([u], M2)).matrix, ch.ad_map([u.conj().T], M2).matrix)
    assert np.allclose(ch.hs_adjoint(ch.identity(M2)).matrix, np.eye(4))


def test_hs_adjoint_pairing(rng):
    a, b = Algebra((2, 1)), Algebra((1, 2))
    e = ch.random_channel(a, b, 2, rng)
    x, y = cstar.random_element(a, rng), cstar.random_element(b, rng)
    lhs = sum(np.trace(p.conj().T @ q) for p, q in zip(y.blocks, e(x).blocks))
    rhs = sum(np.trace(p.conj().T @ q) for p, q in zip(ch.hs_adjoint(e)(y).blocks, x.blocks))
    assert np.isclose(lhs, rhs)


def test_ad_map_variants(rng):
    v = mc.random_isometry(3, 2, rng)
    iso = ch.ad_map([v], M2, Algebra((3,)))
    assert isinstance(iso, ch.Channel)
    for i, j in np.ndindex(2, 2):
        b = cstar.Element(M2, [oracles.matrix_unit(2, i, j)])
        assert np.isclose(cstar.trace(iso(b)), cstar.trace(b))
    p = ch.ad_map([np.diag([1.0, 0.0])], M2)
    cp, _ = ch.cptp_defect(p)
    assert cp == 0 and not isinstance(p, ch.Channel)
    assert np.allclose(ch.ad_map([np.eye(2)], M2).matrix, np.eye(4))


def test_partial_trace_channel(rng):
    a, b = Algebra((2, 1)), Algebra((2,))
    ab = cstar.tensor_algebra(a, b)
    s, t = cstar.random_state(a, rng), cstar.random_state(b, rng)
    tr = ch.partial_trace(ab, 1)
    assert ch.apply(tr, cstar.tensor_element(s, t)).close_to(s)
    # discarding is natural: Tr_2 o (E (x) F) = E o Tr_2 for TP F
    e = ch.random_channel(a, a, 2, rng)
    f = ch.random_channel(b, Algebra((1, 1)), 2, rng)
    lhs = ch.compose(ch.partial_trace(cstar.tensor_algebra(a, Algebra((1, 1))), 1), ch.tensor(e, f))
    rhs = ch.compose(e, tr)
    assert mc.rel_residual(lhs.matrix, rhs.matrix) < 1e-12


def test_partial_trace_matches_oracle(rng):
    rho = oracles.random_density(6, rng)
    ab = cstar.tensor_algebra(Algebra((2,)), Algebra((3,)))
    out = cstar.partial_trace_element(State(ab, [rho]), 1)
    assert np.allclose(out.blocks[0], oracles.partial_trace_second(rho, 2, 3))


def test_apply_on_factor_matches_tensor(rng):
    a, b = Algebra((2, 1)), Algebra((1, 2))
    e = ch.random_channel(a, Algebra((3,)), 1, rng)
    joint = cstar.random_state(cstar.tensor_algebra(a, b), rng)
    ref = ch.apply(ch.tensor(e, ch.identity(b)), joint)
    assert ch.apply_on_factor(e, joint, 0).close_to(ref)
    g = ch.random_channel(b, M2, 2, rng)
    ref = ch.apply(ch.tensor(ch.identity(a), g), joint)
    assert ch.apply_on_factor(g, joint, 1).close_to(ref)


@pytest.mark.parametrize("dims", [(1, 1), (2,), (2, 1)])
def test_block_embedding(dims):
    a = Algebra(dims)
    phi, psi, n = ch.block_embedding(a)
    assert n == sum(dims)
    assert np.allclose(ch.compose(psi, phi).matrix, np.eye(a.dim))
    if dims == (2,):
        assert np.allclose(phi.matrix, np.eye(4))
    if dims == (1, 1):
        # diagonal embedding; pinching keeps only the diagonal
        out = ch.apply(psi, cstar.Element(phi.codomain, [np.array([[0.3, 0.4], [0.4, 0.7]])]))
        assert np.allclose(cstar.diagonal_of(out), [0.3, 0.7])


def test_random_channels(rng):
    for dims_in in ALGEBRAS:
        for dims_out in ALGEBRAS:
            e = ch.random_channel(Algebra(dims_in), Algebra(dims_out), 2, rng)
            assert ch.is_cptp(e)
    e1 = ch.random_channel(Algebra((2, 1)), M2, 2, seed=5)
    e2 = ch.random_channel(Algebra((2, 1)), M2, 2, seed=5)
    assert np.array_equal(e1.matrix, e2.matrix)
    with pytest.raises(DimensionTooSmall):
        ch.random_channel(Algebra((3,)), M2, 1, rng)


def test_square_unit_env_gives_unitary_conjugation(rng):
    e = ch.random_channel(M2, M2, 1, rng)
    # unitary channels preserve purity
    psi = State(M2, [np.diag([1.0, 0.0])])
    out = ch.apply(e, psi).blocks[0]
    assert np.isclose(np.trace(out @ out).real, 1.0)


def test_channel_rejects_non_cptp():
    with pytest.raises(NotCPTP):
        ch.Channel(M2, M2, 2 * np.eye(4))
    transpose = ch.from_function(M2, M2, lambda e: cstar.Element(M2, [e.blocks[0].T]))
    with pytest.raises(NotCPTP):
        ch.Channel(M2, M2, transpose.matrix)


def test_transpose_is_not_cp():
    t = ch.from_function(M2, M2, lambda e: cstar.Element(M2, [e.blocks[0].T]))
    cp, tp = ch.cptp_defect(t)
    assert cp > 0.1 and tp < 1e-12


def test_embed_stoch(rng):
    f = finstoch.random_stochastic(3, 3, rng)
    g = finstoch.random_stochastic(3, 3, rng)
    p = finstoch.random_prob(3, rng)
    assert np.allclose(ch.embed_stoch(np.eye(3)).matrix, ch.identity(cstar.embed_classical(3)).matrix)
    lhs = ch.embed_stoch(g @ f).matrix
    rhs = ch.compose(ch.embed_stoch(g), ch.embed_stoch(f)).matrix
    assert np.abs(lhs - rhs).max() < 1e-12
    pushed = ch.apply(ch.embed_stoch(f), cstar.embed_prob(p))
    assert np.allclose(cstar.diagonal_of(pushed), f @ p)


def test_block_permutation_is_invertible():
    a = Algebra((2, 1, 3))
    b, e = ch.block_permutation(a, [2, 0, 1])
    assert b.block_dims == (3, 2, 1)
    _, back = ch.block_permutation(b, [1, 2, 0])
    assert np.allclose(ch.compose(back, e).matrix, np.eye(a.dim))
