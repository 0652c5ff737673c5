"""Randomized audit of the retrodiction-functor laws.

Each trial draws fresh instances from its own seed and measures six
residuals: recovering, normalizing, compositional, tensorial, inverting,
involutive. Comparisons between recovery maps are made after compressing
to the support of the state they act on, and every residual is a Frobenius
distance normalized by ``max(1, |lhs|, |rhs|)``.

The retrodiction under test is a parameter, which is how the mutation tests
feed in corrupted Petz maps.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from . import channel as ch
from . import finstoch
from . import matrixcore as mc
from . import serialize
from .cstar import Algebra, State, random_state, tensor_element
from .retrodict import (
    Retrodiction,
    StatePreservingMorphism,
    class_residual,
    classical_consistency_residuals,
    morphism_residual,
    petz_extended,
)

AXIOMS = ("recovering", "normalizing", "compositional", "tensorial", "inverting", "involutive")
MAX_FAILURES = 5
DEFAULT_ALGEBRAS = ((2,), (3,), (1, 1), (2, 1))


@dataclass(frozen=True)
class AxiomConfig:
    kind: str = "quantum"
    algebras: tuple[tuple[int, ...], ...] = DEFAULT_ALGEBRAS
    nonfaithful_fraction: float = 0.5
    max_in: int = 5
    max_out: int = 7
    threshold: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("quantum", "classical"):
            raise ValueError(f"unknown kind {self.kind!r}")

    @property
    def limit(self) -> float:
        if self.threshold is not None:
            return self.threshold
        return 1e-10 if self.kind == "classical" else 1e-9


@dataclass
class AxiomResult:
    trials: int = 0
    max_residual: float = 0.0
    failures: list[dict] = field(default_factory=list)


@dataclass
class AxiomReport:
    kind: str
    seed: int
    trials: int
    threshold: float
    results: dict[str, AxiomResult]

    @property
    def passed(self) -> bool:
        return all(r.max_residual <= self.threshold for r in self.results.values())

    def failed_axioms(self) -> list[str]:
        return [k for k, r in self.results.items() if r.max_residual > self.threshold]

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "trials": self.trials,
            "threshold": self.threshold,
            "passed": self.passed,
            "axioms": {k: asdict(v) for k, v in self.results.items()},
        }

    def lines(self) -> list[str]:
        return [
            f"{'PASS' if r.max_residual <= self.threshold else 'FAIL'} {name:<14} "
            f"trials={r.trials} max_residual={r.max_residual:.3e}"
            for name, r in self.results.items()
        ]


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def is_nonfaithful_trial(index: int, fraction: float) -> bool:
    return math.floor((index + 1) * fraction) > math.floor(index * fraction)


# ---------------------------------------------------------------------------
# quantum instances
# ---------------------------------------------------------------------------


def _pick(config: AxiomConfig, rng: np.random.Generator) -> Algebra:
    return Algebra(config.algebras[int(rng.integers(len(config.algebras)))])


def _random_morphism(
    a: Algebra, b: Algebra, alpha: State, rng: np.random.Generator, low_rank: bool
) -> StatePreservingMorphism:
    n_dom, n_cod = a.hilbert_dim, b.hilbert_dim
    need = math.ceil(n_dom / n_cod)
    env = need if low_rank else need + int(rng.integers(0, 3))
    return StatePreservingMorphism(alpha, ch.random_channel(a, b, env, rng))


def random_isomorphism(a: Algebra, rng: np.random.Generator) -> tuple[ch.Channel, ch.Channel]:
    """A block permutation composed with per-block unitaries, and its inverse built directly."""
    perm = rng.permutation(a.n_blocks)
    units = [mc.random_unitary(m, rng) for m in a.block_dims]
    conj = ch.Channel.of(ch.ad_map(units, a))
    b, shuffle = ch.block_permutation(a, perm)
    iso = ch.compose(shuffle, conj)
    inv_perm = np.argsort(perm)
    _, unshuffle = ch.block_permutation(b, inv_perm)
    unconj = ch.Channel.of(ch.ad_map([mc.dagger(u) for u in units], a))
    return ch.Channel.of(iso), ch.Channel.of(ch.compose(unconj, unshuffle))


def _instance(**parts: Any) -> dict:
    out = {}
    for k, v in parts.items():
        if isinstance(v, ch.LinearBlockMap):
            out[k] = serialize.channel_to_json(v)
        elif isinstance(v, State):
            out[k] = serialize.element_to_json(v)
        elif isinstance(v, np.ndarray):
            out[k] = v.tolist()
        else:
            out[k] = v
    return out


def quantum_trial(
    config: AxiomConfig, seed: int, index: int, retrodiction: Retrodiction = petz_extended
) -> dict[str, tuple[float, dict]]:
    rng = trial_rng(seed, index)
    nonfaithful = is_nonfaithful_trial(index, config.nonfaithful_fraction)
    a, b, c = _pick(config, rng), _pick(config, rng), _pick(config, rng)
    alpha = random_state(a, rng, faithful=not nonfaithful)
    m_e = _random_morphism(a, b, alpha, rng, nonfaithful)
    beta = m_e.prediction
    m_f = _random_morphism(b, c, beta, rng, nonfaithful)
    gamma = m_f.prediction
    r_e = retrodiction(m_e).channel
    out: dict[str, tuple[float, dict]] = {}

    out["recovering"] = (
        morphism_residual(r_e, beta, alpha),
        _instance(prior=alpha, channel=m_e.channel),
    )

    r_id = retrodiction(StatePreservingMorphism(alpha, ch.identity(a))).channel
    out["normalizing"] = (class_residual(r_id, ch.identity(a), alpha), _instance(prior=alpha))

    r_fe = retrodiction(m_e.compose(m_f)).channel
    r_f = retrodiction(m_f).channel
    out["compositional"] = (
        class_residual(r_fe, ch.compose(r_e, r_f), gamma),
        _instance(prior=alpha, first=m_e.channel, second=m_f.channel),
    )

    a2, b2 = _pick(config, rng), _pick(config, rng)
    alpha2 = random_state(a2, rng, faithful=not nonfaithful)
    m_e2 = _random_morphism(a2, b2, alpha2, rng, nonfaithful)
    r_e2 = retrodiction(m_e2).channel
    r_tensor = retrodiction(m_e.tensor(m_e2)).channel
    out["tensorial"] = (
        class_residual(r_tensor, ch.tensor(r_e, r_e2), State.of(tensor_element(beta, m_e2.prediction))),
        _instance(prior=alpha, channel=m_e.channel, prior2=alpha2, channel2=m_e2.channel),
    )

    iso, inverse = random_isomorphism(a, rng)
    m_iso = StatePreservingMorphism(alpha, iso)
    r_iso = retrodiction(m_iso).channel
    out["inverting"] = (
        class_residual(r_iso, inverse, m_iso.prediction),
        _instance(prior=alpha, channel=iso),
    )

    r_r = retrodiction(StatePreservingMorphism(beta, r_e, alpha)).channel
    out["involutive"] = (class_residual(r_r, m_e.channel, alpha), _instance(prior=alpha, channel=m_e.channel))
    return out


# ---------------------------------------------------------------------------
# classical instances
# ---------------------------------------------------------------------------


def _columns_residual(f: np.ndarray, g: np.ndarray, p: np.ndarray) -> float:
    keep = finstoch.support(p)
    return mc.rel_residual(f[:, keep], g[:, keep])


def _classical_prob(n: int, rng: np.random.Generator, sparse: bool) -> np.ndarray:
    zeros = rng.choice(n, size=int(rng.integers(0, n)), replace=False) if sparse else ()
    return finstoch.random_prob(n, rng, zeros)


def _classical_map(n_out: int, n_in: int, rng: np.random.Generator, sparse: bool) -> np.ndarray:
    """Random stochastic map; ``sparse`` forbids a random proper subset of outputs."""
    rows = rng.choice(n_out, size=int(rng.integers(0, n_out)), replace=False) if sparse else ()
    return finstoch.random_stochastic(n_out, n_in, rng, rows)


def classical_trial(config: AxiomConfig, seed: int, index: int) -> dict[str, tuple[float, dict]]:
    rng = trial_rng(seed, index)
    nx = int(rng.integers(1, config.max_in + 1))
    ny = int(rng.integers(1, config.max_out + 1))
    nz = int(rng.integers(1, config.max_out + 1))
    sparse = is_nonfaithful_trial(index, config.nonfaithful_fraction)
    p = _classical_prob(nx, rng, sparse)
    f = _classical_map(ny, nx, rng, sparse)
    g = _classical_map(nz, ny, rng, sparse)
    q = f @ p
    r = g @ q
    fb = finstoch.bayes_inverse(f, p)
    out: dict[str, tuple[float, dict]] = {}
    inst = _instance(prior=p, stoch=f)

    col_defect = float(np.max(np.abs(fb.sum(axis=0) - 1.0)))
    neg = float(max(0.0, -fb.min()))
    out["recovering"] = (max(mc.rel_residual(fb @ q, p), col_defect, neg), inst)
    out["normalizing"] = (_columns_residual(finstoch.bayes_inverse(np.eye(nx), p), np.eye(nx), p), inst)
    out["compositional"] = (
        _columns_residual(finstoch.bayes_inverse(g @ f, p), fb @ finstoch.bayes_inverse(g, q), r),
        _instance(prior=p, first=f, second=g),
    )
    nx2 = int(rng.integers(1, config.max_in + 1))
    ny2 = int(rng.integers(1, config.max_out + 1))
    p2 = _classical_prob(nx2, rng, sparse)
    f2 = _classical_map(ny2, nx2, rng, sparse)
    out["tensorial"] = (
        _columns_residual(
            finstoch.bayes_inverse(np.kron(f, f2), np.kron(p, p2)),
            np.kron(fb, finstoch.bayes_inverse(f2, p2)),
            np.kron(q, f2 @ p2),
        ),
        _instance(prior=p, stoch=f, prior2=p2, stoch2=f2),
    )
    perm = finstoch.random_permutation(nx, rng)
    out["inverting"] = (
        _columns_residual(finstoch.bayes_inverse(perm, p), perm.T, perm @ p),
        _instance(prior=p, stoch=perm),
    )
    out["involutive"] = (_columns_residual(finstoch.bayes_inverse(fb, q), f, p), inst)
    return out


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def _run_one(args: tuple) -> dict[str, tuple[float, dict]]:
    config, seed, index, retrodiction, tol = args
    with mc.use_tolerance(tol):
        if config.kind == "classical":
            return classical_trial(config, seed, index)
        return quantum_trial(config, seed, index, retrodiction)


def check_axioms(
    config: AxiomConfig | None = None,
    trials: int = 200,
    seed: int = 0,
    retrodiction: Retrodiction = petz_extended,
    workers: int = 1,
) -> AxiomReport:
    """Run ``trials`` independent seeded trials and aggregate per-axiom residuals.

    Failures are recorded (up to a few per axiom, with the offending instance
    serialized) rather than raised. With ``workers > 1`` trials run in a
    process pool; the report does not depend on the worker count.
    """
    config = config or AxiomConfig()
    tol = mc.get_tolerance()
    jobs = [(config, seed, i, retrodiction, tol) for i in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_one, jobs, chunksize=max(1, trials // (4 * workers))))
    else:
        outcomes = [_run_one(j) for j in jobs]

    results = {name: AxiomResult() for name in AXIOMS}
    for i, outcome in enumerate(outcomes):
        for name in AXIOMS:
            res, inst = outcome[name]
            agg = results[name]
            agg.trials += 1
            agg.max_residual = max(agg.max_residual, float(res))
            if res > config.limit and len(agg.failures) < MAX_FAILURES:
                agg.failures.append({"trial": i, "residual": float(res), "instance": inst})
    return AxiomReport(config.kind, seed, trials, config.limit, results)


@dataclass
class ConsistencyReport:
    trials: int
    max_map_residual: float
    max_jeffrey_residual: float
    zero_prediction_instances: int
    threshold: float = 1e-10

    @property
    def passed(self) -> bool:
        return max(self.max_map_residual, self.max_jeffrey_residual) <= self.threshold


def random_classical_instance(
    rng: np.random.Generator, max_in: int = 5, max_out: int = 7
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(f, p, e)`` with frequent zero predictions and evidence ``e << f p``."""
    nx = int(rng.integers(2, max_in + 1))
    ny = int(rng.integers(2, max_out + 1))
    zero_rows = rng.choice(ny, size=int(rng.integers(0, ny)), replace=False)
    f = finstoch.random_stochastic(ny, nx, rng, zero_rows)
    p_zeros = rng.choice(nx, size=int(rng.integers(0, nx)), replace=False)
    p = finstoch.random_prob(nx, rng, p_zeros)
    q = f @ p
    live = np.flatnonzero(finstoch.support(q))
    e = np.zeros(ny)
    keep = rng.choice(live, size=int(rng.integers(1, live.size + 1)), replace=False)
    e[keep] = rng.dirichlet(np.ones(keep.size))
    return f, p, e


def check_classical_consistency(
    trials: int = 300, seed: int = 0, retrodiction: Retrodiction = petz_extended
) -> ConsistencyReport:
    """Compare embedded Bayesian inversion and Jeffrey updates with the retrodiction."""
    worst_map = worst_jeffrey = 0.0
    zero_pred = 0
    for i in range(trials):
        rng = trial_rng(seed, i)
        f, p, e = random_classical_instance(rng)
        if not finstoch.support(f @ p).all():
            zero_pred += 1
        res_map, res_j = classical_consistency_residuals(f, p, e, retrodiction)
        worst_map = max(worst_map, res_map)
        worst_jeffrey = max(worst_jeffrey, res_j)
    return ConsistencyReport(trials, worst_map, worst_jeffrey, zero_pred)

