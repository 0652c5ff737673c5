"""Petz recovery maps, Jeffrey updating, and the retrodiction-functor laws.

The extended Petz map of a state-preserving channel ``E: (A, alpha) -> (B, beta)`` is

    R(B) = alpha^1/2 E*(pinv(beta)^1/2 B pinv(beta)^1/2) alpha^1/2
           + Tr[(1 - P_beta) B] P_alpha / Tr[P_alpha]

which is CPTP for every pair of states and reduces to the usual Petz map
when both are faithful. Recovery maps are only determined up to dilational
equality at ``beta``, so comparisons go through the support-compressed
transfer matrix ``R o Ad_{P_beta}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import channel as ch
from . import finstoch
from . import matrixcore as mc
from .cstar import (
    State,
    diagonal_of,
    embed_prob,
    is_faithful,
    pinv_sqrt_state,
    sqrt_state,
    support_projection_state,
    trace,
    unit,
)
from .dilation import absolutely_continuous, dilationally_equal
from .errors import (
    DimensionMismatch,
    EvidenceNotAbsolutelyContinuous,
    InvalidState,
    PredictionNotFaithful,
    PriorNotFaithful,
)
from .matrixcore import Tolerance


@dataclass(frozen=True, eq=False)
class StatePreservingMorphism:
    """A channel together with its prior; the prediction is ``channel(prior)``."""

    prior: State
    channel: ch.LinearBlockMap
    prediction: State | None = None

    def __post_init__(self) -> None:
        if self.channel.domain != self.prior.algebra:
            raise DimensionMismatch(f"channel acts on {self.channel.domain}, prior lives in {self.prior.algebra}")
        pushed = State.of(ch.apply(self.channel, self.prior))
        if self.prediction is None:
            object.__setattr__(self, "prediction", pushed)
        elif not pushed.close_to(self.prediction):
            raise InvalidState("channel does not send the prior to the stated prediction")

    def compose(self, other: "StatePreservingMorphism") -> "StatePreservingMorphism":
        """``other o self`` (apply ``self`` first)."""
        return StatePreservingMorphism(self.prior, ch.compose(other.channel, self.channel), other.prediction)

    def tensor(self, other: "StatePreservingMorphism") -> "StatePreservingMorphism":
        from .cstar import tensor_element

        return StatePreservingMorphism(
            State.of(tensor_element(self.prior, other.prior)),
            ch.tensor(self.channel, other.channel),
        )


@dataclass(frozen=True, eq=False)
class MorphismClass:
    """Dilational-equivalence class of a state-preserving morphism, held by a representative."""

    representative: StatePreservingMorphism

    @property
    def channel(self) -> ch.LinearBlockMap:
        return self.representative.channel

    def canonical(self) -> ch.LinearBlockMap:
        """``E o Ad_{P_prior}``, a complete invariant of the class."""
        rep = self.representative
        return ch.compress(rep.channel, support_projection_state(rep.prior))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MorphismClass):
            return NotImplemented
        a, b = self.representative, other.representative
        if a.prior.algebra != b.prior.algebra or a.channel.codomain != b.channel.codomain:
            return False
        if not (a.prior.close_to(b.prior) and a.prediction.close_to(b.prediction)):
            return False
        return dilationally_equal(a.channel, b.channel, a.prior)

    __hash__ = None  # type: ignore[assignment]


def _petz_core(m: StatePreservingMorphism, tol: Tolerance | None) -> ch.LinearBlockMap:
    a, b = m.prior.algebra, m.prediction.algebra
    return ch.compose_all(
        ch.ad_map(sqrt_state(m.prior, tol), a),
        ch.hs_adjoint(m.channel),
        ch.ad_map(pinv_sqrt_state(m.prediction, tol), b),
    )


def petz_faithful(m: StatePreservingMorphism, tol: Tolerance | None = None) -> StatePreservingMorphism:
    """``Ad_{alpha^1/2} o E* o Ad_{beta^-1/2}``; both states must be faithful."""
    if not is_faithful(m.prior, tol):
        raise PriorNotFaithful("prior is not faithful")
    if not is_faithful(m.prediction, tol):
        raise PredictionNotFaithful("prediction is not faithful")
    r = ch.Channel.of(_petz_core(m, tol), tol=tol)
    return StatePreservingMorphism(m.prediction, r, m.prior)


def correction_map(m: StatePreservingMorphism, tol: Tolerance | None = None) -> ch.LinearBlockMap:
    """``B -> Tr[(1 - P_beta) B] P_alpha / Tr[P_alpha]``; exactly zero when ``beta`` is faithful."""
    shape = (m.prior.algebra.dim, m.prediction.algebra.dim)
    if is_faithful(m.prediction, tol):
        return ch.LinearBlockMap(m.prediction.algebra, m.prior.algebra, np.zeros(shape, dtype=complex))
    p_alpha = support_projection_state(m.prior, tol)
    perp_beta = unit(m.prediction.algebra) - support_projection_state(m.prediction, tol)
    out = p_alpha.vec() / trace(p_alpha).real
    # Tr[P B] = vec(P^T) . vec(B)
    functional = np.concatenate([blk.T.reshape(-1, order="F") for blk in perp_beta.blocks])
    return ch.LinearBlockMap(m.prediction.algebra, m.prior.algebra, np.outer(out, functional))


def petz_extended(m: StatePreservingMorphism, tol: Tolerance | None = None) -> MorphismClass:
    """Extended Petz recovery map; defined for every prior, faithful or not."""
    r = ch.add(_petz_core(m, tol), correction_map(m, tol))
    return MorphismClass(StatePreservingMorphism(m.prediction, ch.Channel.of(r, tol=tol), m.prior))


Retrodiction = Callable[[StatePreservingMorphism], MorphismClass]


def jeffrey_update_quantum(
    m: StatePreservingMorphism,
    evidence: State,
    retrodiction: Retrodiction = petz_extended,
    tol: Tolerance | None = None,
) -> State:
    """Pull soft evidence on the codomain back to an updated prior."""
    if evidence.algebra != m.prediction.algebra:
        raise DimensionMismatch(f"evidence lives in {evidence.algebra}, prediction in {m.prediction.algebra}")
    if not absolutely_continuous(evidence, m.prediction, tol):
        raise EvidenceNotAbsolutelyContinuous("evidence is not supported inside the prediction")
    r = retrodiction(m).channel
    return State.of(ch.apply(r, evidence))


# ---------------------------------------------------------------------------
# residuals shared by the axiom harness and the acceptance tests
# ---------------------------------------------------------------------------


def class_residual(e: ch.LinearBlockMap, f: ch.LinearBlockMap, state: State) -> float:
    """Distance between two maps after compression to the support of ``state``."""
    p = support_projection_state(state)
    return mc.rel_residual(ch.compress(e, p).matrix, ch.compress(f, p).matrix)


def morphism_residual(r: ch.LinearBlockMap, source: State, target: State) -> float:
    """How far ``r`` is from being a state-preserving CPTP map ``source -> target``."""
    cp, tp = ch.cptp_defect(r)
    pushed = ch.apply(r, source)
    return max(cp, tp, mc.rel_residual(pushed.vec(), target.vec()))


def nullspace_residual(m: StatePreservingMorphism) -> float:
    """``Ad_{P_alpha} o E* o Ad_{P_beta}`` versus ``Ad_{P_alpha} o E*``."""
    pa = ch.ad_map(support_projection_state(m.prior), m.prior.algebra)
    pb = ch.ad_map(support_projection_state(m.prediction), m.prediction.algebra)
    adj = ch.hs_adjoint(m.channel)
    lhs = ch.compose_all(pa, adj, pb)
    rhs = ch.compose(pa, adj)
    return mc.rel_residual(lhs.matrix, rhs.matrix)


def classical_consistency_residuals(
    f: np.ndarray, p: np.ndarray, e: np.ndarray | None, retrodiction: Retrodiction = petz_extended
) -> tuple[float, float]:
    """``(map residual, Jeffrey residual)`` between Bayes and the retrodiction of the embedding."""
    m = StatePreservingMorphism(embed_prob(p), ch.embed_stoch(f))
    r = retrodiction(m).channel
    bayes = ch.embed_stoch(finstoch.bayes_inverse(f, p))
    res_map = float(np.max(np.abs(r.matrix - bayes.matrix)))
    if e is None:
        return res_map, 0.0
    classical = finstoch.jeffrey_update(f, p, e)
    quantum = diagonal_of(jeffrey_update_quantum(m, embed_prob(e), retrodiction))
    return res_map, float(np.max(np.abs(classical - quantum)))


def check_axioms(config=None, trials: int = 200, seed: int = 0, retrodiction=None, workers: int = 1):
    """Run the randomized axiom audit; see :func:`retrodiction.axioms.check_axioms`."""
    from .axioms import check_axioms as _run

    return _run(config, trials, seed, retrodiction or petz_extended, workers)


__all__ = [
    "MorphismClass",
    "Retrodiction",
    "StatePreservingMorphism",
    "check_axioms",
    "class_residual",
    "classical_consistency_residuals",
    "correction_map",
    "jeffrey_update_quantum",
    "morphism_residual",
    "nullspace_residual",
    "petz_extended",
    "petz_faithful",
]

