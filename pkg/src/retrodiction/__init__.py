"""Bayesian inversion, Petz recovery, and retrodiction for finite-dimensional C*-algebras."""
from .axioms import AxiomConfig, check_axioms, check_classical_consistency
from .channel import Channel, LinearBlockMap
from .cstar import Algebra, Element, State
from .dilation import (
    Dilation,
    canonical_purification,
    derived_dilation,
    dilationally_equal,
    dilationally_equal_empirical,
    factor_dilation,
)
from .errors import PreconditionError, RetroError, ValidationError
from .finstoch import bayes_inverse, jeffrey_update
from .matrixcore import Tolerance, use_tolerance
from .retrodict import (
    MorphismClass,
    StatePreservingMorphism,
    jeffrey_update_quantum,
    petz_extended,
    petz_faithful,
)

__version__ = "0.1.0"

__all__ = [
    "Algebra",
    "AxiomConfig",
    "Channel",
    "Dilation",
    "Element",
    "LinearBlockMap",
    "MorphismClass",
    "PreconditionError",
    "RetroError",
    "State",
    "StatePreservingMorphism",
    "Tolerance",
    "ValidationError",
    "bayes_inverse",
    "canonical_purification",
    "check_axioms",
    "check_classical_consistency",
    "derived_dilation",
    "dilationally_equal",
    "dilationally_equal_empirical",
    "factor_dilation",
    "jeffrey_update",
    "jeffrey_update_quantum",
    "petz_extended",
    "petz_faithful",
    "use_tolerance",
]
