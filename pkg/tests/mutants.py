"""Deliberately broken retrodictions for checking that the suite has teeth."""
from retrodiction import channel as ch
from retrodiction import retrodict as rd


def _wrap(m, matrix):
    r = ch.LinearBlockMap(m.prediction.algebra, m.prior.algebra, matrix)
    return rd.MorphismClass(rd.StatePreservingMorphism(m.prediction, r, m.prior))


def dropped_correction(m, tol=None):
    """Extended Petz without the ``P_alpha / Tr[P_alpha]`` summand."""
    return _wrap(m, rd._petz_core(m, tol).matrix)


def flipped_correction(m, tol=None):
    """Extended Petz with the correction subtracted."""
    return _wrap(m, rd._petz_core(m, tol).matrix - rd.correction_map(m, tol).matrix)
