import json

import numpy as np
import pytest

from mutants import dropped_correction, flipped_correction
from retrodiction import axioms as ax
from retrodiction.cstar import Algebra

QUANTUM_SMALL = dict(trials=40, seed=11)


def test_quantum_axioms_hold():
    report = ax.check_axioms(**QUANTUM_SMALL)
    assert report.passed, report.lines()
    assert set(report.results) == set(ax.AXIOMS)
    assert all(r.trials == 40 and not r.failures for r in report.results.values())


def test_faithful_matrix_algebras_only():
    config = ax.AxiomConfig(algebras=((2,), (3,)), nonfaithful_fraction=0.0)
    assert ax.check_axioms(config, trials=20, seed=2).passed


def test_classical_axioms_hold():
    report = ax.check_axioms(ax.AxiomConfig(kind="classical"), trials=100, seed=4)
    assert report.passed, report.lines()
    assert report.threshold == 1e-10


def test_nonfaithful_split_is_even():
    flags = [ax.is_nonfaithful_trial(i, 0.5) for i in range(200)]
    assert sum(flags) == 100
    assert not any(ax.is_nonfaithful_trial(i, 0.0) for i in range(10))
    assert all(ax.is_nonfaithful_trial(i, 1.0) for i in range(10))


def test_report_is_reproducible_and_worker_independent():
    a = ax.check_axioms(trials=8, seed=3).to_json()
    b = ax.check_axioms(trials=8, seed=3, workers=2).to_json()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_random_isomorphism_inverse(rng):
    for dims in [(2, 1), (1, 1), (1, 2, 1)]:
        iso, inv = ax.random_isomorphism(Algebra(dims), rng)
        assert np.allclose(inv.matrix @ iso.matrix, np.eye(iso.domain.dim))
        assert np.allclose(iso.matrix @ inv.matrix, np.eye(iso.codomain.dim))


def test_dropping_the_correction_is_detected():
    report = ax.check_axioms(trials=20, seed=7, retrodiction=dropped_correction)
    assert not report.passed
    assert "recovering" in report.failed_axioms()
    failure = report.results["recovering"].failures[0]
    assert ax.is_nonfaithful_trial(failure["trial"], 0.5)
    assert "prior" in failure["instance"] and "channel" in failure["instance"]
    assert len(report.results["recovering"].failures) <= ax.MAX_FAILURES
    consistency = ax.check_classical_consistency(50, seed=1, retrodiction=dropped_correction)
    assert not consistency.passed


def test_flipping_the_correction_is_detected():
    report = ax.check_axioms(trials=20, seed=7, retrodiction=flipped_correction)
    assert "recovering" in report.failed_axioms()


def test_mutants_agree_with_petz_on_faithful_instances():
    # equal Hilbert dimensions, so faithful priors give faithful predictions
    config = ax.AxiomConfig(algebras=((2,), (1, 1)), nonfaithful_fraction=0.0)
    for mutant in (dropped_correction, flipped_correction):
        assert ax.check_axioms(config, trials=10, seed=5, retrodiction=mutant).passed


def test_classical_consistency_report():
    rep = ax.check_classical_consistency(60, seed=9)
    assert rep.passed
    assert rep.zero_prediction_instances > 0


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        ax.AxiomConfig(kind="bogus")


def test_commutative_algebras_through_the_quantum_path():
    config = ax.AxiomConfig(algebras=((1, 1), (1, 1, 1), (1, 1, 1, 1)))
    assert ax.check_axioms(config, trials=30, seed=8).passed


def test_report_json_shape():
    doc = ax.check_axioms(trials=3, seed=1).to_json()
    assert set(doc["axioms"]) == set(ax.AXIOMS)
    for entry in doc["axioms"].values():
        assert set(entry) == {"trials", "max_residual", "failures"}


def test_retrodict_exposes_the_audit():
    from retrodiction import retrodict as rd

    assert rd.check_axioms(trials=4, seed=0).passed
