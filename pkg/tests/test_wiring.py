import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from boxlab.core import (
    DomainError,
    EffectRep,
    Relabelling,
    Scenario,
    apply_relabelling,
    det_matrix,
    event_table,
    fingerprint,
    identity_rep,
    orbit_fingerprints,
    sbv,
    symmetry_group,
    vector_from_terms,
)
from boxlab.enumeration import enumerate_effects_01, enumerate_identity_reps_01
from boxlab.fixtures import NONWIRING_TERMS
from boxlab.lp import is_valid_effect
from boxlab.wiring import (
    Measurement,
    WiringMeasurement,
    condition_effect,
    enumerate_wiring_measurements,
    is_wiring_representation,
    wiring_bases,
)

SINGLE = Scenario(1, 2, 2)
BI = Scenario(2, 2, 2)
TRI = Scenario(3, 2, 2)

# x1 = 0, x2 = a1, output a1 xor a2, outcome 0
FIG_EFFECT = "P(00|00) + P(11|01)"


def _raw(u):
    return u.as_int_array().astype(np.uint8).tobytes()


# ------------------------------------------------------------- conditioning


def test_condition_printed_wiring_effect():
    e = vector_from_terms(BI, FIG_EFFECT)
    assert condition_effect(e, 0, 0) == vector_from_terms(SINGLE, "P(0|0)")
    assert condition_effect(e, 0, 1) == vector_from_terms(SINGLE, "P(1|1)")


def test_condition_identity():
    u = identity_rep(TRI)
    for party in range(3):
        for outcome in range(2):
            assert condition_effect(u, party, outcome) == identity_rep(BI)


def test_condition_rejects_other_settings():
    e = vector_from_terms(BI, "P(00|10)")
    with pytest.raises(DomainError):
        condition_effect(e, 0, 0)
    with pytest.raises(DomainError):
        condition_effect(e, 2, 0)


def _input_swap(sc, party, x):
    """Relabelling exchanging inputs 0 and x of one party."""
    ident = Relabelling.identity(sc)
    ip = [list(t) for t in ident.input_perms]
    ip[party][0], ip[party][x] = x, 0
    return Relabelling(ident.party_perm, ip, ident.output_perms)


def test_conditioning_keeps_wiring_structure(ids_322):
    A, X = event_table(TRI)
    for u, w in zip(ids_322.reps, ids_322.is_wiring_rep):
        if not w:
            continue
        support = u.support()
        first = [p for p in range(3) if len(set(X[support, p].tolist())) == 1]
        assert first, "a wiring representation measures some party first at a fixed input"
        p = first[0]
        x = int(X[support[0], p])
        v = apply_relabelling(_input_swap(TRI, p, x), u) if x else u
        for a in range(2):
            sub = condition_effect(v, p, a)
            assert is_wiring_representation(sub, base_parties=1)
            assert fingerprint(sub) == fingerprint(identity_rep(BI))


# ----------------------------------------------------------- classification


def test_printed_examples():
    assert is_wiring_representation(vector_from_terms(BI, FIG_EFFECT))
    assert is_wiring_representation(vector_from_terms(BI, FIG_EFFECT), base_parties=1)
    assert not is_wiring_representation(vector_from_terms(TRI, NONWIRING_TERMS[0]))
    for k in range(4):
        assert is_wiring_representation(sbv(SINGLE, k))


def test_classifier_needs_01_values():
    with pytest.raises(DomainError):
        is_wiring_representation(identity_rep(BI) * 2)


@pytest.mark.parametrize("shape", [(2, 2, 2), (3, 2, 2), (2, 3, 2), (2, 2, 3)])
@pytest.mark.parametrize("base", [1, 2])
def test_wiring_identities_match_tree_oracle(shape, base):
    ids = enumerate_identity_reps_01(Scenario(*shape))
    flagged = {_raw(u) for u in ids.reps if is_wiring_representation(u, base_parties=base)}
    assert flagged == oracles.tree_identity_vectors(*shape)


def test_bipartite_effects_are_tree_wirings(cat_222):
    literal = enumerate_effects_01(BI, base_parties=1)
    assert literal.wiring.all() and len(literal) == 82
    fps = {f.astype(np.uint8).tobytes() for f in cat_222.fingerprints()}
    assert fps == oracles.tree_effect_fingerprints(2, 2, 2)


def test_tripartite_flags_match_tree_oracle(cat_322):
    tree = oracles.tree_effect_fingerprints(3, 2, 2)
    flags = [f.astype(np.uint8).tobytes() in tree for f in cat_322.fingerprints()]
    assert flags == cat_322.wiring.tolist()
    assert sum(flags) == 26838


@settings(max_examples=10, deadline=None)
@given(index=st.integers(0, TRI.symmetry_group_order() - 1))
def test_classification_invariant_under_relabelling(ids_322, index):
    g = symmetry_group(TRI).element(index)
    for u, w in zip(ids_322.reps, ids_322.is_wiring_rep):
        assert is_wiring_representation(apply_relabelling(g, u)) == w


def test_nonwiring_orbit_has_no_wiring_deletion(ids_322):
    """No {0,1} representation generated from an identity rep makes a relabelled e1 a wiring."""
    e1 = vector_from_terms(TRI, NONWIRING_TERMS[0])
    orbit = orbit_fingerprints(e1)
    assert len(orbit) > 1
    D = det_matrix(TRI).astype(np.int64)
    hits = 0
    for u in ids_322.reps:
        atoms = np.array(u.support())
        for bits in itertools.product((0, 1), repeat=atoms.size):
            v = np.zeros(TRI.dimension(), dtype=np.int64)
            v[atoms[np.array(bits, dtype=bool)]] = 1
            if (D @ v).tobytes() in orbit:
                hits += 1
                assert not is_wiring_representation(EffectRep(TRI, v.tolist()), base_parties=1)
    assert hits >= len(orbit)


# ------------------------------------------------------------- measurements


def test_single_system_measurements():
    ms = list(enumerate_wiring_measurements(SINGLE, 2))
    assert len(ms) == 8
    assert {wm.base.coords for wm in ms} == {(1, 1, 0, 0), (0, 0, 1, 1)}
    for wm in ms:
        m = wm.measurement(labels=(0, 1))
        assert m.sums_to_identity()


def test_tripartite_bases():
    bases = wiring_bases(TRI)
    assert len(bases) == 680
    assert {_raw(u) for u in bases} == oracles.tree_identity_vectors(3, 2, 2)


def _tree_measurements(N, nI, nO, m):
    D = oracles.det_matrix(N, nI, nO)
    out = set()
    for vec in oracles.tree_identity_vectors(N, nI, nO):
        atoms = np.nonzero(np.frombuffer(vec, dtype=np.uint8))[0]
        for labels in itertools.product(range(m), repeat=atoms.size):
            fps = []
            for lab in range(m):
                v = np.zeros(D.shape[1], dtype=np.int64)
                v[atoms[np.array(labels) == lab]] = 1
                fps.append(tuple((D @ v).tolist()))
            out.add(tuple(sorted(fps)))
    return out


def test_bipartite_measurements_match_tree_oracle():
    got = set()
    for wm in enumerate_wiring_measurements(BI, 2):
        m = wm.measurement(labels=(0, 1))
        got.add(tuple(sorted(tuple(int(x) for x in fingerprint(e)) for e in m.effects)))
    assert got == _tree_measurements(2, 2, 2, 2)


def test_measurement_effects_valid():
    u = wiring_bases(TRI)[17]
    wm = WiringMeasurement(u, tuple(k % 3 for k in range(len(u.support()))))
    m = wm.measurement()
    assert isinstance(m, Measurement) and m.sums_to_identity()
    assert all(is_valid_effect(TRI, e) for e in m.effects)


def test_measurement_label_count():
    with pytest.raises(DomainError):
        Measurement(BI, (identity_rep(BI),), labels=("a", "b"))
    with pytest.raises(DomainError):
        list(enumerate_wiring_measurements(BI, 0))
