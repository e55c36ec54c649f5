import io
from fractions import Fraction

import numpy as np
import pytest

import oracles
from boxlab.core import DomainError, Scenario, fingerprint, identity_rep, sbv, vector_from_terms
from boxlab.enumeration import (
    IngestError,
    class_summary,
    enumerate_effects_01,
    enumerate_identity_reps_01,
    ingest_identity_vertices,
    sub_effects,
)
from boxlab.fixtures import fractional_effects, identity_examples
from boxlab.io import write_vectors
from boxlab.lp import in_convex_hull, is_valid_effect

BI = Scenario(2, 2, 2)
TRI = Scenario(3, 2, 2)


def _raw_keys(reps):
    return {r.as_int_array().astype(np.uint8).tobytes() for r in reps}


def _index_key(e):
    """The catalog's lookup key for a {0,1}-valued effect."""
    return np.packbits(np.array([int(v) for v in fingerprint(e)], dtype=np.uint8)).tobytes()


def _fp_set(cat):
    return {f.astype(np.uint8).tobytes() for f in cat.fingerprints()}


# --------------------------------------------------------------- identities


def test_single_system_identities():
    ids = enumerate_identity_reps_01(Scenario(1, 2, 2))
    assert sorted(r.coords for r in ids.reps) == [(0, 0, 1, 1), (1, 1, 0, 0)]


@pytest.mark.parametrize("shape", [(1, 2, 2), (2, 2, 2)])
def test_closure_matches_brute_force(shape):
    ids = enumerate_identity_reps_01(Scenario(*shape))
    assert _raw_keys(ids.reps) == oracles.brute_identity_01(*shape)


def test_bipartite_identity_count(ids_222):
    assert len(ids_222) == 12
    assert all(ids_222.is_wiring_rep)


@pytest.mark.parametrize("shape", [(3, 2, 2), (2, 2, 3), (2, 3, 2)])
def test_closure_soundness(shape):
    sc = Scenario(*shape)
    ids = enumerate_identity_reps_01(sc)
    D = oracles.det_matrix(*shape)
    for u in ids.reps:
        v = u.as_int_array()
        assert set(v.tolist()) <= {0, 1}
        assert v.sum() == sc.outputs**sc.parties
        assert (D @ v == 1).all()


def test_tripartite_identities(ids_322):
    assert len(ids_322) == ids_322.total() == 744
    assert ids_322.wiring_total() == 680
    assert len(set(ids_322.class_ids)) == 9


def test_reduced_identities_agree(ids_322):
    red = enumerate_identity_reps_01(TRI, symmetry_reduce=True)
    assert len(red) == 9
    assert red.total() == 744 and red.wiring_total() == 680
    assert _raw_keys(red.reps) <= _raw_keys(ids_322.reps)


# ------------------------------------------------------------------ effects


def test_bipartite_effects(cat_222):
    assert len(cat_222) == 82
    assert cat_222.n_classes() == 7
    assert cat_222.wiring.all()
    assert _fp_set(cat_222) == oracles.tree_effect_fingerprints(2, 2, 2)


def test_tripartite_effects(cat_322):
    assert len(cat_322) == 28886
    assert int((~cat_322.wiring).sum()) == 2048
    assert cat_322.n_classes() == 66
    assert len(set(cat_322.class_ids[~cat_322.wiring].tolist())) == 3


def test_trivial_deletions_present(cat_322):
    fps = _fp_set(cat_322)
    assert bytes(64) in fps
    assert bytes([1] * 64) in fps


def test_fingerprints_distinct(cat_322, reduced_322):
    assert len(_fp_set(cat_322)) == len(cat_322)
    assert len(set(reduced_322.canonical)) == len(reduced_322)


def test_flags_constant_within_classes(cat_322):
    for c in set(cat_322.class_ids.tolist()):
        rows = cat_322.class_ids == c
        assert len(set(cat_322.wiring[rows].tolist())) == 1
        assert len(set(cat_322.orbits[rows].tolist())) == 1
        assert cat_322.orbits[rows][0] == rows.sum()
    assert (TRI.symmetry_group_order() % cat_322.orbits == 0).all()


@pytest.mark.parametrize("shape", [(2, 2, 2), (3, 2, 2)])
def test_reduced_and_full_agree(shape):
    sc = Scenario(*shape)
    full = enumerate_effects_01(sc)
    red = enumerate_effects_01(sc, symmetry_reduce=True)
    ex = red.expanded()
    assert len(ex) == len(full) == red.total()
    assert _fp_set(ex) == _fp_set(full)
    by_fp = {f.astype(np.uint8).tobytes(): w for f, w in zip(full.fingerprints(), full.wiring)}
    assert all(by_fp[f.astype(np.uint8).tobytes()] == w for f, w in zip(ex.fingerprints(), ex.wiring))


def test_scan_strategy_agrees_with_orbit_strategy(reduced_322):
    scan = enumerate_effects_01(TRI, symmetry_reduce=True, strategy="scan")
    assert len(scan) == len(reduced_322) == 66
    assert sorted(scan.orbits.tolist()) == sorted(reduced_322.orbits.tolist())
    assert _fp_set(scan.expanded()) == _fp_set(reduced_322.expanded())


def test_unknown_strategy():
    with pytest.raises(DomainError):
        enumerate_effects_01(BI, symmetry_reduce=True, strategy="guess")


def test_class_summary_totals(reduced_322, cat_322):
    for cat in (reduced_322, cat_322):
        s = class_summary(cat)
        assert (s["classes"], s["wiring_classes"]) == (66, 63)
        assert (s["total"], s["wirings"], s["nonwirings"]) == (28886, 26838, 2048)
        assert sum(c["orbit"] for c in s["per_class"]) == 28886


def test_catalog_effects_valid(cat_222, reduced_322):
    assert all(is_valid_effect(BI, cat_222.rep(i)) for i in range(len(cat_222)))
    assert all(is_valid_effect(TRI, reduced_322.rep(i)) for i in range(len(reduced_322)))


@pytest.mark.slow
def test_every_tripartite_effect_valid(cat_322):
    bad = [i for i in range(len(cat_322)) if not is_valid_effect(TRI, cat_322.rep(i))]
    assert bad == []


# ------------------------------------------------------------- sub-effects

# e4 as an equal-weight mixture of six {0,1} extremal effects
E4_PARTS = (
    "P(101|010)+P(111|110)",
    "P(101|000)+P(010|011)+P(111|101)",
    "P(001|010)+P(111|110)",
    "P(001|100)+P(111|110)",
    "P(001|000)+P(111|100)",
    "P(010|011)+P(111|101)+P(001|110)",
)


def test_e4_decomposes_into_catalog_effects(cat_322):
    index = cat_322.index()
    parts = [vector_from_terms(TRI, t) for t in E4_PARTS]
    assert all(_index_key(p) in index for p in parts)
    mix = parts[0]
    for p in parts[1:]:
        mix = mix + p
    assert fingerprint(mix / 6) == fingerprint(fractional_effects()["e4"])


def test_e5_in_hull_of_catalog(cat_322):
    e5 = fractional_effects()["e5"]
    assert in_convex_hull(e5, cat_322.effects())


def test_fractional_identity_zeroing_to_e4_not_new(cat_322):
    u1 = identity_examples()["u1"]
    e4 = fractional_effects()["e4"]
    kept = [k for k in e4.support()]
    assert all(u1.coords[k] == e4.coords[k] for k in kept)
    assert sub_effects(u1, cat_322, masks=[kept]) == []


def test_sub_effects_of_01_identity(cat_222):
    u = identity_rep(BI)
    trivial = cat_222.subset([i for i, f in enumerate(cat_222.fingerprints()) if len(set(f.tolist())) == 1])
    found = sub_effects(u, trivial, use_symmetry=False)
    # every nontrivial deletion up to complement, each one a cataloged extremal effect
    assert len(found) == 7
    index = cat_222.index()
    for sub in found:
        assert sub.deterministic and sub.status == "extremal-candidate"
        for e in (sub.rep, u - sub.rep):
            assert _index_key(e) in index
    assert sub_effects(u, cat_222) == []


def test_sub_effects_requires_identity(cat_222):
    with pytest.raises(DomainError):
        sub_effects(sbv(BI, 0), cat_222)


# ---------------------------------------------------------------- ingestion


def _vector_file(tmp_path, sc, vecs, name="ids.txt"):
    path = tmp_path / name
    write_vectors(path, sc, [({"name": f"r{i}"}, v) for i, v in enumerate(vecs)])
    return path


def test_ingest_fractional_identities(tmp_path):
    ex = identity_examples()
    path = _vector_file(tmp_path, TRI, [ex["u1"].coords, ex["u2"].coords])
    ids = ingest_identity_vertices(path)
    assert len(ids) == 2
    assert ids.is_01_valued == [False, False]


def test_ingest_rejects_basis_vector(tmp_path):
    path = _vector_file(tmp_path, TRI, [identity_rep(TRI).coords, sbv(TRI, 5).coords])
    with pytest.raises(IngestError) as err:
        ingest_identity_vertices(path)
    assert err.value.report == ["line 3: fingerprint is not all ones"]


def test_ingest_rejects_negative_entry(tmp_path):
    sc = Scenario(1, 2, 2)
    path = _vector_file(tmp_path, sc, [(2, 2, -1, -1)])
    with pytest.raises(IngestError) as err:
        ingest_identity_vertices(path)
    assert "negative entry" in str(err.value)


def test_ingest_single_system_identity():
    src = io.StringIO("#boxlab v1 scenario N=1 nI=2 nO=2\nv=1 1 0 0\n")
    ids = ingest_identity_vertices(src)
    assert len(ids) == 1 and ids.is_01_valued == [True] and ids.is_wiring_rep == [True]
    assert ids.reps[0].coords == (1, 1, 0, 0)
    assert ids.reps[0].coords[0] == Fraction(1)
