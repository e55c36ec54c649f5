import io
import subprocess
import sys
from fractions import Fraction
from importlib import resources

import numpy as np
import pytest

from boxlab.cli import main
from boxlab.core import Scenario, identity_rep
from boxlab.enumeration import enumerate_effects_01, ingest_identity_vertices
from boxlab.fixtures import identity_examples, printed_vectors
from boxlab.io import (
    ParseError,
    catalog_text,
    export_fr_product,
    format_rational,
    parse_rational,
    read_catalog,
    read_vectors,
    write_catalog,
    write_identities,
    write_vectors,
)

BI = Scenario(2, 2, 2)
TRI = Scenario(3, 2, 2)


def _same_catalog(a, b):
    assert a.scenario == b.scenario and a.symmetry_reduced == b.symmetry_reduced
    for field in ("reps", "dens", "wiring", "deterministic", "class_ids", "orbits"):
        assert np.array_equal(getattr(a, field), getattr(b, field)), field


# ------------------------------------------------------------------ format


@pytest.mark.parametrize("text,value", [("3", 3), ("-2/6", Fraction(-1, 3)), ("0", 0), ("7/1080", Fraction(7, 1080))])
def test_parse_rational(text, value):
    assert parse_rational(text) == value


@pytest.mark.parametrize("text", ["1.5", "1/0", "a", "", "1/-2", "+3"])
def test_parse_rational_rejects(text):
    with pytest.raises(ValueError):
        parse_rational(text)


def test_format_rational():
    assert format_rational(Fraction(4, 2)) == "2"
    assert format_rational(Fraction(-3, 6)) == "-1/2"


def test_reduced_catalog_round_trip(tmp_path):
    cat = enumerate_effects_01(BI, symmetry_reduce=True)
    assert len(cat) == 7
    path = tmp_path / "bi.txt"
    write_catalog(cat, path)
    back = read_catalog(path)
    _same_catalog(cat, back)
    assert back.total() == 82
    assert list(tmp_path.iterdir()) == [path]


def test_full_catalog_round_trip(tmp_path):
    cat = enumerate_effects_01(BI)
    path = tmp_path / "bi_full.txt"
    write_catalog(cat, path)
    _same_catalog(cat, read_catalog(path))


def test_header_line():
    cat = enumerate_effects_01(BI, symmetry_reduce=True)
    lines = catalog_text(cat).splitlines()
    assert lines[0] == "#boxlab v1 scenario N=2 nI=2 nO=2"
    assert lines[1].startswith("class=0 wiring=1 det=1 orbit=")


def test_short_record_reports_line():
    src = io.StringIO("#boxlab v1 scenario N=2 nI=2 nO=2\n# comment\nclass=0 wiring=1 det=1 orbit=1 v=" + " 0" * 15 + "\n")
    with pytest.raises(ParseError) as err:
        read_catalog(src)
    assert err.value.lineno == 3
    assert "expected 16 values, got 15" in str(err.value)


@pytest.mark.parametrize(
    "text,lineno",
    [
        ("#boxlab v2 scenario N=2 nI=2 nO=2\n", 1),
        ("#boxlab v1 scenario N=0 nI=2 nO=2\n", 1),
        ("#boxlab v1 scenario N=1 nI=2 nO=2\nv=1 1 0 x\n", 2),
        ("#boxlab v1 scenario N=1 nI=2 nO=2\nclass=0 wiring=1 det=1 orbit=1 v=1 1 0 0\n"
         "class=0 class=1 wiring=1 det=1 orbit=1 v=1 1 0 0\n", 3),
        ("#boxlab v1 scenario N=1 nI=2 nO=2\nclass=0 wiring=2 det=1 orbit=1 v=1 1 0 0\n", 2),
        ("#boxlab v1 scenario N=1 nI=2 nO=2\n1 1 0 0\n", 2),
        ("", 1),
    ],
)
def test_parse_errors(text, lineno):
    with pytest.raises(ParseError) as err:
        read_catalog(io.StringIO(text))
    assert err.value.lineno == lineno


def test_denominator_annotation():
    sc, recs = read_vectors(io.StringIO("#boxlab v1 scenario N=1 nI=2 nO=2\nden=4 v=1 3 2 2\n"))
    assert sc == Scenario(1, 2, 2)
    assert recs[0][1]["v"] == [Fraction(1, 4), Fraction(3, 4), Fraction(1, 2), Fraction(1, 2)]


def test_shipped_fixture_file():
    text = resources.files("boxlab").joinpath("data/discrimination.txt").read_text()
    records = {line.split()[0]: line for line in text.splitlines()[1:] if line and not line.startswith("#")}
    assert "den=1080" in records["name=s1"] and "den=1080" in records["name=s2"]
    assert "den=6480" in records["name=t1"]
    v = printed_vectors()
    for name in ("s1", "s2", "t1", "t2"):
        assert v[name].is_valid()


def test_vectors_round_trip(tmp_path):
    v = printed_vectors()
    path = tmp_path / "states.txt"
    write_vectors(path, TRI, [({"name": "s1"}, v["s1"].coords), ({"name": "t1"}, v["t1"].coords)])
    sc, recs = read_vectors(path)
    assert sc == TRI
    assert [r["name"] for _, r in recs] == ["s1", "t1"]
    assert tuple(recs[0][1]["v"]) == v["s1"].coords and tuple(recs[1][1]["v"]) == v["t1"].coords


# ---------------------------------------------------------------- FR export


def test_fr_export_tripartite(ids_322):
    assert len(export_fr_product(ids_322, "disjunctive").edges) == 744
    assert len(export_fr_product(ids_322, "maximal").edges) == 680


def test_fr_export_single_system(tmp_path):
    src = io.StringIO("#boxlab v1 scenario N=1 nI=2 nO=2\nv=1 1 0 0\nv=0 0 1 1\n")
    hg = export_fr_product(ingest_identity_vertices(src), "disjunctive")
    assert len(hg.edges) == 2 and len(hg.vertices) == 4
    assert hg.vertices[2] == ((0,), (1,))


def test_fr_export_weighted(tmp_path, ids_222):
    ex = identity_examples()
    path = tmp_path / "ids.txt"
    write_vectors(path, TRI, [({}, identity_rep(TRI).coords), ({}, ex["u1"].coords), ({}, ex["u2"].coords)])
    ids = ingest_identity_vertices(path)
    weighted = export_fr_product(ids, "weighted")
    assert weighted.weighted() == [False, True, True]
    assert len(export_fr_product(ids, "disjunctive").edges) == 1
    sc, recs = read_vectors(io.StringIO(weighted.text()))
    assert [tuple(r["v"]) for _, r in recs] == [tuple(e) for e in weighted.edges]
    with pytest.raises(ValueError):
        export_fr_product(ids_222, "tensor")


# ---------------------------------------------------------------------- CLI


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_effects(capsys):
    code, out, _ = _run(capsys, "effects", "2", "2", "2", "--classes")
    assert code == 0
    assert out.splitlines()[0] == "classes=7 total=82 wirings=82 nonwirings=0"
    assert len(out.splitlines()) == 8


def test_cli_nlwe(capsys):
    assert _run(capsys, "nlwe")[:2] == (0, "perfect=1 wiring_max=7/8\n")


def test_cli_distill(capsys, tmp_path):
    code, out, _ = _run(capsys, "distill", "--section", "I", "--eta", "0", "--omega", "1")
    assert code == 0 and out == "chsh_i=4 chsh_f=4\n"
    path = tmp_path / "grid.csv"
    code, out, _ = _run(capsys, "distill", "--section", "III", "--eta", "1/8", "--omega", "1/2", "--csv", str(path))
    assert code == 0
    assert len(path.read_text().splitlines()) == 46


def test_cli_identities_and_fr_export(capsys, tmp_path):
    path = tmp_path / "ids.txt"
    code, out, _ = _run(capsys, "identities", "3", "2", "2", "--classes", "--out", str(path))
    assert code == 0 and out == "identities=744 wiring=680 classes=9 wiring_classes=8\n"
    code, out, _ = _run(capsys, "fr-export", "--in", str(path), "--variant", "maximal")
    assert code == 0 and out.startswith("edges=680 ")
    code, out, _ = _run(capsys, "fr-export", "--in", str(path), "--variant", "disjunctive")
    assert out.startswith("edges=744 ")


def test_cli_discriminate(capsys, tmp_path):
    cat = tmp_path / "tri.txt"
    assert _run(capsys, "effects", "3", "2", "2", "--out", str(cat))[0] == 0
    code, out, _ = _run(capsys, "discriminate", "--s1", "fixture:s1", "--s2", "fixture:s2", "--catalog", str(cat))
    assert code == 0 and out.splitlines()[0] == "distance=1 guessing=1"
    code, out, _ = _run(
        capsys, "discriminate", "--s1", "fixture:s1", "--s2", "fixture:s2", "--catalog", str(cat), "--wirings-only"
    )
    assert out.splitlines()[0] == "distance=2/3 guessing=5/6"
    code, out, _ = _run(capsys, "discriminate", "--s1", "fixture:t1", "--s2", "fixture:t2", "--catalog", str(cat))
    assert out.splitlines()[0] == "distance=1127/1296 guessing=2423/2592"


def test_cli_classify_and_subeffects(capsys, tmp_path):
    cat = tmp_path / "bi.txt"
    _run(capsys, "effects", "2", "2", "2", "--full", "--out", str(cat))
    code, out, _ = _run(capsys, "classify", "--in", str(cat))
    assert code == 0 and out == "records=82 wirings=82 nonwirings=0\n"
    ids = tmp_path / "u.txt"
    write_identities(ingest_identity_vertices(io.StringIO(
        "#boxlab v1 scenario N=2 nI=2 nO=2\nv=" + " ".join(str(c) for c in identity_rep(BI).coords) + "\n"
    )), ids)
    code, out, _ = _run(capsys, "subeffects", "--identity", str(ids), "--known", str(cat))
    assert code == 0 and out.splitlines()[-1] == "candidates=0"


def test_cli_advantage_identity(capsys, tmp_path):
    cat = tmp_path / "tri.txt"
    _run(capsys, "effects", "3", "2", "2", "--out", str(cat))
    eff = tmp_path / "u.txt"
    write_vectors(eff, TRI, [({"name": "u"}, identity_rep(TRI).coords)])
    code, out, _ = _run(capsys, "advantage", "--effect", str(eff), "--catalog", str(cat))
    assert code == 0 and out == "status=infeasible\n"


def test_cli_exit_codes(capsys, tmp_path):
    assert _run(capsys, "effects", "2", "2", "2", "--bogus")[0] == 2
    assert _run(capsys, "effects", "0", "2", "2")[0] == 1
    assert _run(capsys, "classify", "--in", str(tmp_path / "missing.txt"))[0] == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("#boxlab v1 scenario N=2 nI=2 nO=2\nclass=0 wiring=1 det=1 orbit=1 v=" + " 0" * 15 + "\n")
    code, _, err = _run(capsys, "classify", "--in", str(bad))
    assert code == 2 and ":2:" in err
    assert _run(capsys, "distill", "--section", "I", "--eta", "1", "--omega", "1")[0] == 1
    assert _run(capsys, "distill", "--section", "I", "--eta", "x", "--omega", "1")[0] == 2
    code, _, err = _run(capsys, "discriminate", "--s1", "fixture:nope", "--s2", "fixture:s2", "--catalog", str(bad))
    assert code == 1 and "unknown fixture" in err


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "boxlab.cli", "nlwe"], capture_output=True, text=True, check=True)
    assert out.stdout == "perfect=1 wiring_max=7/8\n"
