"""Plain-text catalog format, fixture vectors and hypergraph export.

File layout::

    #boxlab v1 scenario N=3 nI=2 nO=2
    class=0 wiring=1 det=1 orbit=8 v=0 1 0 ...

Every record is a run of ``key=value`` annotations followed by ``v=`` and
the vector entries.  Entries are integers or ``p/q``; an optional ``den=``
annotation divides all of them.  Lines starting with ``#`` after the header
are comments.
"""
from __future__ import annotations

import math
import os
import re
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import EffectRep, Scenario, event_table

HEADER_RE = re.compile(r"^#boxlab v1 scenario N=(\d+) nI=(\d+) nO=(\d+)\s*$")
RATIONAL_RE = re.compile(r"^-?\d+(/\d+)?$")
CATALOG_KEYS = ("class", "wiring", "det", "orbit")


class ParseError(ValueError):
    def __init__(self, lineno: int, message: str, source: str = ""):
        self.lineno = lineno
        self.message = message
        where = f"{source}:" if source else "line "
        super().__init__(f"{where}{lineno}: {message}")


def parse_rational(text: str) -> Fraction:
    if not RATIONAL_RE.match(text):
        raise ValueError(f"bad rational {text!r}")
    if "/" in text:
        p, q = text.split("/")
        if int(q) == 0:
            raise ValueError(f"zero denominator in {text!r}")
    return Fraction(text)


def format_rational(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _lines(source) -> tuple[list[str], str]:
    if hasattr(source, "read"):
        return source.read().splitlines(), getattr(source, "name", "")
    path = Path(source)
    return path.read_text().splitlines(), str(path)


def parse_header(line: str, lineno: int = 1, name: str = "") -> Scenario:
    m = HEADER_RE.match(line.strip())
    if not m:
        raise ParseError(lineno, "malformed header, expected '#boxlab v1 scenario N=<n> nI=<i> nO=<o>'", name)
    n, ni, no = map(int, m.groups())
    if n < 1 or ni < 1 or no < 1:
        raise ParseError(lineno, "scenario sizes must be positive", name)
    return Scenario(n, ni, no)


def parse_record(line: str, dim: int, lineno: int, name: str = "") -> dict:
    tokens = line.split()
    rec: dict = {}
    values: list[str] | None = None
    for tok in tokens:
        if values is not None:
            values.append(tok)
            continue
        if tok.startswith("v="):
            values = [tok[2:]] if tok[2:] else []
            continue
        if "=" not in tok:
            raise ParseError(lineno, f"expected key=value, got {tok!r}", name)
        key, val = tok.split("=", 1)
        if key in rec:
            raise ParseError(lineno, f"duplicate field {key!r}", name)
        rec[key] = val
    if values is None:
        raise ParseError(lineno, "record has no 'v=' field", name)
    if len(values) != dim:
        raise ParseError(lineno, f"expected {dim} values, got {len(values)}", name)
    try:
        vec = [parse_rational(v) for v in values]
        if "den" in rec:
            den = parse_rational(rec["den"])
            if den <= 0:
                raise ValueError("den must be positive")
            vec = [v / den for v in vec]
    except ValueError as exc:
        raise ParseError(lineno, str(exc), name) from None
    rec["v"] = vec
    return rec


def read_vectors(source) -> tuple[Scenario, list[tuple[int, dict]]]:
    """Header scenario and ``(line number, record)`` pairs of a catalog-format file."""
    lines, name = _lines(source)
    if not lines:
        raise ParseError(1, "empty file", name)
    sc = parse_header(lines[0], 1, name)
    dim = sc.dimension()
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        records.append((lineno, parse_record(stripped, dim, lineno, name)))
    return sc, records


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def header(scenario: Scenario) -> str:
    return f"#boxlab v1 scenario N={scenario.parties} nI={scenario.inputs} nO={scenario.outputs}"


def format_record(fields: dict, values: Iterable) -> str:
    head = " ".join(f"{k}={v}" for k, v in fields.items())
    body = " ".join(format_rational(x) for x in values)
    return f"{head} v={body}" if head else f"v={body}"


def write_vectors(path, scenario: Scenario, records: Sequence[tuple[dict, Iterable]]) -> None:
    lines = [header(scenario)] + [format_record(f, v) for f, v in records]
    atomic_write(path, "\n".join(lines) + "\n")


# ----------------------------------------------------------------- catalogs


def catalog_text(catalog) -> str:
    lines = [header(catalog.scenario)]
    for i in range(len(catalog)):
        d = int(catalog.dens[i])
        fields = {
            "class": int(catalog.class_ids[i]),
            "wiring": int(bool(catalog.wiring[i])),
            "det": int(bool(catalog.deterministic[i])),
            "orbit": int(catalog.orbits[i]),
        }
        lines.append(format_record(fields, (Fraction(int(v), d) for v in catalog.reps[i])))
    return "\n".join(lines) + "\n"


def write_catalog(catalog, path) -> None:
    atomic_write(path, catalog_text(catalog))


def read_catalog(source):
    """Parse a catalog file; a file with one record per class is read as symmetry-reduced."""
    from .enumeration import Catalog

    sc, records = read_vectors(source)
    name = getattr(source, "name", "") if hasattr(source, "read") else str(source)
    rows, dens, flags = [], [], []
    for lineno, rec in records:
        missing = [k for k in CATALOG_KEYS if k not in rec]
        if missing:
            raise ParseError(lineno, "missing field(s) " + ", ".join(missing), name)
        try:
            cls, wir, det, orb = (int(rec[k]) for k in CATALOG_KEYS)
        except ValueError:
            raise ParseError(lineno, "class, wiring, det and orbit must be integers", name) from None
        if wir not in (0, 1) or det not in (0, 1):
            raise ParseError(lineno, "wiring and det must be 0 or 1", name)
        vec = rec["v"]
        d = math.lcm(*(v.denominator for v in vec))
        rows.append([int(v * d) for v in vec])
        dens.append(d)
        flags.append((cls, wir, det, orb))
    n = len(rows)
    F = np.array(flags, dtype=np.int64).reshape(n, 4)
    classes = F[:, 0].tolist()
    reduced = n > 0 and len(set(classes)) == n and bool((F[:, 3] > 1).any())
    return Catalog(
        sc, np.array(rows, dtype=np.int64).reshape(n, sc.dimension()), np.array(dens, dtype=np.int64),
        F[:, 1].astype(bool), F[:, 2].astype(bool), F[:, 0], F[:, 3], reduced,
    )


def read_effects(source) -> tuple[Scenario, list[tuple[dict, EffectRep]]]:
    sc, records = read_vectors(source)
    return sc, [(rec, EffectRep(sc, rec["v"])) for _, rec in records]


def write_identities(ids, path) -> None:
    recs = []
    for i, u in enumerate(ids.reps):
        f = {"wiring": int(bool(ids.is_wiring_rep[i])) if ids.is_wiring_rep else 0}
        if ids.class_ids is not None:
            f = {"class": ids.class_ids[i], **f, "orbit": ids.orbit_sizes[i]}
        recs.append((f, u.coords))
    write_vectors(path, ids.scenario, recs)


# -------------------------------------------------------------- hypergraphs


@dataclass
class Hypergraph:
    scenario: Scenario
    vertices: list  # (outcomes, settings) per flat index
    edges: list  # tuples of Fractions, one per identity representation

    def weighted(self) -> list[bool]:
        return [any(w not in (0, 1) for w in e) for e in self.edges]

    def text(self) -> str:
        lines = [header(self.scenario)]
        lines.append("# vertices " + " ".join(
            "".join(map(str, a)) + "|" + "".join(map(str, x)) for a, x in self.vertices
        ))
        for e, w in zip(self.edges, self.weighted()):
            lines.append(format_record({"edge": int(w)}, e))
        return "\n".join(lines) + "\n"


FR_VARIANTS = ("disjunctive", "maximal", "weighted")


def export_fr_product(identities, variant: str) -> Hypergraph:
    """Hypergraph with one edge per identity representation.

    ``disjunctive`` keeps the {0,1} representations, ``maximal`` the wiring
    ones, ``weighted`` every representation including fractional vertices.
    """
    if variant not in FR_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {', '.join(FR_VARIANTS)}")
    sc = identities.scenario
    A, X = event_table(sc)
    vertices = [(tuple(int(v) for v in a), tuple(int(v) for v in x)) for a, x in zip(A, X)]
    flags01 = identities.is_01_valued or [u.is_01() for u in identities.reps]
    edges = []
    for i, u in enumerate(identities.reps):
        if variant == "disjunctive" and not flags01[i]:
            continue
        if variant == "maximal" and not (flags01[i] and identities.is_wiring_rep[i]):
            continue
        edges.append(tuple(u.coords))
    return Hypergraph(sc, vertices, edges)
