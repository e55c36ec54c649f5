"""Enumeration of {0,1} identity representations and extremal effects.

The closure walks {0,1} identity representations with single no-signalling
moves; the deletion loop zeroes unit entries of each representation and
deduplicates the resulting effects by fingerprint.  Symmetry classes come
either from orbit components of a complete catalog or, in symmetry-reduced
runs, from the lexicographically least fingerprint over the relabelling group.
"""
from __future__ import annotations

import itertools
import logging
import math
import os
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .core import (
    DomainError,
    EffectRep,
    Scenario,
    _Vector,
    det_basis,
    det_matrix,
    det_permutation,
    event_table,
    generator_matrix,
    generators,
    identity_rep,
    symmetry_group,
)
from .lp import hull_lp_from_fingerprints, support_filter
from .wiring import DEFAULT_BASE_PARTIES, _is_wiring

log = logging.getLogger(__name__)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("BOXLAB_THREADS", "1")))
    except ValueError:
        return 1


# ----------------------------------------------------------------- helpers


def _as_bits(v: np.ndarray) -> int:
    return int.from_bytes(np.packbits(v.astype(np.uint8), bitorder="little").tobytes(), "little")


def _from_bits(x: int, dim: int) -> np.ndarray:
    raw = x.to_bytes((dim + 7) // 8, "little")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:dim]


def _keys(M: np.ndarray) -> list[bytes]:
    """Row keys of a 0/1 matrix; byte order of the keys is lexicographic row order."""
    P = np.packbits(M.astype(np.uint8), axis=1)
    return [r.tobytes() for r in P]


def _subset_masks(k: int) -> np.ndarray:
    """All 2^k subsets of k atoms as rows, ascending bitmask order (atom 0 = bit 0)."""
    m = np.arange(1 << k, dtype=np.int64)
    return ((m[:, None] >> np.arange(k)) & 1).astype(np.int8)


def _move_masks(scenario: Scenario, all_pairs: bool) -> list[tuple[int, int]]:
    """(plus, minus) bitmasks for each move ±r.

    With ``all_pairs`` the set also contains the setting x vs x' conditions for
    every pair, which is closed under relabelling up to sign.
    """
    out = []
    if not all_pairs or scenario.inputs <= 2:
        rows = generator_matrix(scenario)
    else:
        rows = _all_pair_moves(scenario)
    for r in rows:
        plus = _as_bits(r > 0)
        minus = _as_bits(r < 0)
        out.append((plus, minus))
        out.append((minus, plus))
    return out


def _all_pair_moves(scenario: Scenario) -> np.ndarray:
    n, ni, no = scenario.parties, scenario.inputs, scenario.outputs
    A, X = event_table(scenario)
    rows = []
    for p in range(n):
        others = [q for q in range(n) if q != p]
        key = np.zeros(A.shape[0], dtype=np.int64)
        for q in others:
            key = key * (no * ni) + A[:, q] * ni + X[:, q]
        for val in np.unique(key):
            base = key == val
            for x0, x1 in itertools.combinations(range(ni), 2):
                r = np.zeros(A.shape[0], dtype=np.int64)
                r[base & (X[:, p] == x0)] = 1
                r[base & (X[:, p] == x1)] = -1
                rows.append(r)
    return np.array(rows)


# -------------------------------------------------------------- identities


@dataclass
class IdentitySet:
    scenario: Scenario
    reps: list
    is_01_valued: list = field(default_factory=list)
    is_wiring_rep: list = field(default_factory=list)
    class_ids: list | None = None
    orbit_sizes: list | None = None
    symmetry_reduced: bool = False

    def __len__(self):
        return len(self.reps)

    def total(self) -> int:
        return sum(self.orbit_sizes) if self.symmetry_reduced else len(self.reps)

    def wiring_total(self) -> int:
        if self.symmetry_reduced:
            return sum(o for o, w in zip(self.orbit_sizes, self.is_wiring_rep) if w)
        return sum(self.is_wiring_rep)


def _closure(start: int, moves, canon: Callable[[int], int] | None = None) -> list[int]:
    seen = {start if canon is None else canon(start)}
    order = list(seen)
    frontier = deque(order)
    while frontier:
        v = frontier.popleft()
        for plus, minus in moves:
            if v & minus != minus:
                continue  # a -1 would land on a zero entry
            assert v & plus == 0, "nonnegative integer identity representation left {0,1}"
            w = (v ^ minus) | plus
            if canon is not None:
                w = canon(w)
            if w not in seen:
                seen.add(w)
                order.append(w)
                frontier.append(w)
    return order


def _classify_identity(scenario, vec, base):
    A, X = event_table(scenario)
    idx = np.nonzero(vec)[0]
    return _is_wiring(A[idx], X[idx], scenario.outputs, base)


class OrbitIndex:
    """Memoised orbits of {0,1} rows under a group given by generating permutations.

    A generator acts on a row as ``row[perm]``.  The first time a row is seen
    its whole orbit is explored breadth first; every member then maps to the
    same class, whose canonical key is the least packed member.
    """

    def __init__(self, perms: Sequence[np.ndarray]):
        self.perms = [np.asarray(p, dtype=np.int64) for p in perms]
        self._class_of: dict[bytes, int] = {}
        self.canonical: list[bytes] = []
        self.sizes: list[int] = []

    def __len__(self):
        return len(self.canonical)

    def _explore(self, row: np.ndarray, key: bytes) -> int:
        seen = {key}
        frontier = row[None, :]
        while frontier.shape[0]:
            fresh = []
            for p in self.perms:
                G = frontier[:, p]
                for r, k in zip(G, _keys(G)):
                    if k not in seen:
                        seen.add(k)
                        fresh.append(r)
            frontier = np.array(fresh, dtype=np.uint8).reshape(len(fresh), row.size)
        cid = len(self.canonical)
        for k in seen:
            self._class_of[k] = cid
        self.canonical.append(min(seen))
        self.sizes.append(len(seen))
        return cid

    def classify(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.uint8)
        out = np.empty(rows.shape[0], dtype=np.int64)
        for i, k in enumerate(_keys(rows)):
            cid = self._class_of.get(k)
            out[i] = self._explore(rows[i], k) if cid is None else cid
        return out


def coordinate_generator_perms(scenario: Scenario) -> list[np.ndarray]:
    # (g·v)[P[k]] = v[k], so g·v = v[argsort(P)]
    return [np.argsort(g.coordinate_permutation(scenario)) for g in generators(scenario)]


def det_generator_perms(scenario: Scenario) -> list[np.ndarray]:
    return [det_permutation(g, scenario) for g in generators(scenario)]


def _canonical_raw(scenario: Scenario, vec: np.ndarray) -> bytes:
    """Least packed relabelling of a {0,1} vector, by a scan of the whole group."""
    best = None
    v = vec.astype(np.uint8)
    for _, P in symmetry_group(scenario).coordinate_tables():
        inv = np.argsort(P, axis=1)
        key = min(_keys(v[inv]))
        if best is None or key < best:
            best = key
    return best


def identity_classes(ids: "IdentitySet") -> "IdentitySet":
    """Attach relabelling classes and orbit sizes to a complete identity set."""
    sc = ids.scenario
    index = OrbitIndex(coordinate_generator_perms(sc))
    V = np.array([u.as_int_array() for u in ids.reps], dtype=np.uint8)
    cls = index.classify(V)
    order = sorted(range(len(index)), key=lambda c: index.canonical[c])
    rank = {c: r for r, c in enumerate(order)}
    ids.class_ids = [rank[int(c)] for c in cls]
    ids.orbit_sizes = [index.sizes[int(c)] for c in cls]
    return ids


def enumerate_identity_reps_01(
    scenario: Scenario, symmetry_reduce: bool = False, base_parties: int = DEFAULT_BASE_PARTIES
) -> IdentitySet:
    """All {0,1}-valued identity representations reachable by no-signalling moves.

    Breadth-first and accumulating: the set only grows, and vectors with a
    negative entry are discarded.  With ``symmetry_reduce`` only one vector per
    relabelling class is kept and orbit sizes are attached.
    """
    dim = scenario.dimension()
    start = _as_bits(identity_rep(scenario).as_int_array())
    if not symmetry_reduce:
        found = _closure(start, _move_masks(scenario, all_pairs=False))
        vecs = [_from_bits(x, dim) for x in found]
        reps = [EffectRep(scenario, v.tolist()) for v in vecs]
        wiring = [_classify_identity(scenario, v, base_parties) for v in vecs]
        return identity_classes(IdentitySet(scenario, reps, [True] * len(reps), wiring))

    index = OrbitIndex(coordinate_generator_perms(scenario))
    as_int: dict[int, int] = {}

    def canon(x: int) -> int:
        cid = int(index.classify(_from_bits(x, dim)[None, :])[0])
        if cid not in as_int:
            bits = np.unpackbits(np.frombuffer(index.canonical[cid], dtype=np.uint8))[:dim]
            as_int[cid] = _as_bits(bits)
        return as_int[cid]

    found = _closure(start, _move_masks(scenario, all_pairs=True), canon)
    found.sort(key=lambda x: np.packbits(_from_bits(x, dim)).tobytes())
    vecs = [_from_bits(x, dim) for x in found]
    reps = [EffectRep(scenario, v.tolist()) for v in vecs]
    wiring = [_classify_identity(scenario, v, base_parties) for v in vecs]
    orbits = [index.sizes[int(index.classify(v[None, :])[0])] for v in vecs]
    return IdentitySet(scenario, reps, [True] * len(reps), wiring, list(range(len(reps))), orbits, True)


def brute_force_identity_reps_01(scenario: Scenario) -> set[bytes]:
    """Every {0,1} vector whose fingerprint is all ones (exhaustive; tiny scenarios only)."""
    dim = scenario.dimension()
    if dim > 20:
        raise DomainError("brute force limited to 2^20 vectors")
    D = det_matrix(scenario).astype(np.int64)
    out = set()
    n_out = scenario.outputs ** scenario.parties
    for combo in itertools.combinations(range(dim), n_out):
        v = np.zeros(dim, dtype=np.int64)
        v[list(combo)] = 1
        if (D @ v == 1).all():
            out.add(v.astype(np.uint8).tobytes())
    # vectors with a different number of ones cannot sum to 1 at setting 0...0
    # on every deterministic state, but check the claim on the smallest case
    if dim <= 16:
        for x in range(1 << dim):
            v = (x >> np.arange(dim)) & 1
            if v.sum() != n_out and (D @ v == 1).all():
                out.add(v.astype(np.uint8).tobytes())
    return out


# ----------------------------------------------------------------- catalog


@dataclass
class CatalogEntry:
    rep: EffectRep
    fingerprint: tuple
    canonical: tuple | None
    wiring: bool | None
    deterministic: bool
    class_id: int
    orbit: int


@dataclass
class Catalog:
    """Extremal effects as integer representation rows over per-row denominators."""

    scenario: Scenario
    reps: np.ndarray  # (n, dim) integer numerators
    dens: np.ndarray  # (n,) positive denominators
    wiring: np.ndarray  # (n,) bool
    deterministic: np.ndarray  # (n,) bool
    class_ids: np.ndarray  # (n,) int, -1 if unknown
    orbits: np.ndarray  # (n,) int, 0 if unknown
    symmetry_reduced: bool = False
    canonical: list | None = None  # per-row canonical key (packed bytes) when known

    def __len__(self):
        return self.reps.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            yield self.entry(i)

    def rep(self, i: int) -> EffectRep:
        d = int(self.dens[i])
        return EffectRep(self.scenario, [Fraction(int(v), d) for v in self.reps[i]])

    def entry(self, i: int) -> CatalogEntry:
        fp_row = self.fingerprints()[i]
        d = int(self.dens[i])
        fp = tuple(Fraction(int(v), d) for v in fp_row)
        canon = None
        if self.canonical is not None and self.canonical[i] is not None:
            canon = _unpack_canonical(self.canonical[i], self.scenario)
        return CatalogEntry(
            self.rep(i), fp, canon, bool(self.wiring[i]), bool(self.deterministic[i]),
            int(self.class_ids[i]), int(self.orbits[i]),
        )

    def fingerprints(self) -> np.ndarray:
        """Integer fingerprint numerators (row i over ``dens[i]``)."""
        if getattr(self, "_fp_cache", None) is None or self._fp_cache.shape[0] != len(self):
            D = det_matrix(self.scenario).astype(np.int64)
            self._fp_cache = self.reps.astype(np.int64) @ D.T
        return self._fp_cache

    def is_01(self) -> bool:
        return bool((self.dens == 1).all()) and bool(np.isin(self.fingerprints(), (0, 1)).all())

    def fingerprint_keys(self) -> list[bytes]:
        return _fp_keys(self.fingerprints(), self.dens)

    def index(self) -> dict[bytes, int]:
        return {k: i for i, k in enumerate(self.fingerprint_keys())}

    def total(self) -> int:
        return int(self.orbits.sum()) if self.symmetry_reduced else len(self)

    def wiring_total(self) -> int:
        if self.symmetry_reduced:
            return int(self.orbits[self.wiring].sum())
        return int(self.wiring.sum())

    def n_classes(self) -> int:
        return len(set(self.class_ids.tolist())) if (self.class_ids >= 0).all() else -1

    def subset(self, rows) -> "Catalog":
        rows = np.asarray(rows, dtype=np.int64)
        return Catalog(
            self.scenario, self.reps[rows], self.dens[rows], self.wiring[rows], self.deterministic[rows],
            self.class_ids[rows], self.orbits[rows], self.symmetry_reduced,
            [self.canonical[i] for i in rows] if self.canonical is not None else None,
        )

    def class_representatives(self) -> "Catalog":
        """First row of every class, as a symmetry-reduced catalog."""
        if self.symmetry_reduced:
            return self
        seen = {}
        for i, c in enumerate(self.class_ids.tolist()):
            seen.setdefault(c, i)
        sub = self.subset(sorted(seen.values(), key=lambda i: self.class_ids[i]))
        sub.symmetry_reduced = True
        return sub

    def expanded(self) -> "Catalog":
        """Full catalog from a symmetry-reduced one (every relabelling of every class)."""
        if not self.symmetry_reduced:
            return self
        return expand_orbits(self)

    def effects(self) -> list[EffectRep]:
        return [self.rep(i) for i in range(len(self))]


def _fp_keys(F: np.ndarray, dens: np.ndarray) -> list[bytes]:
    if (dens == 1).all() and F.min(initial=0) >= 0 and F.max(initial=0) <= 1:
        return _keys(F)
    # rational fingerprints: normalise by gcd with the row denominator
    out = []
    for row, d in zip(F, dens):
        g = math.gcd(int(d), *map(int, row))
        out.append(b"R" + np.array([int(d) // g] + [int(v) // g for v in row], dtype=np.int64).tobytes())
    return out


def _unpack_canonical(key: bytes, scenario: Scenario) -> tuple:
    n = scenario.det_state_count()
    if key[:1] == b"R":
        arr = np.frombuffer(key[1:], dtype=np.int64)
        d = int(arr[0])
        return tuple(Fraction(int(v), d) for v in arr[1:])
    bits = np.unpackbits(np.frombuffer(key, dtype=np.uint8))[:n]
    return tuple(Fraction(int(b)) for b in bits)


# ----------------------------------------------------------- class machinery


def orbit_components(scenario: Scenario, F: np.ndarray) -> tuple[np.ndarray, int]:
    """Connected components of the rows of fingerprint matrix F under relabelling generators.

    F must be closed under the group (a complete catalog); then components are
    exactly the relabelling orbits.
    """
    keys = _keys(F)
    index = {k: i for i, k in enumerate(keys)}
    n = F.shape[0]
    src, dst = [], []
    for g in generators(scenario):
        pi = det_permutation(g, scenario)
        G = F[:, pi]
        for i, k in enumerate(_keys(G)):
            j = index.get(k)
            if j is None:
                raise DomainError("catalog is not closed under relabelling")
            if j != i:
                src.append(i)
                dst.append(j)
    graph = coo_matrix((np.ones(len(src)), (src, dst)), shape=(n, n))
    ncomp, labels = connected_components(graph, directed=False)
    return labels, ncomp


def _lexmin_words(W: np.ndarray) -> np.ndarray:
    """Lexicographically least row per batch: W shape (B, G, L) -> (B, L)."""
    B, G, L = W.shape
    alive = np.ones((B, G), dtype=bool)
    out = np.empty((B, L), dtype=W.dtype)
    big = np.iinfo(W.dtype).max
    for c in range(L):
        col = np.where(alive, W[:, :, c], big)
        m = col.min(axis=1)
        out[:, c] = m
        alive &= col == m[:, None]
    return out


def canonical_keys_01(scenario: Scenario, F: np.ndarray, batch: int = 256) -> list[bytes]:
    """Canonical (lex-least over the group) packed fingerprints of {0,1} rows of F."""
    n_det = F.shape[1]
    group = symmetry_group(scenario)
    best = None
    F = F.astype(np.uint8)
    for _, Pi in group.det_tables(chunk=4096):
        for s in range(0, F.shape[0], batch):
            blk = F[s:s + batch]
            M = blk[:, Pi]  # (b, g, n_det)
            P = np.packbits(M, axis=2)
            pad = (-P.shape[2]) % 8
            if pad:
                P = np.concatenate([P, np.zeros(P.shape[:2] + (pad,), dtype=np.uint8)], axis=2)
            W = P.view(">u8").astype(np.uint64)
            m = _lexmin_words(W)
            if best is None:
                best = np.empty((F.shape[0], m.shape[1]), dtype=np.uint64)
                best[:] = np.iinfo(np.uint64).max
            cur = best[s:s + batch]
            # keep lexicographically smaller of cur and m, row by row
            stacked = np.stack([cur, m], axis=1)
            best[s:s + batch] = _lexmin_words(stacked)
    nbytes = (n_det + 7) // 8
    return [row.astype(">u8").tobytes()[:nbytes] for row in best]


def _orbit_sizes_01(scenario: Scenario, F: np.ndarray) -> list[int]:
    group = symmetry_group(scenario)
    sizes = []
    for row in F.astype(np.uint8):
        seen = set()
        for _, Pi in group.det_tables(chunk=8192):
            seen.update(_keys(row[Pi]))
        sizes.append(len(seen))
    return sizes


def assign_classes(cat: Catalog) -> Catalog:
    """Fill class ids, orbit sizes and canonical keys of a complete {0,1} catalog."""
    F = cat.fingerprints()
    labels, ncomp = orbit_components(cat.scenario, F)
    keys = _keys(F)
    canon_of = {}
    for i, lab in enumerate(labels):
        if lab not in canon_of or keys[i] < canon_of[lab]:
            canon_of[lab] = keys[i]
    order = sorted(canon_of, key=lambda lab: canon_of[lab])
    cid = {lab: c for c, lab in enumerate(order)}
    sizes = np.bincount(labels, minlength=ncomp)
    cat.class_ids = np.array([cid[lab] for lab in labels], dtype=np.int64)
    cat.orbits = sizes[labels].astype(np.int64)
    cat.canonical = [canon_of[lab] for lab in labels]
    for lab in range(ncomp):
        flags = cat.wiring[labels == lab]
        if flags.any() != flags.all():
            raise AssertionError("wiring flag differs within a relabelling class")
    return cat


# ------------------------------------------------------------ enumeration


def _deletions(scenario, u_vec: np.ndarray, u_is_wiring: bool, base_parties: int):
    """Fingerprint keys, subset masks and wiring flags for every deletion of one identity rep."""
    D = det_matrix(scenario)
    atoms = np.nonzero(u_vec)[0]
    S = _subset_masks(len(atoms))
    Af = D[:, atoms].T.astype(np.int64)  # atom fingerprints
    F = S.astype(np.int64) @ Af
    if F.max() > 1:
        raise AssertionError("deletion of an identity representation not {0,1} on deterministic states")
    if u_is_wiring:
        wiring = np.ones(S.shape[0], dtype=bool)
    else:
        A, X = event_table(scenario)
        Aa, Xa = A[atoms], X[atoms]
        wiring = np.array(
            [_is_wiring(Aa[m.astype(bool)], Xa[m.astype(bool)], scenario.outputs, base_parties) for m in S],
            dtype=bool,
        )
    return atoms, S, F, wiring


def enumerate_effects_01(
    scenario: Scenario,
    symmetry_reduce: bool = False,
    base_parties: int = DEFAULT_BASE_PARTIES,
    identities: IdentitySet | None = None,
    progress: Callable[[str], None] | None = None,
    strategy: str = "orbit",
) -> Catalog:
    """All extremal {0,1}-valued effects obtained by deleting unit entries of identity reps.

    Effects are deduplicated by fingerprint; an effect is flagged as a wiring
    as soon as any of its generated representations is a wiring representation,
    and that representation is kept.

    With ``symmetry_reduce`` the ``strategy`` picks how candidates are
    canonicalised: ``"orbit"`` explores and remembers whole orbits (fast, but
    memory grows with the full effect count), ``"scan"`` takes the least
    fingerprint over every group element and keeps only class representatives.
    """
    if strategy not in ("orbit", "scan"):
        raise DomainError(f"unknown strategy {strategy!r}")
    if symmetry_reduce and strategy == "scan":
        return _effects_by_scan(scenario, base_parties, identities, progress)
    if identities is None:
        identities = enumerate_identity_reps_01(scenario, symmetry_reduce, base_parties)
    dim = scenario.dimension()
    index = OrbitIndex(det_generator_perms(scenario)) if symmetry_reduce else None
    found: dict = {}  # fingerprint key (or class id) -> [rep vector, wiring]
    for n, (u, uw) in enumerate(zip(identities.reps, identities.is_wiring_rep)):
        u_vec = u.as_int_array()
        atoms, S, F, wiring = _deletions(scenario, u_vec, uw, base_parties)
        labels = index.classify(F) if index is not None else _keys(F)
        for m, key, w in zip(S, labels, wiring):
            key = int(key) if index is not None else key
            slot = found.get(key)
            if slot is None or (w and not slot[1]):
                v = np.zeros(dim, dtype=np.int8)
                v[atoms[m.astype(bool)]] = 1
                found[key] = [v, bool(w)]
        if progress and (n + 1) % 100 == 0:
            progress(f"identity reps {n + 1}/{len(identities)}: {len(found)} effects")

    if index is None:
        keys = sorted(found)
        reps = np.array([found[k][0] for k in keys], dtype=np.int64).reshape(len(keys), dim)
        n = len(keys)
        cat = Catalog(
            scenario, reps, np.ones(n, dtype=np.int64), np.array([found[k][1] for k in keys], dtype=bool),
            np.ones(n, dtype=bool), -np.ones(n, dtype=np.int64), np.zeros(n, dtype=np.int64),
        )
        return assign_classes(cat)

    cids = sorted(found, key=lambda c: index.canonical[c])
    if progress:
        progress(f"{len(cids)} classes")
    n = len(cids)
    reps = np.array([found[c][0] for c in cids], dtype=np.int64).reshape(n, dim)
    return Catalog(
        scenario, reps, np.ones(n, dtype=np.int64), np.array([found[c][1] for c in cids], dtype=bool),
        np.ones(n, dtype=bool), np.arange(n, dtype=np.int64),
        np.array([index.sizes[c] for c in cids], dtype=np.int64), True,
        [index.canonical[c] for c in cids],
    )


def _effects_by_scan(scenario, base_parties, identities, progress) -> Catalog:
    if identities is None:
        identities = enumerate_identity_reps_01(scenario, True, base_parties)
    dim = scenario.dimension()
    classes: dict[bytes, list] = {}  # canonical key -> [rep vector, wiring, fingerprint]
    for n, (u, uw) in enumerate(zip(identities.reps, identities.is_wiring_rep)):
        atoms, S, F, wiring = _deletions(scenario, u.as_int_array(), uw, base_parties)
        for m, ck, w, frow in zip(S, canonical_keys_01(scenario, F), wiring, F):
            slot = classes.get(ck)
            if slot is None or (w and not slot[1]):
                v = np.zeros(dim, dtype=np.int8)
                v[atoms[m.astype(bool)]] = 1
                classes[ck] = [v, bool(w), frow]
        if progress:
            progress(f"identity reps {n + 1}/{len(identities)}: {len(classes)} classes")
    ckeys = sorted(classes)
    n = len(ckeys)
    reps = np.array([classes[c][0] for c in ckeys], dtype=np.int64).reshape(n, dim)
    Fc = np.array([classes[c][2] for c in ckeys], dtype=np.uint8).reshape(n, -1)
    return Catalog(
        scenario, reps, np.ones(n, dtype=np.int64), np.array([classes[c][1] for c in ckeys], dtype=bool),
        np.ones(n, dtype=bool), np.arange(n, dtype=np.int64),
        np.array(_orbit_sizes_01(scenario, Fc), dtype=np.int64), True, ckeys,
    )


def expand_orbits(cat: Catalog) -> Catalog:
    """Every relabelling of every row, deduplicated by fingerprint."""
    sc = cat.scenario
    group = symmetry_group(sc)
    rows, dens, wir, det, cls, orb, can = [], [], [], [], [], [], []
    seen: set[bytes] = set()
    for i in range(len(cat)):
        v = cat.reps[i]
        for _, P in group.coordinate_tables(chunk=8192):
            inv = np.argsort(P, axis=1)
            V = v[inv]
            Fv = V @ det_matrix(sc).T.astype(np.int64)
            for vrow, key in zip(V, _fp_keys(Fv, np.full(V.shape[0], cat.dens[i]))):
                if key in seen:
                    continue
                seen.add(key)
                rows.append(vrow)
                dens.append(cat.dens[i])
                wir.append(cat.wiring[i])
                det.append(cat.deterministic[i])
                cls.append(cat.class_ids[i])
                orb.append(cat.orbits[i])
                can.append(cat.canonical[i] if cat.canonical is not None else None)
    dim = sc.dimension()
    return Catalog(
        sc, np.array(rows, dtype=np.int64).reshape(len(rows), dim), np.array(dens, dtype=np.int64),
        np.array(wir, dtype=bool), np.array(det, dtype=bool), np.array(cls, dtype=np.int64),
        np.array(orb, dtype=np.int64), False, can,
    )


# ----------------------------------------------------------------- summary


def class_summary(catalog: Catalog) -> dict:
    """Per-class listing plus orbit totals split by the wiring flag."""
    reps = catalog.class_representatives()
    if (reps.orbits <= 0).any():
        raise DomainError("catalog has no orbit sizes")
    classes = []
    for i in range(len(reps)):
        classes.append(
            {
                "class": int(reps.class_ids[i]),
                "orbit": int(reps.orbits[i]),
                "wiring": bool(reps.wiring[i]),
                "deterministic": bool(reps.deterministic[i]),
                "terms": reps.rep(i).terms(),
            }
        )
    total = int(reps.orbits.sum())
    wiring = int(reps.orbits[reps.wiring].sum())
    return {
        "scenario": str(catalog.scenario),
        "classes": len(classes),
        "wiring_classes": int(reps.wiring.sum()),
        "total": total,
        "wirings": wiring,
        "nonwirings": total - wiring,
        "per_class": classes,
    }


# -------------------------------------------------------------- sub-effects


@dataclass
class IngestError(DomainError):
    report: list

    def __str__(self):
        return "; ".join(self.report)


def check_identity_rep(rep: _Vector) -> list[str]:
    problems = []
    if not rep.is_nonnegative():
        problems.append("negative entry")
    D = det_matrix(rep.scenario).astype(object)
    nums, den = rep.scaled_ints()
    if not (D @ nums == den).all():
        problems.append("fingerprint is not all ones")
    return problems


def ingest_identity_vertices(source) -> IdentitySet:
    """Read identity-polytope vertices from a catalog file and verify each one."""
    from .io import read_vectors

    scenario, records = read_vectors(source)
    report = []
    reps = []
    for lineno, rec in records:
        v = EffectRep(scenario, rec["v"])
        problems = check_identity_rep(v)
        if problems:
            report.append(f"line {lineno}: " + ", ".join(problems))
        reps.append(v)
    if report:
        raise IngestError(report)
    flags01 = [r.is_01() for r in reps]
    wiring = []
    for r, f in zip(reps, flags01):
        if f:
            A, X = event_table(scenario)
            idx = np.array(r.support(), dtype=np.int64)
            wiring.append(_is_wiring(A[idx], X[idx], scenario.outputs, DEFAULT_BASE_PARTIES))
        else:
            wiring.append(False)
    return IdentitySet(scenario, reps, flags01, wiring)


def stabilizer_coordinate_perms(u_rep: _Vector) -> np.ndarray:
    """Coordinate permutations of the relabellings fixing the vector ``u_rep`` itself."""
    sc = u_rep.scenario
    nums, den = u_rep.scaled_ints()
    v = np.array([int(x) for x in nums], dtype=object)
    keep = []
    for _, P in symmetry_group(sc).coordinate_tables(chunk=8192):
        inv = np.argsort(P, axis=1)
        same = (v[inv] == v[None, :]).all(axis=1)
        keep.extend(P[same])
    return np.array(keep, dtype=np.int64)


@dataclass
class SubEffect:
    rep: EffectRep
    kept: tuple  # coordinates of u_rep that were kept
    deterministic: bool
    status: str = "extremal-candidate"


def sub_effects(
    u_rep: _Vector,
    known_extremals: Catalog,
    sizes: Iterable[int] | None = None,
    masks: Iterable[Sequence[int]] | None = None,
    use_symmetry: bool = True,
    progress: Callable[[str], None] | None = None,
) -> list[SubEffect]:
    """Zeroings of ``u_rep`` that are not convex combinations of known effects.

    Every zeroing of a nonnegative identity representation is a valid effect.
    Candidates are taken one per orbit of the stabiliser of ``u_rep`` (and of
    complementation ``e -> u - e``), dropped if they duplicate or rescale a
    known effect, and otherwise kept unless an exact LP places them in the
    convex hull of the known effects plus the candidates already accepted.
    ``sizes`` restricts the number of kept entries; ``masks`` gives explicit
    sets of kept coordinates instead of the full sweep.
    """
    sc = u_rep.scenario
    problems = check_identity_rep(u_rep)
    if problems:
        raise DomainError("not a nonnegative identity representation: " + ", ".join(problems))
    if known_extremals.symmetry_reduced:
        known_extremals = known_extremals.expanded()
    nums, den = u_rep.scaled_ints()
    u_int = np.array([int(x) for x in nums], dtype=np.int64)
    nz = np.nonzero(u_int)[0]
    k = nz.size
    D = det_matrix(sc).astype(np.int64)
    basis = det_basis(sc)

    known_F = known_extremals.fingerprints()
    known_dens = known_extremals.dens.astype(np.int64)
    # everything over the common denominator `den`; known rows rescaled
    lcm_known = int(np.lcm.reduce(known_dens)) if known_dens.size else 1
    common = math.lcm(den, lcm_known)
    KF = known_F * (common // known_dens)[:, None]
    known_keys = set(_fp_keys(known_F, known_dens))
    # primitive directions of known fingerprints, for the rescaling check
    def direction(row):
        g = math.gcd(*map(int, row))
        return tuple(int(x) // g for x in row) if g else None

    known_dirs = {direction(r) for r in known_F}

    stab = stabilizer_coordinate_perms(u_rep) if use_symmetry else None
    if stab is not None:
        pos = {int(c): i for i, c in enumerate(nz)}
        # action of each stabiliser element on positions of the nonzero entries
        stab_pos = np.array([[pos[int(P[c])] for c in nz] for P in stab], dtype=np.int64)

    def canonical_mask(bits: np.ndarray) -> bytes:
        if stab is None:
            forms = [bits]
        else:
            forms = []
            for sp in stab_pos:
                b = np.zeros(k, dtype=np.uint8)
                b[sp[bits.astype(bool)]] = 1
                forms.append(b)
        forms = forms + [1 - f for f in forms]
        return min(np.packbits(f).tobytes() + bytes([0]) for f in forms)

    if masks is not None:
        candidates = []
        for kept in masks:
            bits = np.isin(nz, np.asarray(kept)).astype(np.uint8)
            candidates.append(bits)
    else:
        size_set = set(sizes) if sizes is not None else set(range(1, k))
        candidates = (
            np.array([(x >> j) & 1 for j in range(k)], dtype=np.uint8)
            for x in range(1, (1 << k) - 1)
            if bin(x).count("1") in size_set
        )

    seen_masks: set[bytes] = set()
    seen_fps: set[bytes] = set()
    accepted: list[SubEffect] = []
    acc_rows: list[np.ndarray] = []
    tested = 0
    for bits in candidates:
        if masks is None:
            cm = canonical_mask(bits)
            if cm in seen_masks:
                continue
            seen_masks.add(cm)
        v = np.zeros_like(u_int)
        kept = nz[bits.astype(bool)]
        v[kept] = u_int[kept]
        fp = D @ v  # over den
        key = _fp_keys(fp[None, :], np.array([den]))[0]
        if key in seen_fps or key in known_keys:
            continue
        seen_fps.add(key)
        if direction(fp) in known_dirs:
            continue  # proportional to a known extremal effect
        target = fp * (common // den)
        pool = np.vstack([KF] + acc_rows) if acc_rows else KF
        keep = support_filter(target, pool)
        tested += 1
        inside = keep.size > 0 and hull_lp_from_fingerprints(
            [Fraction(int(target[i]), common) for i in basis], pool[keep][:, basis], common
        )
        if not inside:
            rep = EffectRep(sc, [Fraction(int(x), den) for x in v])
            det = bool(np.isin(fp, (0, den)).all())
            accepted.append(SubEffect(rep, tuple(int(c) for c in kept), det))
            acc_rows.append(target[None, :])
        if progress and tested % 200 == 0:
            progress(f"sub-effects: {tested} LPs, {len(accepted)} accepted")
    return accepted
