"""Recursive wiring-representation classifier and deterministic wiring measurements."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Hashable, Iterator, Sequence

import numpy as np

from .core import (
    DomainError,
    EffectRep,
    Scenario,
    _Vector,
    event_table,
    fingerprint,
    all_ones,
    flat_index_array,
)

DEFAULT_BASE_PARTIES = 2


@dataclass(frozen=True)
class Measurement:
    scenario: Scenario
    effects: tuple
    labels: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "effects", tuple(self.effects))
        labels = tuple(self.labels) if self.labels else tuple(range(len(self.effects)))
        if len(labels) != len(self.effects):
            raise DomainError("one label per effect required")
        object.__setattr__(self, "labels", labels)

    def total(self) -> EffectRep:
        out = EffectRep(self.scenario, [0] * self.scenario.dimension())
        for e in self.effects:
            out = out + e
        return out

    def sums_to_identity(self) -> bool:
        return fingerprint(self.total()) == all_ones(self.scenario)


@dataclass(frozen=True)
class WiringMeasurement:
    """A wiring identity representation whose unit entries (atoms) carry labels."""

    base: EffectRep
    assignment: tuple  # label per atom, atoms in ascending coordinate order

    def atoms(self) -> list[int]:
        return self.base.support()

    def measurement(self, labels: Sequence[Hashable] | None = None) -> Measurement:
        sc = self.base.scenario
        atoms = self.atoms()
        if labels is None:
            labels = sorted(set(self.assignment))
        effects = []
        for lab in labels:
            coords = [0] * sc.dimension()
            for k, a in zip(atoms, self.assignment):
                if a == lab:
                    coords[k] = 1
            effects.append(EffectRep(sc, coords))
        return Measurement(sc, tuple(effects), tuple(labels))


def _support_arrays(e: _Vector) -> tuple[np.ndarray, np.ndarray]:
    A, X = event_table(e.scenario)
    idx = np.array(e.support(), dtype=np.int64)
    return A[idx], X[idx]


def _is_wiring(A: np.ndarray, X: np.ndarray, n_out: int, base: int) -> bool:
    n = A.shape[1]
    if n <= base or A.shape[0] == 0:
        return True
    for p in range(n):
        xs = X[:, p]
        # a swap of party 1 with p and an input relabelling sending xs[0] to 0
        # clears every x_1 != 0 entry exactly when p's setting is constant
        if not (xs == xs[0]).all():
            continue
        keep = [q for q in range(n) if q != p]
        ok = True
        for a in range(n_out):
            sel = A[:, p] == a
            if not _is_wiring(A[sel][:, keep], X[sel][:, keep], n_out, base):
                ok = False
                break
        if ok:
            return True
    return False


def is_wiring_representation(e_rep: _Vector, base_parties: int = DEFAULT_BASE_PARTIES) -> bool:
    """Recursive test: some party measured first with a fixed input, each branch a wiring.

    ``base_parties=2`` stops the recursion at two parties (every bipartite
    {0,1} effect is a wiring); ``base_parties=1`` runs the recursion all the
    way down.
    """
    if not e_rep.is_01():
        raise DomainError("wiring classification needs a {0,1}-valued representation")
    A, X = _support_arrays(e_rep)
    return _is_wiring(A, X, e_rep.scenario.outputs, base_parties)


def is_wiring_support(scenario: Scenario, support: Sequence[int], base_parties: int = DEFAULT_BASE_PARTIES) -> bool:
    A, X = event_table(scenario)
    idx = np.asarray(support, dtype=np.int64)
    return _is_wiring(A[idx], X[idx], scenario.outputs, base_parties)


def condition_effect(e_rep: _Vector, party: int, outcome: int) -> EffectRep:
    """The (N-1)-party effect seen once ``party`` was measured at setting 0 with ``outcome``."""
    sc = e_rep.scenario
    if not 0 <= party < sc.parties or not 0 <= outcome < sc.outputs:
        raise DomainError("party or outcome out of range")
    if sc.parties < 2:
        raise DomainError("need at least two parties to condition")
    A, X = event_table(sc)
    coords = np.array(e_rep.coords, dtype=object)
    if any(coords[(X[:, party] != 0)]):
        raise DomainError(f"nonzero entry at a setting of party {party} other than 0")
    sub = sc.reduced()
    keep = [q for q in range(sc.parties) if q != party]
    sel = np.nonzero((X[:, party] == 0) & (A[:, party] == outcome))[0]
    idx = flat_index_array(sub, A[sel][:, keep], X[sel][:, keep])
    out = [0] * sub.dimension()
    for k, j in zip(sel, idx):
        out[j] = coords[k]
    return EffectRep(sub, out)


def wiring_bases(scenario: Scenario, base_parties: int = DEFAULT_BASE_PARTIES) -> list[EffectRep]:
    """All {0,1} identity representations that are wiring representations."""
    from .enumeration import enumerate_identity_reps_01

    ids = enumerate_identity_reps_01(scenario)
    return [u for u in ids.reps if is_wiring_representation(u, base_parties)]


def enumerate_wiring_measurements(
    scenario: Scenario, outcomes: int, bases: Sequence[EffectRep] | None = None
) -> Iterator[WiringMeasurement]:
    """Every wiring base with every assignment of its atoms to ``outcomes`` labels.

    Unused labels are allowed (they correspond to empty effects).
    """
    if outcomes < 1:
        raise DomainError("need at least one outcome")
    if bases is None:
        bases = wiring_bases(scenario)
    for u in bases:
        n_atoms = len(u.support())
        for assignment in itertools.product(range(outcomes), repeat=n_atoms):
            yield WiringMeasurement(u, assignment)


def distinct_measurements(ms) -> set:
    """Deduplicate wiring measurements by the multiset of their effect fingerprints."""
    out = set()
    for wm in ms:
        m = wm.measurement()
        out.add(tuple(sorted(fingerprint(e) for e in m.effects)))
    return out
