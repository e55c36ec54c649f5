"""Published example vectors, validated when loaded.

Printed coordinate vectors live in ``data/discrimination.txt``; examples
given as sums of conditional probabilities are kept here as term strings.
Every loader checks what it returns (state validity, effect validity,
identity fingerprints) so a transcription error fails loudly.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from importlib import resources

from .core import (
    DomainError,
    EffectRep,
    Scenario,
    StateRep,
    all_ones,
    fingerprint,
    tensor_compose,
    vector_from_terms,
)
from .io import read_vectors
from .lp import is_valid_effect

TRIPARTITE = Scenario(3, 2, 2)
SINGLE = Scenario(1, 2, 2)

IDENTITY_TERMS = {
    "u1": (
        Fraction(1, 3),
        "P(000|101) + 2P(000|110) + P(001|010) + P(001|011) + P(001|100) + P(010|010) + P(010|011)"
        " + P(010|101) + P(011|100) + 2P(011|111) + P(100|100) + 2P(100|111) + P(101|010) + P(101|011)"
        " + P(101|101) + P(110|010) + P(110|011) + P(110|100) + P(111|101) + 2P(111|110)",
    ),
    "u2": (
        Fraction(1, 2),
        "P(000|011) + P(000|101) + P(001|011) + P(001|101) + P(010|101) + P(010|110) + P(011|010)"
        " + P(011|101) + P(100|011) + P(100|100) + P(101|011) + P(101|110) + P(110|100) + P(110|111)"
        " + P(111|010) + P(111|111)",
    ),
}

FRACTIONAL_EFFECT_TERMS = {
    "e4": (Fraction(1, 3), "P(001|010)+P(001|100)+P(010|011)+P(101|010)+P(111|101)+2P(111|110)"),
    "e5": (Fraction(1, 2), "P(000|011)+P(001|011)+P(010|110)+P(011|010)+P(100|100)+P(111|010)"),
}

NONWIRING_TERMS = (
    "P(000|100)+P(001|010)+P(110|001)",
    "P(000|100)+P(001|010)+P(110|001)+P(010|000)",
    "P(000|100)+P(001|010)+P(110|001)+P(010|000)+P(101|000)",
)

# single-system states in the (P(0|0), P(1|0) | P(0|1), P(1|1)) layout
LOCAL_STATES = {1: (1, 0, 1, 0), 2: (1, 0, 0, 1), 3: (0, 1, 1, 0), 4: (0, 1, 0, 1)}
NLWE_PRODUCTS = ((3, 4, 2), (1, 4, 2), (4, 2, 3), (4, 2, 1), (1, 1, 3), (1, 3, 1), (3, 1, 4), (3, 1, 2))
NLWE_MEASUREMENT = (
    "P(110|000)", "P(011|001)", "P(111|010)", "P(100|100)",
    "P(001|000)", "P(010|001)", "P(101|010)", "P(000|100)",
)
NLWE_BEST_WIRING = (
    "P(110|000)", "P(010|000)", "P(111|010)", "P(100|100)",
    "P(001|000)", "P(011|000)", "P(101|010)", "P(000|100)",
)

PROTOCOL_TERMS = {
    "e0": "P(000|000)+P(011|000)+P(101|000)+P(110|000)",
    "e0c": "P(001|000)+P(010|000)+P(100|000)+P(111|000)",
    "e1": "P(111|011)+P(100|101)+P(001|110)+P(010|111)",
    "e1c": "P(011|011)+P(110|101)+P(000|110)+P(101|111)",
    "f0": "P(011|011)+P(110|101)+P(000|110)+P(101|111)",
    "f0c": "P(111|011)+P(100|101)+P(001|110)+P(010|111)",
    "f1": "P(101|000)+P(000|001)+P(110|010)+P(011|100)",
    "f1c": "P(010|000)+P(001|001)+P(100|010)+P(111|100)",
}


def _check_effect(name: str, e: EffectRep) -> EffectRep:
    if not is_valid_effect(e.scenario, e):
        raise DomainError(f"fixture {name} is not a valid effect")
    return e


def _check_state(name: str, s: StateRep) -> StateRep:
    errors = s.validity_errors()
    if errors:
        raise DomainError(f"fixture {name} is not a valid state: {'; '.join(errors)}")
    return s


@lru_cache(maxsize=None)
def printed_vectors() -> dict:
    """The discrimination example vectors by name (``s1``, ``s2``, ``t1``, ``t2``, ``e1``, ``e1_wiring``, ``f1``)."""
    with resources.files("boxlab").joinpath("data/discrimination.txt").open() as fh:
        sc, records = read_vectors(fh)
    out = {}
    for _, rec in records:
        name = rec["name"]
        if rec.get("kind") == "state":
            out[name] = _check_state(name, StateRep(sc, rec["v"]))
        else:
            out[name] = _check_effect(name, EffectRep(sc, rec["v"]))
    return out


@lru_cache(maxsize=None)
def identity_examples() -> dict:
    """Two fractional identity representations, ``u1`` and ``u2``."""
    out = {}
    for name, (scale, terms) in IDENTITY_TERMS.items():
        u = vector_from_terms(TRIPARTITE, terms, scale=scale)
        if not u.is_nonnegative() or fingerprint(u) != all_ones(TRIPARTITE):
            raise DomainError(f"fixture {name} is not an identity representation")
        out[name] = u
    return out


@lru_cache(maxsize=None)
def fractional_effects() -> dict:
    return {
        name: _check_effect(name, vector_from_terms(TRIPARTITE, terms, scale=scale))
        for name, (scale, terms) in FRACTIONAL_EFFECT_TERMS.items()
    }


@lru_cache(maxsize=None)
def nonwiring_representatives() -> tuple:
    return tuple(
        _check_effect(f"nonwiring {i}", vector_from_terms(TRIPARTITE, t)) for i, t in enumerate(NONWIRING_TERMS, 1)
    )


def local_state(k: int) -> StateRep:
    return StateRep(SINGLE, LOCAL_STATES[k])


@lru_cache(maxsize=None)
def nlwe_states() -> tuple:
    states = []
    for i, prod in enumerate(NLWE_PRODUCTS, 1):
        factors = [(local_state(k), (p,)) for p, k in enumerate(prod)]
        s = tensor_compose(factors, (0, 1, 2), cls=StateRep)
        states.append(_check_state(f"nlwe state {i}", s))
    return tuple(states)


def _measurement(terms) -> tuple:
    effects = tuple(vector_from_terms(TRIPARTITE, t) for t in terms)
    total = effects[0]
    for e in effects[1:]:
        total = total + e
    if fingerprint(total) != all_ones(TRIPARTITE):
        raise DomainError("fixture measurement does not sum to the identity")
    return effects


@lru_cache(maxsize=None)
def nlwe_measurement() -> tuple:
    return _measurement(NLWE_MEASUREMENT)


@lru_cache(maxsize=None)
def nlwe_best_wiring() -> tuple:
    return _measurement(NLWE_BEST_WIRING)


@lru_cache(maxsize=None)
def protocol_effects() -> dict:
    """The three-copy distillation effects and their printed complements."""
    eff = {k: _check_effect(k, vector_from_terms(TRIPARTITE, t)) for k, t in PROTOCOL_TERMS.items()}
    for k in ("e0", "e1", "f0", "f1"):
        if fingerprint(eff[k] + eff[k + "c"]) != all_ones(TRIPARTITE):
            raise DomainError(f"fixture complement of {k} is wrong")
    return eff
