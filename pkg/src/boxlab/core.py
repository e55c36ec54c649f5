"""Scenario geometry for boxworld: indexing, states, effects and relabellings.

Coordinates follow the usual ordering: for each joint setting ``x`` (counted
in base ``n_I``, party 1 most significant) the joint outcomes ``a`` run in base
``n_O`` (party 1 most significant).  Parties, settings and outcomes are all
0-based.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

Rational = Fraction
Fingerprint = tuple  # tuple[Fraction, ...], ordered like local_deterministic_states()


class DomainError(ValueError):
    """Raised when arguments fall outside an operation's domain."""


@dataclass(frozen=True)
class Scenario:
    parties: int
    inputs: int
    outputs: int

    def __post_init__(self):
        if min(self.parties, self.inputs, self.outputs) < 1:
            raise DomainError(f"scenario sizes must be positive: {self}")

    def dimension(self) -> int:
        return (self.inputs * self.outputs) ** self.parties

    def det_state_count(self) -> int:
        return self.outputs ** (self.inputs * self.parties)

    def symmetry_group_order(self) -> int:
        per_party = math.factorial(self.outputs) ** self.inputs * math.factorial(self.inputs)
        return per_party ** self.parties * math.factorial(self.parties)

    def generator_count(self) -> int:
        n, i, o = self.parties, self.inputs, self.outputs
        return n * (o * i) ** (n - 1) * (i - 1)

    def reduced(self, k: int = 1) -> "Scenario":
        return Scenario(self.parties - k, self.inputs, self.outputs)

    def __str__(self):
        return f"({self.parties},{self.inputs},{self.outputs})"


def _frac_tuple(values: Iterable) -> tuple:
    return tuple(Fraction(v) for v in values)


@dataclass(frozen=True)
class _Vector:
    scenario: Scenario
    coords: tuple

    def __post_init__(self):
        coords = _frac_tuple(self.coords)
        if len(coords) != self.scenario.dimension():
            raise DomainError(
                f"expected {self.scenario.dimension()} coordinates for {self.scenario}, got {len(coords)}"
            )
        object.__setattr__(self, "coords", coords)

    def __len__(self):
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __getitem__(self, k):
        return self.coords[k]

    def _check(self, other):
        if self.scenario != other.scenario:
            raise DomainError(f"scenario mismatch: {self.scenario} vs {other.scenario}")

    def __add__(self, other):
        if isinstance(other, _Vector):
            self._check(other)
            other = other.coords
        return type(self)(self.scenario, [a + b for a, b in zip(self.coords, other)])

    def __sub__(self, other):
        if isinstance(other, _Vector):
            self._check(other)
            other = other.coords
        return type(self)(self.scenario, [a - b for a, b in zip(self.coords, other)])

    def __neg__(self):
        return type(self)(self.scenario, [-a for a in self.coords])

    def __mul__(self, c):
        c = Fraction(c)
        return type(self)(self.scenario, [c * a for a in self.coords])

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1 / Fraction(c))

    def is_01(self) -> bool:
        return all(c == 0 or c == 1 for c in self.coords)

    def is_nonnegative(self) -> bool:
        return all(c >= 0 for c in self.coords)

    def support(self) -> list[int]:
        return [k for k, c in enumerate(self.coords) if c != 0]

    def denominator(self) -> int:
        return math.lcm(*(c.denominator for c in self.coords))

    def scaled_ints(self) -> tuple[np.ndarray, int]:
        """Integer numerators over a common denominator, as an object array."""
        d = self.denominator()
        return np.array([int(c * d) for c in self.coords], dtype=object), d

    def as_int_array(self) -> np.ndarray:
        if any(c.denominator != 1 for c in self.coords):
            raise DomainError("vector is not integer valued")
        return np.array([int(c) for c in self.coords], dtype=np.int64)

    def terms(self) -> str:
        """Human-readable ``P(a|x)`` expansion of the nonzero coordinates."""
        out = []
        for k in self.support():
            a, x = inverse_index(self.scenario, k)
            c = self.coords[k]
            coef = "" if c == 1 else f"{c}*"
            out.append(f"{coef}P({''.join(map(str, a))}|{''.join(map(str, x))})")
        return " + ".join(out) if out else "0"


class EffectRep(_Vector):
    """A coordinate representation of an effect (many vectors share an effect)."""


class StateRep(_Vector):
    """A coordinate vector of conditional probabilities P(a|x)."""

    def validity_errors(self) -> list[str]:
        errors = []
        if not self.is_nonnegative():
            errors.append("negative entry")
        sc = self.scenario
        n_out = sc.outputs ** sc.parties
        if sum(self.coords[:n_out]) != 1:
            errors.append("not normalized at input 0...0")
        for r in ns_generators(sc):
            if sum(int(rk) * c for rk, c in zip(r, self.coords) if rk) != 0:
                errors.append("violates a no-signalling condition")
                break
        return errors

    def is_valid(self) -> bool:
        return not self.validity_errors()


# ---------------------------------------------------------------- indexing


def flat_index(scenario: Scenario, outcomes: Sequence[int], settings: Sequence[int]) -> int:
    n, ni, no = scenario.parties, scenario.inputs, scenario.outputs
    if len(outcomes) != n or len(settings) != n:
        raise DomainError(f"need {n} outcomes and settings")
    x_part = 0
    a_part = 0
    for a, x in zip(outcomes, settings):
        if not (0 <= a < no and 0 <= x < ni):
            raise DomainError(f"outcome/setting out of range: a={a}, x={x}")
        x_part = x_part * ni + x
        a_part = a_part * no + a
    return x_part * no**n + a_part


def inverse_index(scenario: Scenario, index: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    n, ni, no = scenario.parties, scenario.inputs, scenario.outputs
    if not 0 <= index < scenario.dimension():
        raise DomainError(f"index {index} out of range for {scenario}")
    x_part, a_part = divmod(index, no**n)
    a = []
    x = []
    for _ in range(n):
        a_part, ai = divmod(a_part, no)
        x_part, xi = divmod(x_part, ni)
        a.append(ai)
        x.append(xi)
    return tuple(reversed(a)), tuple(reversed(x))


@lru_cache(maxsize=None)
def event_table(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``(A, X)`` of shape (dim, N): outcomes and settings of every coordinate."""
    n, ni, no = scenario.parties, scenario.inputs, scenario.outputs
    k = np.arange(scenario.dimension())
    x_part, a_part = np.divmod(k, no**n)
    A = np.empty((k.size, n), dtype=np.int64)
    X = np.empty((k.size, n), dtype=np.int64)
    for p in range(n - 1, -1, -1):
        a_part, A[:, p] = np.divmod(a_part, no)
        x_part, X[:, p] = np.divmod(x_part, ni)
    A.flags.writeable = False
    X.flags.writeable = False
    return A, X


def flat_index_array(scenario: Scenario, A: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Vectorised flat_index over rows of (outcome, setting) arrays."""
    n, ni, no = scenario.parties, scenario.inputs, scenario.outputs
    x_part = np.zeros(A.shape[:-1], dtype=np.int64)
    a_part = np.zeros(A.shape[:-1], dtype=np.int64)
    for p in range(n):
        x_part = x_part * ni + X[..., p]
        a_part = a_part * no + A[..., p]
    return x_part * no**n + a_part


_TERM = re.compile(r"\s*([+-]?)\s*([0-9]+(?:/[0-9]+)?)?\s*\*?\s*P\(\s*([0-9]+)\s*\|\s*([0-9]+)\s*\)\s*")


def vector_from_terms(scenario: Scenario, text: str, scale=1, cls=EffectRep):
    """Build a vector from ``c*P(a1..aN|x1..xN) + ...`` notation (one digit per party)."""
    coords = [Fraction(0)] * scenario.dimension()
    pos = 0
    text = text.strip()
    if text in ("", "0"):
        return cls(scenario, coords)
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m:
            raise DomainError(f"cannot parse term at {text[pos:pos + 20]!r}")
        sign, coef, a, x = m.groups()
        c = Fraction(coef) if coef else Fraction(1)
        if sign == "-":
            c = -c
        k = flat_index(scenario, [int(ch) for ch in a], [int(ch) for ch in x])
        coords[k] += c * Fraction(scale)
        pos = m.end()
    return cls(scenario, coords)


# ------------------------------------------------------- deterministic states


@lru_cache(maxsize=None)
def det_strategies(scenario: Scenario) -> np.ndarray:
    """Array (n_det, N, n_I) of outputs; row i is the strategy of s^{L,i}."""
    n, ni, no = scenario.parties, scenario.inputs, scenario.outputs
    i = np.arange(scenario.det_state_count())
    F = np.empty((i.size, n, ni), dtype=np.int64)
    rest = i
    for p in range(n - 1, -1, -1):
        for x in range(ni - 1, -1, -1):
            rest, F[:, p, x] = np.divmod(rest, no)
    F.flags.writeable = False
    return F


def det_index_array(scenario: Scenario, F: np.ndarray) -> np.ndarray:
    no = scenario.outputs
    flat = F.reshape(F.shape[:-2] + (-1,))
    idx = np.zeros(flat.shape[:-1], dtype=np.int64)
    for c in range(flat.shape[-1]):
        idx = idx * no + flat[..., c]
    return idx


@lru_cache(maxsize=None)
def det_matrix(scenario: Scenario) -> np.ndarray:
    """0/1 matrix (n_det, dim): row i is local deterministic state i."""
    A, X = event_table(scenario)
    F = det_strategies(scenario)
    # F[i, p, X[k, p]] == A[k, p] for all p
    parties = np.arange(scenario.parties)
    hits = F[:, parties[None, :], X] == A[None, :, :]
    D = hits.all(axis=2).astype(np.int8)
    D.flags.writeable = False
    return D


def local_deterministic_states(scenario: Scenario) -> list[StateRep]:
    return [StateRep(scenario, row.tolist()) for row in det_matrix(scenario)]


@lru_cache(maxsize=None)
def det_basis(scenario: Scenario) -> np.ndarray:
    """Indices of a maximal linearly independent set of deterministic states.

    Their span equals the span of all no-signalling states, so equality of
    inner products on these rows decides equality of effects.
    """
    D = det_matrix(scenario)
    chosen: list[int] = []
    # exact elimination over the rationals on the integer rows
    pivots: list[tuple[int, list[Fraction]]] = []
    for i, row in enumerate(D):
        v = [Fraction(int(c)) for c in row]
        for col, prow in pivots:
            if v[col]:
                f = v[col]
                v = [a - f * b for a, b in zip(v, prow)]
        nz = next((c for c, val in enumerate(v) if val), None)
        if nz is None:
            continue
        inv = 1 / v[nz]
        v = [a * inv for a in v]
        pivots.append((nz, v))
        chosen.append(i)
    n, ni, no = scenario.parties, scenario.inputs, scenario.outputs
    assert len(chosen) == (ni * (no - 1) + 1) ** n
    return np.array(chosen, dtype=np.int64)


# ---------------------------------------------------------- no-signalling


@lru_cache(maxsize=None)
def _generator_matrix(scenario: Scenario) -> np.ndarray:
    n, ni, no = scenario.parties, scenario.inputs, scenario.outputs
    dim = scenario.dimension()
    rows = []
    for p in range(n):
        others = [q for q in range(n) if q != p]
        for rest in itertools.product(itertools.product(range(no), range(ni)), repeat=n - 1):
            for xp in range(1, ni):
                r = np.zeros(dim, dtype=np.int64)
                for ap in range(no):
                    a = [0] * n
                    x = [0] * n
                    for q, (aq, xq) in zip(others, rest):
                        a[q], x[q] = aq, xq
                    a[p] = ap
                    x[p] = 0
                    r[flat_index(scenario, a, x)] += 1
                    x[p] = xp
                    r[flat_index(scenario, a, x)] -= 1
                rows.append(r)
    M = np.array(rows, dtype=np.int64).reshape(len(rows), dim)
    M.flags.writeable = False
    return M


def ns_generators(scenario: Scenario) -> list[tuple[int, ...]]:
    """One vector per condition "party p cannot signal to the rest".

    Each says that summing party p's outcome at setting 0 equals summing it at
    setting x_p, for fixed outcomes/settings of everyone else.  For one party
    these are the normalisation equalities between inputs.
    """
    return [tuple(int(c) for c in r) for r in _generator_matrix(scenario)]


def generator_matrix(scenario: Scenario) -> np.ndarray:
    return _generator_matrix(scenario)


# ------------------------------------------------------- special vectors


def identity_rep(scenario: Scenario, settings: Sequence[int] | None = None) -> EffectRep:
    """The {0,1} identity representation that sums all outcomes at one joint setting."""
    n, no = scenario.parties, scenario.outputs
    settings = tuple(settings) if settings is not None else (0,) * n
    coords = [0] * scenario.dimension()
    for a in itertools.product(range(no), repeat=n):
        coords[flat_index(scenario, a, settings)] = 1
    return EffectRep(scenario, coords)


def sbv(scenario: Scenario, index: int) -> EffectRep:
    coords = [0] * scenario.dimension()
    coords[index] = 1
    return EffectRep(scenario, coords)


def zero_effect(scenario: Scenario) -> EffectRep:
    return EffectRep(scenario, [0] * scenario.dimension())


def inner(e: _Vector, s: _Vector) -> Fraction:
    if e.scenario != s.scenario:
        raise DomainError(f"scenario mismatch: {e.scenario} vs {s.scenario}")
    return sum((a * b for a, b in zip(e.coords, s.coords) if a and b), Fraction(0))


def fingerprint_array(scenario: Scenario, v: np.ndarray) -> np.ndarray:
    """Fingerprints of integer vectors (last axis = coordinates)."""
    return v @ det_matrix(scenario).T.astype(v.dtype if v.dtype != bool else np.int64)


def fingerprint(e: _Vector) -> Fingerprint:
    D = det_matrix(e.scenario)
    nums, den = e.scaled_ints()
    vals = D.astype(object) @ nums
    return tuple(Fraction(int(v), den) for v in vals)


def all_ones(scenario: Scenario) -> Fingerprint:
    return (Fraction(1),) * scenario.det_state_count()


def same_effect(e1: _Vector, e2: _Vector) -> bool:
    return fingerprint(e1) == fingerprint(e2)


# ------------------------------------------------------------ relabellings


@dataclass(frozen=True)
class Relabelling:
    """Party permutation plus per-party input and per-(party, input) output permutations.

    Party ``p`` is sent to position ``party_perm[p]``; its setting ``x`` becomes
    ``input_perms[p][x]`` and outcome ``a`` (at setting ``x``) becomes
    ``output_perms[p][x][a]``.
    """

    party_perm: tuple
    input_perms: tuple
    output_perms: tuple

    def __post_init__(self):
        object.__setattr__(self, "party_perm", tuple(self.party_perm))
        object.__setattr__(self, "input_perms", tuple(tuple(t) for t in self.input_perms))
        object.__setattr__(
            self, "output_perms", tuple(tuple(tuple(r) for r in per) for per in self.output_perms)
        )

    @classmethod
    def identity(cls, scenario: Scenario) -> "Relabelling":
        n, ni, no = scenario.parties, scenario.inputs, scenario.outputs
        return cls(
            tuple(range(n)),
            tuple(tuple(range(ni)) for _ in range(n)),
            tuple(tuple(tuple(range(no)) for _ in range(ni)) for _ in range(n)),
        )

    def compatible(self, scenario: Scenario) -> bool:
        n, ni, no = scenario.parties, scenario.inputs, scenario.outputs
        if sorted(self.party_perm) != list(range(n)) or len(self.input_perms) != n:
            return False
        for p in range(n):
            if sorted(self.input_perms[p]) != list(range(ni)) or len(self.output_perms[p]) != ni:
                return False
            if any(sorted(r) != list(range(no)) for r in self.output_perms[p]):
                return False
        return True

    def compose(self, other: "Relabelling") -> "Relabelling":
        """``self ∘ other``: apply ``other`` first."""
        n = len(self.party_perm)
        pp, ip, op = [0] * n, [None] * n, [None] * n
        for p in range(n):
            q = other.party_perm[p]
            pp[p] = self.party_perm[q]
            ip[p] = tuple(self.input_perms[q][other.input_perms[p][x]] for x in range(len(other.input_perms[p])))
            op[p] = tuple(
                tuple(
                    self.output_perms[q][other.input_perms[p][x]][other.output_perms[p][x][a]]
                    for a in range(len(other.output_perms[p][x]))
                )
                for x in range(len(other.input_perms[p]))
            )
        return Relabelling(tuple(pp), tuple(ip), tuple(op))

    def inverse(self) -> "Relabelling":
        n = len(self.party_perm)
        pp, ip, op = [0] * n, [None] * n, [None] * n
        for p in range(n):
            q = self.party_perm[p]
            pp[q] = p
            tau = self.input_perms[p]
            inv_tau = [0] * len(tau)
            for x, y in enumerate(tau):
                inv_tau[y] = x
            ip[q] = tuple(inv_tau)
            rows = [None] * len(tau)
            for x, y in enumerate(tau):
                rho = self.output_perms[p][x]
                inv_rho = [0] * len(rho)
                for a, b in enumerate(rho):
                    inv_rho[b] = a
                rows[y] = tuple(inv_rho)
            op[q] = tuple(rows)
        return Relabelling(tuple(pp), tuple(ip), tuple(op))

    def coordinate_permutation(self, scenario: Scenario) -> np.ndarray:
        """``perm`` with ``(g·v)[perm[k]] = v[k]``."""
        if not self.compatible(scenario):
            raise DomainError(f"relabelling incompatible with {scenario}")
        A, X = event_table(scenario)
        n = scenario.parties
        A2 = np.empty_like(A)
        X2 = np.empty_like(X)
        for p in range(n):
            q = self.party_perm[p]
            tau = np.array(self.input_perms[p])
            rho = np.array(self.output_perms[p])
            X2[:, q] = tau[X[:, p]]
            A2[:, q] = rho[X[:, p], A[:, p]]
        return flat_index_array(scenario, A2, X2)


def apply_relabelling(g: Relabelling, v: _Vector) -> _Vector:
    perm = g.coordinate_permutation(v.scenario)
    out = [None] * len(v.coords)
    for k, c in enumerate(v.coords):
        out[perm[k]] = c
    return type(v)(v.scenario, out)


class SymmetryGroup:
    """All relabellings of a scenario, indexed in mixed radix (party, inputs, outputs).

    Tables are produced in chunks so large groups never need to be held in
    memory at once.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = sc = scenario
        n, ni, no = sc.parties, sc.inputs, sc.outputs
        self.party_perms = list(itertools.permutations(range(n)))
        self.in_perms = list(itertools.permutations(range(ni)))
        self.out_perms = list(itertools.permutations(range(no)))
        self.n_tau = len(self.in_perms) ** n
        self.n_rho = len(self.out_perms) ** (n * ni)
        self.order = len(self.party_perms) * self.n_tau * self.n_rho
        assert self.order == sc.symmetry_group_order()
        out_arr = np.array(self.out_perms, dtype=np.int64).reshape(len(self.out_perms), no)
        self._out_arr = out_arr
        self._out_inv = np.argsort(out_arr, axis=1)
        # rho digits for every rho index: (n_rho, N, n_I)
        r = np.arange(self.n_rho)
        digits = np.empty((self.n_rho, n, ni), dtype=np.int64)
        for p in range(n - 1, -1, -1):
            for x in range(ni - 1, -1, -1):
                r, digits[:, p, x] = np.divmod(r, len(self.out_perms))
        self._rho_digits = digits

    def __len__(self):
        return self.order

    def _split(self, index):
        rest, rho = divmod(index, self.n_rho)
        sigma, tau = divmod(rest, self.n_tau)
        taus = []
        for _ in range(self.scenario.parties):
            tau, t = divmod(tau, len(self.in_perms))
            taus.append(t)
        return sigma, tuple(reversed(taus)), rho

    def element(self, index: int) -> Relabelling:
        sc = self.scenario
        sigma, taus, rho = self._split(index)
        digits = self._rho_digits[rho]
        return Relabelling(
            self.party_perms[sigma],
            tuple(self.in_perms[t] for t in taus),
            tuple(
                tuple(self.out_perms[digits[p, x]] for x in range(sc.inputs)) for p in range(sc.parties)
            ),
        )

    def __iter__(self) -> Iterator[Relabelling]:
        for i in range(self.order):
            yield self.element(i)

    def _sigma_tau_blocks(self):
        n = self.scenario.parties
        for s_idx, sigma in enumerate(self.party_perms):
            for t_idx, taus in enumerate(itertools.product(range(len(self.in_perms)), repeat=n)):
                base = (s_idx * self.n_tau + t_idx) * self.n_rho
                yield base, sigma, [self.in_perms[t] for t in taus]

    def coordinate_tables(self, chunk: int = 1 << 16) -> Iterator[tuple[int, np.ndarray]]:
        """Yield ``(first_index, P)`` with ``P[g, k]`` the coordinate permutation of element g."""
        sc = self.scenario
        A, X = event_table(sc)
        n = sc.parties
        out_arr = self._out_arr
        for base, sigma, taus in self._sigma_tau_blocks():
            for start in range(0, self.n_rho, chunk):
                digits = self._rho_digits[start:start + chunk]
                m = digits.shape[0]
                A2 = np.empty((m,) + A.shape, dtype=np.int64)
                X2 = np.empty((m,) + X.shape, dtype=np.int64)
                for p in range(n):
                    q = sigma[p]
                    tau = np.array(taus[p])
                    X2[:, :, q] = tau[X[:, p]][None, :]
                    # output perm index per (g, k) then permuted outcome
                    pidx = digits[:, p, :][:, X[:, p]]
                    A2[:, :, q] = out_arr[pidx, A[None, :, p]]
                yield base + start, flat_index_array(sc, A2, X2)

    def det_tables(self, chunk: int = 1 << 16) -> Iterator[tuple[int, np.ndarray]]:
        """Yield ``(first_index, Pi)`` with ``fingerprint(g·e) = fingerprint(e)[Pi[g]]``."""
        sc = self.scenario
        F = det_strategies(sc)  # (n_det, N, n_I)
        n, ni = sc.parties, sc.inputs
        out_inv = self._out_inv
        xs = np.arange(ni)
        for base, sigma, taus in self._sigma_tau_blocks():
            for start in range(0, self.n_rho, chunk):
                digits = self._rho_digits[start:start + chunk]
                m = digits.shape[0]
                H = np.empty((m, F.shape[0], n, ni), dtype=np.int64)
                for p in range(n):
                    tau = np.array(taus[p])
                    # h_p(x) = rho_{p,x}^{-1}( f_{sigma(p)}(tau_p(x)) )
                    vals = F[:, sigma[p], tau[xs]]  # (n_det, n_I)
                    pidx = digits[:, p, :]  # (m, n_I)
                    H[:, :, p, :] = out_inv[pidx[:, None, :], vals[None, :, :]]
                yield base + start, det_index_array(sc, H)


@lru_cache(maxsize=8)
def symmetry_group(scenario: Scenario) -> SymmetryGroup:
    return SymmetryGroup(scenario)


def generators(scenario: Scenario) -> list[Relabelling]:
    """A small generating set: adjacent party swaps and adjacent label swaps."""
    n, ni, no = scenario.parties, scenario.inputs, scenario.outputs
    ident = Relabelling.identity(scenario)
    gens = []
    for p in range(n - 1):
        pp = list(range(n))
        pp[p], pp[p + 1] = pp[p + 1], pp[p]
        gens.append(Relabelling(pp, ident.input_perms, ident.output_perms))
    for p in range(n):
        for x in range(ni - 1):
            ip = [list(t) for t in ident.input_perms]
            ip[p][x], ip[p][x + 1] = ip[p][x + 1], ip[p][x]
            gens.append(Relabelling(ident.party_perm, ip, ident.output_perms))
        for x in range(ni):
            for a in range(no - 1):
                op = [[list(r) for r in per] for per in ident.output_perms]
                op[p][x][a], op[p][x][a + 1] = op[p][x][a + 1], op[p][x][a]
                gens.append(Relabelling(ident.party_perm, ident.input_perms, op))
    return gens


def det_permutation(g: Relabelling, scenario: Scenario) -> np.ndarray:
    """``pi`` with ``fingerprint(g·e) = fingerprint(e)[pi]``."""
    perm = g.coordinate_permutation(scenario)
    D = det_matrix(scenario)
    keys = {row.tobytes(): i for i, row in enumerate(D)}
    return np.array([keys[D[i][perm].tobytes()] for i in range(D.shape[0])], dtype=np.int64)


# ----------------------------------------------------------- canonical forms


def _lexmin_rows(M: np.ndarray) -> int:
    cand = np.arange(M.shape[0])
    for c in range(M.shape[1]):
        col = M[cand, c]
        cand = cand[col == col.min()]
        if cand.size == 1:
            break
    return int(cand[0])


def _fingerprint_ints(e: _Vector) -> tuple[np.ndarray, int]:
    fp = fingerprint(e)
    den = math.lcm(*(f.denominator for f in fp))
    vals = [int(f * den) for f in fp]
    dtype = np.int64 if max(map(abs, vals), default=0) < 2**62 else object
    return np.array(vals, dtype=dtype), den


def canonical_fingerprint_array(scenario: Scenario, fp: np.ndarray) -> tuple[np.ndarray, int]:
    """Lexicographically least ``fp[Pi[g]]`` over the group, with the index of g."""
    group = symmetry_group(scenario)
    best = None
    best_g = -1
    for start, Pi in group.det_tables():
        M = fp[Pi]
        i = _lexmin_rows(M)
        row = M[i]
        if best is None or tuple(row) < tuple(best):
            best, best_g = row, start + i
    return best, best_g


def canonical_form(e: _Vector) -> tuple[Fingerprint, Relabelling]:
    """Least fingerprint over the relabelling orbit of ``e`` and a relabelling reaching it."""
    sc = e.scenario
    vals, den = _fingerprint_ints(e)
    best, g_idx = canonical_fingerprint_array(sc, vals)
    return tuple(Fraction(int(v), den) for v in best), symmetry_group(sc).element(g_idx)


def orbit_fingerprints(e: _Vector) -> set[bytes]:
    sc = e.scenario
    vals, _ = _fingerprint_ints(e)
    vals = vals.astype(np.int64)
    seen: set[bytes] = set()
    for _, Pi in symmetry_group(sc).det_tables():
        M = np.ascontiguousarray(vals[Pi])
        seen.update(M.view(np.dtype((np.void, M.dtype.itemsize * M.shape[1]))).ravel().tolist())
    return seen


def orbit_size(e: _Vector) -> int:
    return len(orbit_fingerprints(e))


def canonical_vector(v: np.ndarray, scenario: Scenario) -> tuple[bytes, int]:
    """Canonical raw-coordinate form of a {0,1} vector (not modulo moves).

    Returns the least packed permuted vector over the group and the index of
    the relabelling that produces it.
    """
    group = symmetry_group(scenario)
    best = None
    best_g = -1
    v = np.asarray(v, dtype=np.uint8)
    for start, P in group.coordinate_tables():
        # (g·v)[P[k]] = v[k]  =>  (g·v) = v[argsort(P)]
        inv = np.argsort(P, axis=1)
        M = np.packbits(v[inv], axis=1)
        i = _lexmin_rows(M)
        key = M[i].tobytes()
        if best is None or key < best:
            best, best_g = key, start + i
    return best, best_g


# --------------------------------------------------------------- tensors


def tensor_compose(factors: Sequence[tuple[_Vector, Sequence[int]]], target_order: Sequence[int], cls=None):
    """Tensor product of vectors placed on named parties.

    Each factor is ``(vector, parties)``; ``target_order`` lists all parties of
    the result in coordinate order.  The result coordinate at (a, x) is the
    product of each factor's coordinate at the restriction of (a, x) to its
    parties, so interleaved orders like A1 B1 A2 B2 are supported.
    """
    target_order = list(target_order)
    if len(set(target_order)) != len(target_order):
        raise DomainError("duplicate party in target order")
    used: list = []
    for _, plist in factors:
        used.extend(plist)
    if sorted(map(str, used)) != sorted(map(str, target_order)) or len(set(used)) != len(used):
        raise DomainError("factor party lists must partition the target order")
    ni, no = factors[0][0].scenario.inputs, factors[0][0].scenario.outputs
    for vec, plist in factors:
        sc = vec.scenario
        if (sc.inputs, sc.outputs) != (ni, no) or sc.parties != len(plist):
            raise DomainError("factor scenario inconsistent with its party list")
    N = len(target_order)
    target = Scenario(N, ni, no)
    A, X = event_table(target)
    pos = {p: i for i, p in enumerate(target_order)}
    nums = np.ones(target.dimension(), dtype=object)
    den = 1
    for vec, plist in factors:
        cols = [pos[p] for p in plist]
        sub = Scenario(len(plist), ni, no)
        idx = flat_index_array(sub, A[:, cols], X[:, cols])
        fn, fd = vec.scaled_ints()
        nums = nums * fn[idx]
        den *= fd
    if cls is None:
        cls = type(factors[0][0])
    return cls(target, [Fraction(int(v), den) for v in nums])


def marginal(s: StateRep, keep: Sequence[int]) -> StateRep:
    """Marginal on the listed parties, taking setting 0 for the others."""
    sc = s.scenario
    keep = list(keep)
    sub = Scenario(len(keep), sc.inputs, sc.outputs)
    A, X = event_table(sc)
    others = [p for p in range(sc.parties) if p not in keep]
    mask = (X[:, others] == 0).all(axis=1) if others else np.ones(sc.dimension(), dtype=bool)
    idx = flat_index_array(sub, A[:, keep], X[:, keep])
    out = [Fraction(0)] * sub.dimension()
    for k in np.nonzero(mask)[0]:
        out[idx[k]] += s.coords[k]
    return StateRep(sub, out)
