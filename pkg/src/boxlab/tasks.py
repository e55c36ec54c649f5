"""State discrimination, nonlocality without entanglement and CHSH distillation."""
from __future__ import annotations

import csv
import io as _io
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import (
    DomainError,
    EffectRep,
    Scenario,
    StateRep,
    _Vector,
    det_basis,
    det_matrix,
    flat_index,
    identity_rep,
    inner,
    ns_generators,
    tensor_compose,
)
from .enumeration import Catalog
from .lp import EQ, LE, LinearProgram, is_valid_effect, solve
from .wiring import Measurement, WiringMeasurement, wiring_bases

CHSH_SCENARIO = Scenario(2, 2, 2)


# ------------------------------------------------------------ discrimination


@dataclass(frozen=True)
class Ensemble:
    states: tuple
    weights: tuple = ()

    def __post_init__(self):
        states = tuple(self.states)
        if not states:
            raise DomainError("empty ensemble")
        weights = tuple(Fraction(w) for w in self.weights) if self.weights else (Fraction(1, len(states)),) * len(states)
        if len(weights) != len(states):
            raise DomainError("one weight per state required")
        if any(w < 0 for w in weights) or sum(weights) != 1:
            raise DomainError("weights must be nonnegative and sum to 1")
        if len({s.scenario for s in states}) != 1:
            raise DomainError("states from different scenarios")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "weights", weights)

    @property
    def scenario(self) -> Scenario:
        return self.states[0].scenario


def _scaled_state(s: _Vector) -> tuple[np.ndarray, int]:
    nums, den = s.scaled_ints()
    return np.array([int(x) for x in nums], dtype=np.int64), den


def catalog_values(catalog: Catalog, s: _Vector) -> list[Fraction]:
    """``<e, s>`` for every catalog row."""
    v, den = _scaled_state(s)
    raw = catalog.reps @ v
    return [Fraction(int(r), int(d) * den) for r, d in zip(raw, catalog.dens)]


def boxworld_distance(s1: StateRep, s2: StateRep, effects: Catalog, wirings_only: bool = False,
                      witness: bool = False):
    """Largest ``|<e,s1> - <e,s2>|`` over the catalog (all relabellings if it is reduced)."""
    if s1.scenario != s2.scenario or s1.scenario != effects.scenario:
        raise DomainError("scenario mismatch")
    cat = effects.expanded() if effects.symmetry_reduced else effects
    if wirings_only:
        cat = cat.subset(np.nonzero(cat.wiring)[0])
    if len(cat) == 0:
        raise DomainError("empty catalog")
    d1, den1 = _scaled_state(s1)
    d2, den2 = _scaled_state(s2)
    L = math.lcm(den1, den2)
    diff = d1 * (L // den1) - d2 * (L // den2)
    raw = np.abs(cat.reps @ diff)
    # compare raw / dens without leaving integers: group by denominator
    best, best_i = Fraction(0), 0
    for d in np.unique(cat.dens):
        rows = np.nonzero(cat.dens == d)[0]
        i = rows[int(np.argmax(raw[rows]))]
        val = Fraction(int(raw[i]), int(d) * L)
        if val > best:
            best, best_i = val, int(i)
    if witness:
        return best, cat.rep(best_i)
    return best


def guessing_probability(ensemble: Ensemble, measurement: Measurement, label_map: dict | None = None) -> Fraction:
    """``sum_k weight_k <e_k, s_k>``; effect labels name states unless a map is given."""
    if label_map is None:
        if len(measurement.effects) != len(ensemble.states):
            raise DomainError("measurement and ensemble sizes differ; pass a label map")
        pairs = list(zip(measurement.effects, range(len(ensemble.states))))
    else:
        pairs = [(e, label_map[lab]) for e, lab in zip(measurement.effects, measurement.labels)]
    return sum((ensemble.weights[k] * inner(e, ensemble.states[k]) for e, k in pairs), Fraction(0))


def max_guessing_wirings(ensemble: Ensemble, bases: Sequence[EffectRep] | None = None, witness: bool = False):
    """Best guessing probability over deterministic wiring measurements.

    Each atom of a wiring base is assigned to the state it favours most, which
    is the optimal assignment for that base.
    """
    sc = ensemble.scenario
    if bases is None:
        bases = wiring_bases(sc)
    scaled = [[w * c for c in s.coords] for s, w in zip(ensemble.states, ensemble.weights)]
    L = math.lcm(*(x.denominator for row in scaled for x in row))
    W = np.array([[int(x * L) for x in row] for row in scaled], dtype=np.int64)
    best, best_wm = -1, None
    for u in bases:
        atoms = np.array(u.support(), dtype=np.int64)
        sub = W[:, atoms]
        val = int(sub.max(axis=0).sum())
        if val > best:
            best = val
            best_wm = WiringMeasurement(u, tuple(int(k) for k in sub.argmax(axis=0)))
    value = Fraction(best, L)
    return (value, best_wm) if witness else value


# ------------------------------------------------------------- advantage LP


@dataclass
class AdvantageResult:
    status: str
    mu: Fraction | None = None
    nu: Fraction | None = None
    s1: StateRep | None = None
    s2: StateRep | None = None
    rows_used: int = 0

    @property
    def advantageous(self) -> bool:
        return self.status == "optimal" and self.nu < self.mu


def _wiring_rows(wiring_rows: Catalog) -> tuple[np.ndarray, np.ndarray]:
    cat = wiring_rows.expanded() if wiring_rows.symmetry_reduced else wiring_rows
    rows = np.nonzero(cat.wiring)[0]
    return cat.reps[rows], cat.dens[rows]


def _float_active_rows(base, R, dens, dim, n_vars, objective, maximise) -> list[int]:
    """Wiring rows that are tight in a floating-point solve of the full program.

    Only used to seed the exact constraint generation; nothing it returns is
    trusted beyond that.
    """
    from scipy.optimize import linprog
    from scipy.sparse import coo_matrix, hstack

    A_eq = np.zeros((len(base), n_vars))
    b_eq = np.zeros(len(base))
    for r, (coeffs, _, rhs) in enumerate(base):
        for k, c in coeffs.items():
            A_eq[r, k] = float(c)
        b_eq[r] = float(rhs)
    Rf = R / dens[:, None].astype(float)
    nu_col = -np.ones((R.shape[0], 1))
    blocks = [coo_matrix(Rf), coo_matrix(-Rf), coo_matrix(nu_col)]
    if n_vars > 2 * dim + 1:
        blocks.append(coo_matrix((R.shape[0], n_vars - 2 * dim - 1)))
    A_ub = hstack(blocks).tocsr()
    c = -np.array(objective, dtype=float) if maximise else np.array(objective, dtype=float)
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(R.shape[0]), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        return []
    duals = np.abs(res.ineqlin.marginals)
    return [int(i) for i in np.nonzero(duals > 1e-9)[0]]


def advantage_lp(e: EffectRep, wiring_rows: Catalog, mu=1, search: bool = False, batch: int = 20,
                 max_rounds: int = 500, float_seed: bool = True) -> AdvantageResult:
    """Minimise the largest wiring separation of two states that ``e`` separates by ``mu``.

    Variables are the two states and ``nu``; wiring rows are added on demand
    (most violated first) until every wiring effect satisfies
    ``<w, s1 - s2> <= nu``.  With ``search`` the separation ``mu`` becomes a
    variable and ``mu - nu`` is maximised.

    ``float_seed`` starts the exact loop from the rows a floating-point solve
    finds tight; the answer is still the exact program's and is checked
    against every wiring row.
    """
    sc = e.scenario
    if wiring_rows.scenario != sc:
        raise DomainError("scenario mismatch")
    R, dens = _wiring_rows(wiring_rows)
    dim = sc.dimension()
    n_out = sc.outputs ** sc.parties
    gens = ns_generators(sc)
    i_nu, i_mu = 2 * dim, 2 * dim + 1
    n_vars = 2 * dim + (2 if search else 1)
    # the zero effect is a wiring, so nu >= 0 loses nothing and keeps early rounds bounded
    bounds = [(0, None)] * (2 * dim + (2 if search else 1))
    mu = None if search else Fraction(mu)

    base = []
    for off in (0, dim):
        for x in range(sc.inputs ** sc.parties):
            base.append(({off + x * n_out + k: 1 for k in range(n_out)}, EQ, 1))
        for r in gens:
            base.append(({off + k: int(c) for k, c in enumerate(r) if c}, EQ, 0))
    sep = {}
    for k, c in enumerate(e.coords):
        if c:
            sep[k] = c
            sep[dim + k] = -c
    if search:
        sep[i_mu] = -1
        base.append((sep, EQ, 0))
    else:
        base.append((sep, EQ, mu))

    objective = [0] * n_vars
    if search:
        objective[i_mu], objective[i_nu] = 1, -1
    else:
        objective[i_nu] = 1
    active = _float_active_rows(base, R, dens, dim, n_vars, objective, search) if float_seed else []
    active_set = set(active)
    for _ in range(max_rounds):
        lp = LinearProgram(n_vars, sense="max" if search else "min", objective=objective, bounds=bounds)
        for coeffs, rel, rhs in base:
            lp.add_row(coeffs, rel, rhs)
        for i in active:
            row = {}
            d = int(dens[i])
            for k in np.nonzero(R[i])[0]:
                c = Fraction(int(R[i][k]), d)
                row[int(k)] = c
                row[dim + int(k)] = -c
            row[i_nu] = -1
            lp.add_row(row, LE, 0)
        res = solve(lp)
        if res.status == "infeasible":
            return AdvantageResult("infeasible", mu, rows_used=len(active))
        if res.status != "optimal":
            return AdvantageResult(res.status, mu, rows_used=len(active))
        p = res.point
        s1, s2 = p[:dim], p[dim:2 * dim]
        nu = p[i_nu]
        L = math.lcm(*(x.denominator for x in itertools.chain(s1, s2, [nu])))
        diff = np.array([int((a - b) * L) for a, b in zip(s1, s2)], dtype=object)
        vals = R.astype(object) @ diff  # value * dens * L
        slack = [int(v) - int(nu * L) * int(d) for v, d in zip(vals, dens)]
        order = sorted((i for i, s in enumerate(slack) if s > 0 and i not in active_set), key=lambda i: -slack[i])
        if not order:
            m = p[i_mu] if search else mu
            return AdvantageResult("optimal", m, nu, StateRep(sc, s1), StateRep(sc, s2), len(active))
        for i in order[:batch]:
            active.append(i)
            active_set.add(i)
    raise RuntimeError("constraint generation did not converge")


# ------------------------------------------------------------ cross sections


@dataclass(frozen=True)
class CrossSectionPoint:
    section: str
    eta: Fraction
    omega: Fraction

    def __post_init__(self):
        if self.section not in ("I", "III"):
            raise DomainError("section must be 'I' or 'III'")
        eta, omega = Fraction(self.eta), Fraction(self.omega)
        if eta < 0 or omega < 0 or eta + omega > 1:
            raise DomainError("need eta, omega >= 0 and eta + omega <= 1")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "omega", omega)


def _box(fn) -> StateRep:
    sc = CHSH_SCENARIO
    coords = [Fraction(0)] * sc.dimension()
    for a, b, x, y in itertools.product(range(2), repeat=4):
        coords[flat_index(sc, (a, b), (x, y))] = Fraction(fn(a, b, x, y))
    return StateRep(sc, coords)


def local_box(i: int) -> StateRep:
    """Deterministic box ``a = mu x + nu``, ``b = sigma y + tau`` (mod 2), ``i = 1 + tau + 2 sigma + 4 nu + 8 mu``."""
    if not 1 <= i <= 16:
        raise DomainError("local box index runs from 1 to 16")
    k = i - 1
    tau, sigma, nu, mu = k & 1, (k >> 1) & 1, (k >> 2) & 1, (k >> 3) & 1
    return _box(lambda a, b, x, y: int(a == (mu * x) ^ nu and b == (sigma * y) ^ tau))


def nonlocal_box(i: int) -> StateRep:
    """``a xor b = xy + mu x + nu y + sigma`` with probability 1/2 each, ``i = 1 + sigma + 2 nu + 4 mu``."""
    if not 1 <= i <= 8:
        raise DomainError("nonlocal box index runs from 1 to 8")
    k = i - 1
    sigma, nu, mu = k & 1, (k >> 1) & 1, (k >> 2) & 1
    return _box(lambda a, b, x, y: Fraction(1, 2) * ((a ^ b) == ((x * y) ^ (mu * x) ^ (nu * y) ^ sigma)))


def mixed_local_box() -> StateRep:
    return nonlocal_box(1) * Fraction(3, 4) + nonlocal_box(2) * Fraction(1, 4)


def cross_section_state(p: CrossSectionPoint) -> StateRep:
    other = local_box(6) if p.section == "I" else local_box(9)
    s = nonlocal_box(1) * p.omega + (local_box(1) + other) * (p.eta / 2) + mixed_local_box() * (1 - p.omega - p.eta)
    return StateRep(CHSH_SCENARIO, s.coords)


def correlators(P: _Vector) -> dict:
    sc = P.scenario
    if (sc.parties, sc.inputs, sc.outputs) != (2, 2, 2):
        raise DomainError("CHSH needs a bipartite two-input two-output state")
    E = {}
    for x, y in itertools.product(range(2), repeat=2):
        E[x, y] = sum(
            (1 if a == b else -1) * P.coords[flat_index(sc, (a, b), (x, y))]
            for a, b in itertools.product(range(2), repeat=2)
        )
    return E


def chsh(P: _Vector) -> Fraction:
    E = correlators(P)
    return E[0, 0] + E[0, 1] + E[1, 0] - E[1, 1]


# -------------------------------------------------------------- distillation


@dataclass(frozen=True)
class DistillationProtocol:
    copies: int
    alice_effects: tuple  # (e_0, e_1) on `copies` systems
    bob_effects: tuple  # (f_0, f_1)

    def scenario(self) -> Scenario:
        return Scenario(self.copies, 2, 2)

    def validate(self) -> None:
        sc = self.scenario()
        for e in (*self.alice_effects, *self.bob_effects):
            if e.scenario != sc:
                raise DomainError("protocol effect on the wrong scenario")
            if not is_valid_effect(sc, e):
                raise DomainError("protocol effect is not a valid effect")


def copies_state(base: StateRep, t: int) -> StateRep:
    """``base`` tensored ``t`` times, parties ordered A1 B1 A2 B2 ..."""
    order = [f"{side}{i}" for i in range(1, t + 1) for side in "AB"]
    factors = [(base, (f"A{i}", f"B{i}")) for i in range(1, t + 1)]
    return tensor_compose(factors, order, cls=StateRep)


def _conditional_matrix(s: StateRep, t: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Reshape the copies state into an (Alice coordinate, Bob coordinate) matrix.

    ``M[i, j] = s(alice event i, bob event j)`` with both sides in their own
    t-party flat order.
    """
    from .core import event_table, flat_index_array

    big = s.scenario
    side = Scenario(t, 2, 2)
    A, X = event_table(big)
    alice = [2 * i for i in range(t)]
    bob = [2 * i + 1 for i in range(t)]
    ia = flat_index_array(side, A[:, alice], X[:, alice])
    ib = flat_index_array(side, A[:, bob], X[:, bob])
    nums, den = s.scaled_ints()
    M = np.zeros((side.dimension(), side.dimension()), dtype=object)
    M[ia, ib] = nums
    return M, ia, den


def distill(protocol: DistillationProtocol, base: StateRep, check: bool = True) -> tuple[StateRep, Fraction]:
    """Final box P'(ab|xy) and its CHSH value for ``protocol`` on copies of ``base``."""
    protocol.validate()
    t = protocol.copies
    sc = protocol.scenario()
    s = copies_state(base, t)
    u = identity_rep(sc)
    order = [f"{side}{i}" for i in range(1, t + 1) for side in "AB"]
    alice = [f"A{i}" for i in range(1, t + 1)]
    bob = [f"B{i}" for i in range(1, t + 1)]
    coords = [Fraction(0)] * CHSH_SCENARIO.dimension()
    for x, y in itertools.product(range(2), repeat=2):
        ex, fy = protocol.alice_effects[x], protocol.bob_effects[y]
        for a, b in itertools.product(range(2), repeat=2):
            ea = ex if a == 0 else u - ex
            fb = fy if b == 0 else u - fy
            joint = tensor_compose([(ea, alice), (fb, bob)], order, cls=EffectRep)
            coords[flat_index(CHSH_SCENARIO, (a, b), (x, y))] = inner(joint, s)
    P = StateRep(CHSH_SCENARIO, coords)
    if check:
        errors = P.validity_errors()
        if errors:
            raise AssertionError("distilled box invalid: " + "; ".join(errors))
    return P, chsh(P)


def chsh_closed_form(section: str, eta, omega) -> Fraction:
    """Final CHSH value of the three-copy protocol as a polynomial in (eta, omega)."""
    h, w = Fraction(eta), Fraction(omega)
    if section == "I":
        poly = (7 * w**3 - 15 * h**3 + 33 * w**2 + 57 * w + 3 * h**2 * (7 + 11 * w)
                + 3 * h * (9 + 26 * w + 13 * w**2) + 31)
    elif section == "III":
        poly = (7 * w**3 + 5 * h**3 + 33 * w**2 + 57 * w + h**2 * (13 + 25 * w)
                + 3 * h * (5 + 18 * w + 9 * w**2) + 31)
    else:
        raise DomainError("section must be 'I' or 'III'")
    return poly / 32


def printed_protocol() -> DistillationProtocol:
    from .fixtures import protocol_effects

    eff = protocol_effects()
    return DistillationProtocol(3, (eff["e0"], eff["e1"]), (eff["f0"], eff["f1"]))


def grid(step=Fraction(1, 8)) -> list[tuple[Fraction, Fraction]]:
    step = Fraction(step)
    n = int(1 / step)
    return [(i * step, j * step) for i in range(n + 1) for j in range(n + 1 - i)]


def distillation_table(section: str, step=Fraction(1, 8), protocol: DistillationProtocol | None = None) -> list[dict]:
    protocol = protocol or printed_protocol()
    rows = []
    for eta, omega in grid(step):
        state = cross_section_state(CrossSectionPoint(section, eta, omega))
        _, final = distill(protocol, state)
        rows.append({"section": section, "eta": eta, "omega": omega, "chsh_i": chsh(state), "chsh_f": final})
    return rows


def table_csv(rows: Sequence[dict], as_float: bool = False) -> str:
    if not rows:
        return ""
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v, as_float) for k, v in r.items()})
    return buf.getvalue()


def _fmt(v, as_float: bool) -> str:
    if isinstance(v, Fraction):
        if as_float:
            return repr(float(v))
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return str(v)


@dataclass
class SearchResult:
    value: Fraction
    protocol: DistillationProtocol | None
    pairs_tested: int


def bob_lp(alice: tuple, base: StateRep, t: int) -> tuple[Fraction, tuple]:
    """Best CHSH over Bob's effects for fixed Alice effects, with exact optimal effects.

    Bob's effects ``f_y`` are valid exactly when nonnegative representations of
    ``f_y`` and of ``u - f_y`` exist, so the variables are two nonnegative
    vectors per input whose sum matches the identity on a spanning set of
    deterministic states.
    """
    sc = Scenario(t, 2, 2)
    dim = sc.dimension()
    s = copies_state(base, t)
    M, _, den = _conditional_matrix(s, t)
    u = identity_rep(sc)
    un = np.array([int(c) for c in u.coords], dtype=object)
    # c_x[j] = sum_i (2 e_x - u)[i] M[i, j]
    cs = []
    for e in alice:
        en, ed = e.scaled_ints()
        a = np.array([2 * int(v) for v in en], dtype=object) - un * ed
        cs.append((a @ M, ed * den))
    signs = {(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): -1}
    # CHSH = sum_xy sign * <(2e_x - u) (x) (2 f_y - u), s>
    n_vars = 4 * dim  # f_0, g_0, f_1, g_1
    objective = [Fraction(0)] * n_vars
    const = Fraction(0)
    for (x, y), sg in signs.items():
        cx, cd = cs[x]
        for j in range(dim):
            if cx[j]:
                objective[2 * y * dim + j] += Fraction(2 * sg * int(cx[j]), cd)
        const -= Fraction(sg * int(cx @ un), cd)
    D = det_matrix(sc)
    basis = det_basis(sc)
    lp = LinearProgram(n_vars, sense="max", objective=objective)
    for y in range(2):
        for r in basis:
            row = {}
            for j in np.nonzero(D[r])[0]:
                row[2 * y * dim + int(j)] = 1
                row[(2 * y + 1) * dim + int(j)] = 1
            lp.add_row(row, EQ, 1)
    res = solve(lp)
    if res.status != "optimal":
        raise AssertionError(f"Bob's program is {res.status}")
    p = res.point
    f0 = EffectRep(sc, p[0:dim])
    f1 = EffectRep(sc, p[2 * dim:3 * dim])
    return res.value + const, (f0, f1)


def distillation_search(base: StateRep, t: int, alice_candidates, max_pairs: int | None = None,
                        progress: Callable[[str], None] | None = None) -> SearchResult:
    """Best protocol over Alice pairs, each completed by Bob's optimal program.

    ``alice_candidates`` is either a catalog (every ordered pair of its
    relabelled entries is tried, up to ``max_pairs``) or an explicit iterable
    of ``(e_0, e_1)`` pairs.
    """
    if isinstance(alice_candidates, Catalog):
        cat = alice_candidates.expanded() if alice_candidates.symmetry_reduced else alice_candidates
        effects = cat.effects()
        pairs: Iterable = itertools.product(effects, repeat=2)
    else:
        pairs = alice_candidates
    best = SearchResult(Fraction(-5), None, 0)
    for n, (e0, e1) in enumerate(pairs):
        if max_pairs is not None and n >= max_pairs:
            break
        value, (f0, f1) = bob_lp((e0, e1), base, t)
        best.pairs_tested = n + 1
        if value > best.value:
            best.value = value
            best.protocol = DistillationProtocol(t, (e0, e1), (f0, f1))
        if progress and (n + 1) % 100 == 0:
            progress(f"{n + 1} Alice pairs, best {best.value}")
    return best


# ----------------------------------------------------------------- NLWE


def nlwe_fixture() -> tuple[Ensemble, Measurement]:
    from .fixtures import TRIPARTITE, nlwe_measurement, nlwe_states

    return Ensemble(nlwe_states()), Measurement(TRIPARTITE, nlwe_measurement())
