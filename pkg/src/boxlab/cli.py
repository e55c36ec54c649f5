"""Command-line entry point: ``boxlab <command> ...``.

Results go to standard output as ``key=value`` pairs with exact rationals.
Exit status is 0 on success, 1 on a domain error and 2 on a parse error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction

from .core import DomainError, EffectRep, Scenario, StateRep
from .io import ParseError, format_rational, parse_rational, read_catalog, read_vectors

log = logging.getLogger("boxlab")


def _q(x) -> str:
    return format_rational(x)


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _scenario(args) -> Scenario:
    if min(args.N, args.nI, args.nO) < 1:
        raise DomainError("scenario sizes must be positive")
    return Scenario(args.N, args.nI, args.nO)


def _progress(args):
    return (lambda msg: print(msg, file=sys.stderr)) if args.verbose else None


def _load_vector(spec: str, cls):
    """A vector from ``fixture:<name>`` or the first record of a file (``path[:name]`` picks by name)."""
    if spec.startswith("fixture:"):
        from .fixtures import printed_vectors

        name = spec.split(":", 1)[1]
        vecs = printed_vectors()
        if name not in vecs:
            raise DomainError(f"unknown fixture {name!r}; known: {', '.join(vecs)}")
        return cls(vecs[name].scenario, vecs[name].coords)
    path, _, name = spec.partition("::")
    sc, records = read_vectors(path)
    for _, rec in records:
        if not name or rec.get("name") == name:
            return cls(sc, rec["v"])
    raise DomainError(f"no record {name!r} in {path}" if name else f"no records in {path}")


# ---------------------------------------------------------------- commands


def cmd_identities(args) -> None:
    from .enumeration import enumerate_identity_reps_01
    from .io import write_identities

    sc = _scenario(args)
    ids = enumerate_identity_reps_01(sc, symmetry_reduce=args.reduce)
    out = [f"identities={ids.total()}", f"wiring={ids.wiring_total()}"]
    if args.classes:
        classes = len(set(ids.class_ids))
        wiring_classes = len({c for c, w in zip(ids.class_ids, ids.is_wiring_rep) if w})
        out += [f"classes={classes}", f"wiring_classes={wiring_classes}"]
    print(" ".join(out))
    if args.out:
        write_identities(ids, args.out)


def cmd_effects(args) -> None:
    from .enumeration import class_summary, enumerate_effects_01
    from .io import write_catalog

    sc = _scenario(args)
    cat = enumerate_effects_01(sc, symmetry_reduce=not args.full, progress=_progress(args), strategy=args.strategy)
    summary = class_summary(cat)
    if args.classes:
        print(f"classes={summary['classes']} total={summary['total']} "
              f"wirings={summary['wirings']} nonwirings={summary['nonwirings']}")
        for c in summary["per_class"]:
            print(f"class={c['class']} orbit={c['orbit']} wiring={int(c['wiring'])} effect={c['terms']}")
    else:
        print(f"total={summary['total']} wirings={summary['wirings']} nonwirings={summary['nonwirings']}")
    if args.out:
        write_catalog(cat, args.out)


def cmd_classify(args) -> None:
    import numpy as np

    from .io import catalog_text, write_catalog
    from .wiring import is_wiring_representation

    cat = read_catalog(args.input)
    flags = []
    for i in range(len(cat)):
        rep = cat.rep(i)
        flags.append(bool(rep.is_01() and is_wiring_representation(rep)))
    cat.wiring = np.array(flags, dtype=bool)
    print(f"records={len(cat)} wirings={sum(flags)} nonwirings={len(cat) - sum(flags)}")
    if args.out:
        write_catalog(cat, args.out)
    elif args.print:
        sys.stdout.write(catalog_text(cat))


def cmd_subeffects(args) -> None:
    from .enumeration import ingest_identity_vertices, sub_effects

    ids = ingest_identity_vertices(args.identity)
    known = read_catalog(args.known)
    sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else None
    total = 0
    for n, u in enumerate(ids.reps):
        found = sub_effects(u, known, sizes=sizes, progress=_progress(args))
        total += len(found)
        print(f"identity={n} candidates={len(found)}")
        for sub in found:
            print(f"  det={int(sub.deterministic)} status={sub.status} effect={sub.rep.terms()}")
    print(f"candidates={total}")


def cmd_discriminate(args) -> None:
    from .tasks import boxworld_distance

    s1 = _load_vector(args.s1, StateRep)
    s2 = _load_vector(args.s2, StateRep)
    for name, s in (("s1", s1), ("s2", s2)):
        errors = s.validity_errors()
        if errors:
            raise DomainError(f"{name} is not a valid state: {'; '.join(errors)}")
    cat = read_catalog(args.catalog)
    d, witness = boxworld_distance(s1, s2, cat, wirings_only=args.wirings_only, witness=True)
    print(f"distance={_q(d)} guessing={_q((1 + d) / 2)}")
    print(f"witness={witness.terms()}")


def cmd_advantage(args) -> None:
    from .lp import is_valid_effect
    from .tasks import advantage_lp

    e = _load_vector(args.effect, EffectRep)
    if not is_valid_effect(e.scenario, e):
        raise DomainError("not a valid effect")
    cat = read_catalog(args.catalog)
    res = advantage_lp(e, cat, mu=args.mu, search=args.search)
    if res.status != "optimal":
        print(f"status={res.status}")
        return
    print(f"status=optimal mu={_q(res.mu)} nu={_q(res.nu)} advantageous={int(res.advantageous)}")


def cmd_nlwe(args) -> None:
    from .tasks import guessing_probability, max_guessing_wirings, nlwe_fixture

    ens, m = nlwe_fixture()
    p = guessing_probability(ens, m)
    w = max_guessing_wirings(ens)
    print(f"perfect={int(p == 1)} wiring_max={_q(w)}")


def cmd_distill(args) -> None:
    from .io import atomic_write
    from .tasks import (
        CrossSectionPoint,
        chsh,
        cross_section_state,
        distill,
        distillation_search,
        distillation_table,
        printed_protocol,
        table_csv,
    )

    point = CrossSectionPoint(args.section, args.eta, args.omega)
    state = cross_section_state(point)
    protocol = printed_protocol()
    _, final = distill(protocol, state)
    print(f"chsh_i={_q(chsh(state))} chsh_f={_q(final)}")
    if args.search:
        if args.catalog:
            candidates = read_catalog(args.catalog)
        else:
            candidates = [protocol.alice_effects]
        best = distillation_search(state, 3, candidates, max_pairs=args.max_pairs, progress=_progress(args))
        print(f"search_best={_q(best.value)} pairs={best.pairs_tested}")
    if args.csv:
        rows = distillation_table(args.section, protocol=protocol)
        atomic_write(args.csv, table_csv(rows, as_float=args.float))


def cmd_fr_export(args) -> None:
    from .enumeration import ingest_identity_vertices
    from .io import atomic_write, export_fr_product

    ids = ingest_identity_vertices(args.input)
    hg = export_fr_product(ids, args.variant)
    weighted = sum(hg.weighted())
    print(f"edges={len(hg.edges)} vertices={len(hg.vertices)} weighted={weighted}")
    if args.out:
        atomic_write(args.out, hg.text())


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boxlab", description="Extremal boxworld effects and their applications.")
    p.add_argument("-v", "--verbose", action="store_true", help="progress on standard error")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(q):
        q.add_argument("N", type=int)
        q.add_argument("nI", type=int)
        q.add_argument("nO", type=int)

    q = sub.add_parser("identities", help="{0,1}-valued identity representations")
    scenario_args(q)
    q.add_argument("--classes", action="store_true")
    q.add_argument("--reduce", action="store_true", help="one representative per relabelling class")
    q.add_argument("--out")
    q.set_defaults(func=cmd_identities)

    q = sub.add_parser("effects", help="extremal {0,1}-valued effects")
    scenario_args(q)
    q.add_argument("--classes", action="store_true")
    q.add_argument("--full", action="store_true", help="keep every effect, not one per class")
    q.add_argument("--strategy", choices=("orbit", "scan"), default="orbit")
    q.add_argument("--out")
    q.set_defaults(func=cmd_effects)

    q = sub.add_parser("classify", help="recompute wiring flags of a catalog")
    q.add_argument("--in", dest="input", required=True)
    q.add_argument("--out")
    q.add_argument("--print", action="store_true", help="write the flagged catalog to standard output")
    q.set_defaults(func=cmd_classify)

    q = sub.add_parser("subeffects", help="zeroings of identity representations outside the known hull")
    q.add_argument("--identity", required=True)
    q.add_argument("--known", required=True)
    q.add_argument("--sizes", help="comma-separated numbers of kept entries")
    q.set_defaults(func=cmd_subeffects)

    q = sub.add_parser("discriminate", help="boxworld distance of two states over a catalog")
    q.add_argument("--s1", required=True, help="file, file::name or fixture:<name>")
    q.add_argument("--s2", required=True)
    q.add_argument("--catalog", required=True)
    q.add_argument("--wirings-only", action="store_true")
    q.set_defaults(func=cmd_discriminate)

    q = sub.add_parser("advantage", help="state-discrimination advantage program for one effect")
    q.add_argument("--effect", required=True, help="file, file::name or fixture:<name>")
    q.add_argument("--catalog", required=True)
    q.add_argument("--mu", type=_rational, default=Fraction(1))
    q.add_argument("--search", action="store_true", help="optimise mu - nu with mu free")
    q.set_defaults(func=cmd_advantage)

    q = sub.add_parser("nlwe", help="eight-state discrimination example")
    q.set_defaults(func=cmd_nlwe)

    q = sub.add_parser("distill", help="three-copy CHSH distillation on a cross section")
    q.add_argument("--section", choices=("I", "III"), required=True)
    q.add_argument("--eta", type=_rational, required=True)
    q.add_argument("--omega", type=_rational, required=True)
    q.add_argument("--search", action="store_true", help="optimise Bob's effects for Alice candidates")
    q.add_argument("--catalog", help="Alice candidates for --search (default: the printed pair)")
    q.add_argument("--max-pairs", type=int)
    q.add_argument("--csv", help="write the whole 1/8 grid of the section")
    q.add_argument("--float", action="store_true", help="decimal values in the CSV")
    q.set_defaults(func=cmd_distill)

    q = sub.add_parser("fr-export", help="FR-product hypergraph from identity representations")
    q.add_argument("--in", dest="input", required=True)
    q.add_argument("--variant", choices=("disjunctive", "maximal", "weighted"), required=True)
    q.add_argument("--out")
    q.set_defaults(func=cmd_fr_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
