"""Extremal effects of boxworld: enumeration, wiring classification and applications."""
from .core import (
    DomainError,
    EffectRep,
    Relabelling,
    Scenario,
    StateRep,
    all_ones,
    apply_relabelling,
    canonical_form,
    det_matrix,
    fingerprint,
    flat_index,
    generator_matrix,
    identity_rep,
    inner,
    inverse_index,
    local_deterministic_states,
    ns_generators,
    orbit_size,
    same_effect,
    sbv,
    symmetry_group,
    tensor_compose,
    vector_from_terms,
)
from .enumeration import (
    Catalog,
    IdentitySet,
    class_summary,
    enumerate_effects_01,
    enumerate_identity_reps_01,
    ingest_identity_vertices,
    sub_effects,
)
from .io import ParseError, export_fr_product, read_catalog, write_catalog
from .lp import LinearProgram, in_convex_hull, is_valid_effect, solve
from .tasks import (
    CrossSectionPoint,
    DistillationProtocol,
    Ensemble,
    advantage_lp,
    boxworld_distance,
    chsh,
    cross_section_state,
    distill,
    distillation_search,
    guessing_probability,
    max_guessing_wirings,
    nlwe_fixture,
)
from .wiring import Measurement, condition_effect, is_wiring_representation

__all__ = [name for name in dir() if not name.startswith("_")]
