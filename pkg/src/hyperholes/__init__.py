"""Holes in flow-log hypergraphs, found with GF(2) homology and mapped back to labeled motifs."""

from __future__ import annotations

from .homology import (
    CycleRep,
    DimensionError,
    Gf2Matrix,
    HomologySummary,
    betti_numbers,
    boundary_matrix,
    compute_homology,
    euler_characteristic,
    homology_basis,
    rank_gf2,
)
from .hypergraph import (
    CollapsedHypergraph,
    FieldPairConfig,
    Hypergraph,
    build_hypergraph,
    collapse_edges,
    from_edge_map,
    induced_subhypergraph,
)
from .ingest import (
    Campaign,
    ConfigError,
    FlowFormatError,
    FlowRecord,
    SynthConfig,
    Window,
    WindowSpec,
    filter_hosts,
    parse_flow_csv,
    parse_flow_jsonl,
    partition_windows,
    synth_generate,
)
from .motif import (
    Motif,
    Watchlist,
    annotate_motif,
    default_watchlist,
    motif_from_closure_cycle,
    motif_from_nesting_cycle,
)
from .pipeline import AnalysisConfig, AnalysisReport, emit_timeline, run_ablation, run_analyze
from .topology import (
    BudgetError,
    ContainmentDag,
    SimplicialComplex,
    closure_complex,
    containment_relation,
    enumerate_chains,
    hcg,
    nesting_complex,
)

__version__ = "0.1.0"
