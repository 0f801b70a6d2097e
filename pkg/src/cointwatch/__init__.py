"""Cointegration graph construction and tick-by-tick pair monitoring.

Build a directed graph over a price universe (pairwise regression plus a
unit-root test on the residuals), then watch it tick by tick with a
synchronous vertex-centric job: fresh prices are broadcast along edges,
every node leash-checks its neighborhood, local alerts fold into a global
health verdict, and only the edges that broke their leash are refit.
"""

from .alert import (
    AlertConfig,
    AlertReport,
    RecomputeSummary,
    global_reduce,
    leash_check,
    selective_recompute,
    tick_loop,
)
from .coint import CointModel, PairResult, PriceSeries, ScanResult, coint_fit, scan_pairs
from .engine import SuperstepResult, VertexMessage, VertexProgram, audit_determinism, run_supersteps
from .errors import CointwatchError
from .graph import (
    CointEdge,
    CointGraph,
    SymbolNode,
    audit_adjacency,
    build_graph,
    export,
    neighbors,
    remove_edges,
    update_prices,
)
from .pipeline import PriceTable, RunConfig, load_graph, load_prices, save_graph, slice_window
from .stats import AdfResult, LinearModel, Series, adf_test, default_lag, diff, ols_fit

__version__ = "0.1.0"

__all__ = [
    "AdfResult",
    "AlertConfig",
    "AlertReport",
    "CointEdge",
    "CointGraph",
    "CointModel",
    "CointwatchError",
    "LinearModel",
    "PairResult",
    "PriceSeries",
    "PriceTable",
    "RecomputeSummary",
    "RunConfig",
    "ScanResult",
    "Series",
    "SuperstepResult",
    "SymbolNode",
    "VertexMessage",
    "VertexProgram",
    "adf_test",
    "audit_adjacency",
    "audit_determinism",
    "build_graph",
    "coint_fit",
    "default_lag",
    "diff",
    "export",
    "global_reduce",
    "leash_check",
    "load_graph",
    "load_prices",
    "neighbors",
    "ols_fit",
    "remove_edges",
    "run_supersteps",
    "save_graph",
    "scan_pairs",
    "selective_recompute",
    "slice_window",
    "tick_loop",
    "update_prices",
]
