"""Network autoregression for count (PNAR) and continuous (NAR) panels."""

from ._netar import (
    Network,
    __version__,
    chi2_sf,
    davies_bound,
    fit,
    gen_er,
    gen_sbm,
    load_edges,
    network_from_edges,
    run_study,
    save_edges,
    score_test,
    simulate,
    sup_test,
)

__all__ = [
    "Network",
    "__version__",
    "chi2_sf",
    "davies_bound",
    "fit",
    "gen_er",
    "gen_sbm",
    "load_edges",
    "network_from_edges",
    "run_study",
    "save_edges",
    "score_test",
    "simulate",
    "sup_test",
]
