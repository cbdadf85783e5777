"""Configuration-model clusters, two-ancestor Galton-Watson trees and limited-aggregation coagulation."""

__version__ = "0.1.0"

from .degree_model import (  # noqa: E402
    DegreeLaw,
    DegreeSequence,
    OffspringLaw,
    criticality,
    degree_sequence,
    format_law,
    from_probabilities,
    offspring_law,
    parse_law,
    size_biased,
)
from .configuration import build_stub_system, clusters, cluster_size_counts, uniform_pairing  # noqa: E402
from .tree_code import decode, encode, enumerate_codes, is_valid_code, reroot  # noqa: E402
from .gw_law import (  # noqa: E402
    convolution_power,
    dwass_total_progeny,
    gw2_mass,
    limit_concentration,
    sample_gw2_tree,
)

__all__ = [
    "DegreeLaw",
    "DegreeSequence",
    "OffspringLaw",
    "build_stub_system",
    "cluster_size_counts",
    "clusters",
    "convolution_power",
    "criticality",
    "decode",
    "degree_sequence",
    "dwass_total_progeny",
    "encode",
    "enumerate_codes",
    "format_law",
    "from_probabilities",
    "gw2_mass",
    "is_valid_code",
    "limit_concentration",
    "offspring_law",
    "parse_law",
    "reroot",
    "sample_gw2_tree",
    "size_biased",
    "uniform_pairing",
]
