"""Forward and inverse Sturm-Liouville spectral solver on metric trees."""

__version__ = "0.1.0"

from .config import RunConfig
from .pipeline import (ExactData, GateError, SampledData, forward_data,
                       reconstruct, roundtrip, stability_sweep)
from .potential import (EdgePotential, PotentialError, TreePotential,
                        load_potential, save_potential)
from .tree import MetricTree, TreeError, load_tree, validate_tree

__all__ = [
    "RunConfig", "ExactData", "GateError", "SampledData", "forward_data",
    "reconstruct", "roundtrip", "stability_sweep", "EdgePotential",
    "PotentialError", "TreePotential", "load_potential", "save_potential",
    "MetricTree", "TreeError", "load_tree", "validate_tree", "__version__",
]
