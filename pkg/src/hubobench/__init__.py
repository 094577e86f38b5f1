"""Generate, solve and benchmark 3-local Ising (HUBO) instances."""
from hubobench.core import (
    HuboInstance,
    Term,
    VariableIndexTable,
    apply_flip,
    build_index,
    delta_energy,
    evaluate_energies,
    evaluate_energy,
    flip,
    validate_instance,
)
from hubobench.generators import (
    GenerationConfig,
    build_heavy_hex,
    generate,
    generate_family,
    random_instance,
)
from hubobench.io import deserialize_instance, serialize_instance
from hubobench.oracle import brute_force_ground_state, relative_gap

__version__ = "0.1.0"

__all__ = [
    "GenerationConfig",
    "HuboInstance",
    "Term",
    "VariableIndexTable",
    "apply_flip",
    "brute_force_ground_state",
    "build_heavy_hex",
    "build_index",
    "delta_energy",
    "deserialize_instance",
    "evaluate_energies",
    "evaluate_energy",
    "flip",
    "generate",
    "generate_family",
    "random_instance",
    "relative_gap",
    "serialize_instance",
    "validate_instance",
]
