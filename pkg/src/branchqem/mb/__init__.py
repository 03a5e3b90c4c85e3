"""Measurement-based protocol subpackage: patterns, compiler, simulator."""

from importlib import resources

from .compile import (
    compile_netlist,
    fredkin_netlist,
    generate_cswap_pattern,
    simplify_netlist,
)
from .patterns import (
    ByproductRule,
    GraphSpec,
    Measurement,
    MeasurementPattern,
    pattern_from_text,
    pattern_to_text,
)
from .protocol import (
    MbRunEstimate,
    MbSqemConfig,
    gate_netlist,
    gate_unitary,
    mb_incoherent_reference,
    mb_rotation_pattern,
    mb_teleport,
    run_mb_sqem,
)
from .sim import (
    ActiveSetCapError,
    MbSimState,
    build_cluster,
    enumerate_pattern,
    materialize_all,
    run_pattern,
)


def mb_cswap_pattern(variant: str) -> tuple[GraphSpec, MeasurementPattern]:
    """Load a frozen controlled-SWAP pattern (reconstructed, versioned data)."""
    if variant not in ("a", "b"):
        raise ValueError(f"unknown variant {variant!r}")
    text = (
        resources.files("branchqem.mb")
        .joinpath(f"data/cswap_{variant}.pattern")
        .read_text(encoding="utf-8")
    )
    pattern = pattern_from_text(text)
    return pattern.graph, pattern


__all__ = [
    "ActiveSetCapError",
    "ByproductRule",
    "GraphSpec",
    "MbRunEstimate",
    "MbSimState",
    "MbSqemConfig",
    "Measurement",
    "MeasurementPattern",
    "build_cluster",
    "compile_netlist",
    "enumerate_pattern",
    "fredkin_netlist",
    "gate_netlist",
    "gate_unitary",
    "generate_cswap_pattern",
    "materialize_all",
    "mb_cswap_pattern",
    "mb_incoherent_reference",
    "mb_rotation_pattern",
    "mb_teleport",
    "pattern_from_text",
    "pattern_to_text",
    "run_mb_sqem",
    "run_pattern",
    "simplify_netlist",
]
