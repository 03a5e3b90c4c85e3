"""Coherent-superposition error mitigation toolkit.

Dense density-matrix simulation of protocols that run a noisy computation
coherently across several branches (gate-based, measurement-based and
interferometric variants), together with their closed-form predictions and
experiment presets that reproduce the reference figures as data tables.
"""

from . import channels, cliffords, gb, ib, metrics, nested, qmath
from .channels import (
    KrausChannel,
    ProcessMatrix,
    canonicalize,
    chi_to_kraus,
    compose,
    dephasing,
    depolarizing,
    kraus_to_chi,
    random_channel,
    stinespring,
    tensor_channel,
)
from .metrics import FidelityReport, cj_fidelity, infidelity_ratio, state_fidelity, weighted_cj
from .qmath import DensityMatrix, SubsystemShape, embed, kron, partial_trace, project

__all__ = [
    "channels",
    "cliffords",
    "gb",
    "ib",
    "metrics",
    "nested",
    "qmath",
    "KrausChannel",
    "ProcessMatrix",
    "canonicalize",
    "chi_to_kraus",
    "compose",
    "dephasing",
    "depolarizing",
    "kraus_to_chi",
    "random_channel",
    "stinespring",
    "tensor_channel",
    "FidelityReport",
    "cj_fidelity",
    "infidelity_ratio",
    "state_fidelity",
    "weighted_cj",
    "DensityMatrix",
    "SubsystemShape",
    "embed",
    "kron",
    "partial_trace",
    "project",
]

__version__ = "0.1.0"
