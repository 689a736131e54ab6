"""Polar decompositions of bipartite states, their horizontal dynamics and the toroidal partition."""

from .connection import HamiltonianSpec, schrodinger_evolve, split_hamiltonian
from .elliptic import legendre_pi
from .flow import PolarTrajectory, beta_matrices, coupling_elements, evolve_polar, flow_rhs
from .hilbert import (
    BipartiteSpace,
    DensityOperator,
    PolarFrame,
    StateVector,
    ValidationError,
    polar_decompose,
    reconstruct,
    reduced_trace,
)
from .toroid import PartitionLabel, RightToroid, ToroidPoint, locate
from .tracker import ConditionalState, JumpEvent, conditional_state, iterate_conditional, track_labels

__all__ = [
    "BipartiteSpace",
    "ConditionalState",
    "DensityOperator",
    "HamiltonianSpec",
    "JumpEvent",
    "PartitionLabel",
    "PolarFrame",
    "PolarTrajectory",
    "RightToroid",
    "StateVector",
    "ToroidPoint",
    "ValidationError",
    "beta_matrices",
    "conditional_state",
    "coupling_elements",
    "evolve_polar",
    "flow_rhs",
    "iterate_conditional",
    "legendre_pi",
    "locate",
    "polar_decompose",
    "reconstruct",
    "reduced_trace",
    "schrodinger_evolve",
    "split_hamiltonian",
    "track_labels",
]
