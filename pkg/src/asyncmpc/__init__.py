"""Asynchronous MPC against general adversary structures, on a simulated network."""

__version__ = "0.1.0"

from .field import Field, M61
from .structures import AdversaryStructure, SharingSpec, sharing_spec, q_condition, q_condition_spec
from .circuits import Circuit, random_circuit
