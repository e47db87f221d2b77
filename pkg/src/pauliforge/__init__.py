"""Gate-set conversion for Pauli-string targets: algebra, compilers and search methods."""
from .pauli import PauliString, MappingGate, parse_pauli, format_pauli, action_space
from .compile import (GscInstance, SimultaneousSolution, make_instance, naive_individual,
                      naive_simultaneous, verify_gscd, metrics)

__version__ = "0.1.0"
