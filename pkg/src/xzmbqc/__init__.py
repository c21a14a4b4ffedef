"""Universal hypergraph states driven by X and Z measurements only."""

from .builder import DomainError, build_coloring, build_gn1, build_gnd, qubit_count, triple_index
from .compiler import Circuit, compile_plan, make_circuit, parse_circuit, random_circuit
from .engine import check_against_oracle, run_trial
from .hypergraph import Coloring, Hypergraph, decode, encode, validate
from .statevec import StateVector, fidelity, oracle_run
from .vbqc import run_vbqc
from .verifier import cover_protocol, honest_source, required_registers

__all__ = [
    "Circuit",
    "Coloring",
    "DomainError",
    "Hypergraph",
    "StateVector",
    "build_coloring",
    "build_gn1",
    "build_gnd",
    "check_against_oracle",
    "compile_plan",
    "cover_protocol",
    "decode",
    "encode",
    "fidelity",
    "honest_source",
    "make_circuit",
    "oracle_run",
    "parse_circuit",
    "qubit_count",
    "random_circuit",
    "required_registers",
    "run_trial",
    "run_vbqc",
    "triple_index",
    "validate",
]
