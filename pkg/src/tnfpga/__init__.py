"""Tensor-network quantum circuit simulation with fixed-point systolic GEMM emulation."""

from .circuit import (
    Circuit,
    GateApp,
    GateKind,
    amplitude_oracle,
    build_test_circuit,
    gate_matrix,
    ghz_circuit,
    statevector_simulate,
)
from .fixed import FixedComplex, FixedContext, Fixed32, dequantize, fc_add, fc_mac, fc_mul, quantize
from .network import TensorNetwork, circuit_to_network, contract_network
from .paths import (
    ContractionPath,
    CostReport,
    PathError,
    SearchBudget,
    greedy_search,
    path_cost,
    select_path,
    stochastic_search,
)
from .systolic import ArrayConfig, GemmResult, gemm_naive, gemm_systolic
from .tensor import Index, Tensor, contract_pair, flatten_to_block_diag, self_contract, tensor_product

__version__ = "0.1.0"
