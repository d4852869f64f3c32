"""Circuit IR, gate matrices, the layered test-circuit family and a
statevector reference simulator.

Basis ordering follows the Kronecker convention: qubit 0 is the most
significant bit, so bitstring ``"b0 b1 ... b(n-1)"`` indexes the state
vector at ``int(bitstring, 2)``.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .tensor import Index, Tensor

DEFAULT_ORACLE_CAP = 14
ORACLE_CAP_ENV = "TNFPGA_ORACLE_CAP"


class GateKind(str, Enum):
    H = "H"
    X = "X"
    CNOT = "CNOT"
    CZ = "CZ"
    RZ = "RZ"
    RX = "RX"

    @property
    def arity(self) -> int:
        return 2 if self in (GateKind.CNOT, GateKind.CZ) else 1

    @property
    def parametric(self) -> bool:
        return self in (GateKind.RZ, GateKind.RX)


_SQRT1_2 = 1 / math.sqrt(2)
_FIXED = {
    GateKind.H: np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT1_2,
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.CNOT: np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    GateKind.CZ: np.diag([1, 1, 1, -1]).astype(complex),
}


@dataclass(frozen=True)
class GateApp:
    kind: GateKind
    qubits: tuple[int, ...]
    theta: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != self.kind.arity:
            raise ValueError(f"{self.kind.value} acts on {self.kind.arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit in {self.qubits}")
        if self.kind.parametric and self.theta is None:
            raise ValueError(f"{self.kind.value} needs an angle")
        if not self.kind.parametric and self.theta is not None:
            raise ValueError(f"{self.kind.value} takes no angle")

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "qubits": list(self.qubits)}
        if self.theta is not None:
            d["theta"] = self.theta
        return d


@dataclass(frozen=True)
class Circuit:
    n: int
    gates: tuple[GateApp, ...] = ()
    k: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("circuit needs at least one qubit")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(q < 0 or q >= self.n for q in g.qubits):
                raise ValueError(f"gate {g} addresses a qubit outside 0..{self.n - 1}")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "seed": self.seed,
            "gates": [g.to_dict() for g in self.gates],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> Circuit:
        gates = [GateApp(GateKind(g["kind"]), tuple(g["qubits"]), g.get("theta")) for g in d["gates"]]
        return cls(int(d["n"]), tuple(gates), int(d.get("k", 0)), int(d.get("seed", 0)))

    @classmethod
    def loads(cls, text: str) -> Circuit:
        return cls.from_dict(json.loads(text))


def gate_unitary(g: GateApp) -> np.ndarray:
    """Matrix of ``g`` in the basis of its own qubits, first qubit most significant."""
    if g.kind is GateKind.RZ:
        h = g.theta / 2
        return np.diag([np.exp(-1j * h), np.exp(1j * h)])
    if g.kind is GateKind.RX:
        c, s = math.cos(g.theta / 2), math.sin(g.theta / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    return _FIXED[g.kind].copy()


def gate_matrix(g: GateApp, legs_per_qubit: bool = False) -> Tensor:
    """Gate as a (1,1) tensor, or as a tensor with an out and an in leg per qubit.

    In the per-qubit form legs are ``out_0, ..., out_{a-1}, in_0, ..., in_{a-1}``
    with ids ``"o{q}"``/``"i{q}"``.
    """
    u = gate_unitary(g)
    a = g.kind.arity
    if not legs_per_qubit:
        return Tensor.matrix(u, "out", "in")
    legs = [Index(f"o{q}") for q in g.qubits] + [Index(f"i{q}") for q in g.qubits]
    return Tensor(legs, u.reshape((2,) * (2 * a)), [True] * a + [False] * a)


def rotation_angle(seed: int, layer: int, qubit: int) -> float:
    """Angle in [0, 2*pi) for rotation ``layer`` on ``qubit``.

    Drawn as the first ``random()`` of NumPy's PCG64 bit generator seeded
    with ``SeedSequence([seed, layer, qubit])``. Layer ``2r`` is the RZ
    layer of round ``r`` and ``2r + 1`` its RX layer.
    """
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, layer, qubit])
    return float(np.random.Generator(np.random.PCG64(ss)).random()) * 2 * math.pi


def build_test_circuit(n: int, k: int, seed: int = 0) -> Circuit:
    """Layered benchmark circuit: H wall, ``k`` coupling rounds, H wall.

    Each round applies CNOT on (0,1),(2,3),..., RZ on every qubit, CZ on
    (1,2),(3,4),..., then RX on every qubit.
    """
    if n < 2 or n % 2:
        raise ValueError(f"test circuit needs an even qubit count >= 2, got {n}")
    if k < 1:
        raise ValueError(f"need at least one round, got {k}")
    gates: list[GateApp] = [GateApp(GateKind.H, (q,)) for q in range(n)]
    for r in range(k):
        gates += [GateApp(GateKind.CNOT, (q, q + 1)) for q in range(0, n - 1, 2)]
        gates += [GateApp(GateKind.RZ, (q,), rotation_angle(seed, 2 * r, q)) for q in range(n)]
        gates += [GateApp(GateKind.CZ, (q, q + 1)) for q in range(1, n - 1, 2)]
        gates += [GateApp(GateKind.RX, (q,), rotation_angle(seed, 2 * r + 1, q)) for q in range(n)]
    gates += [GateApp(GateKind.H, (q,)) for q in range(n)]
    return Circuit(n, tuple(gates), k, seed)


def expected_gate_count(n: int, k: int) -> int:
    return 2 * n + k * (n // 2 + n + (n // 2 - 1) + n)


def ghz_circuit(n: int = 3) -> Circuit:
    gates = [GateApp(GateKind.H, (0,))] + [GateApp(GateKind.CNOT, (0, q)) for q in range(1, n)]
    return Circuit(n, tuple(gates))


def oracle_cap() -> int:
    return int(os.environ.get(ORACLE_CAP_ENV, DEFAULT_ORACLE_CAP))


class OracleCapError(MemoryError):
    """Refusing to allocate a statevector above the oracle cap."""


def apply_gate(state: np.ndarray, g: GateApp, n: int) -> np.ndarray:
    """Apply ``g`` to a length-``2**n`` state by reshaping onto its qubits."""
    a = g.kind.arity
    u = gate_unitary(g).reshape((2,) * (2 * a))
    psi = state.reshape((2,) * n)
    out = np.tensordot(u, psi, axes=(list(range(a, 2 * a)), list(g.qubits)))
    # tensordot puts the gate's output axes first; move them back
    return np.moveaxis(out, list(range(a)), list(g.qubits)).reshape(-1)


def _check_cap(n: int, cap: int | None) -> None:
    cap = oracle_cap() if cap is None else cap
    if n > cap:
        raise OracleCapError(f"{n} qubits exceeds statevector oracle cap {cap}")


def statevector_simulate(c: Circuit, cap: int | None = None, in_bits: str | None = None) -> np.ndarray:
    _check_cap(c.n, cap)
    state = np.zeros(2**c.n, dtype=np.complex128)
    state[int(in_bits, 2) if in_bits else 0] = 1.0
    for g in c.gates:
        state = apply_gate(state, g, c.n)
    return state


def check_bits(bits: str, n: int) -> str:
    if len(bits) != n or set(bits) - {"0", "1"}:
        raise ValueError(f"expected a {n}-character bitstring of 0/1, got {bits!r}")
    return bits


def amplitude_oracle(c: Circuit, bits: str, cap: int | None = None, in_bits: str | None = None) -> complex:
    check_bits(bits, c.n)
    if in_bits is not None:
        check_bits(in_bits, c.n)
    return complex(statevector_simulate(c, cap, in_bits)[int(bits, 2)])
