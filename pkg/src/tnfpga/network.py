"""Circuit amplitudes as closed tensor networks, contracted along a path.

Wire segments are named ``q{qubit}.{segment}``; segment 0 leaves the input
ket and each gate on the qubit starts a new segment. Node ids follow
construction order: input kets, gates, then output bras.

Fixed-point backends lower every pairwise step to one matrix product: the
left operand's remaining legs index rows, the shared legs (in left-operand
order) the inner dimension, and the right operand's remaining legs the
columns. All deployed matrices are zero-padded to one common square size.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, check_bits, gate_unitary
from .fixed import FixedComplex, FixedContext
from .paths import ContractionPath, iter_steps, leg_map, merge_legs
from .systolic import ArrayConfig, ContractionReplay
from .tensor import Index, Tensor, contract_pair, flatten_to_block_diag, shared_positions

BACKENDS = ("float", "fixed-naive", "fixed-systolic")
TRACE_COLUMNS = (
    "step", "left_node", "right_node", "shared_dims", "out_order", "out_elems", "macs", "cycles",
)


@dataclass
class TensorNetwork:
    nodes: dict[int, Tensor]
    labels: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        counts: dict[str, int] = {}
        dims: dict[str, int] = {}
        for t in self.nodes.values():
            for leg in t.legs:
                counts[leg.id] = counts.get(leg.id, 0) + 1
                if dims.setdefault(leg.id, leg.dim) != leg.dim:
                    raise ValueError(f"index {leg.id!r} used with dims {dims[leg.id]} and {leg.dim}")
        over = [i for i, c in counts.items() if c > 2]
        if over:
            raise ValueError(f"indices on more than two legs: {over}")
        self._counts = counts

    @property
    def open_legs(self) -> list[Index]:
        return [leg for t in self.nodes.values() for leg in t.legs if self._counts[leg.id] == 1]

    @property
    def closed(self) -> bool:
        return not self.open_legs

    def __len__(self) -> int:
        return len(self.nodes)

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {"id": nid, "label": self.labels.get(nid, ""), "tensor": t.to_dict()}
                for nid, t in self.nodes.items()
            ]
        }

    @classmethod
    def from_dict(cls, d: dict) -> TensorNetwork:
        nodes, labels = {}, {}
        for entry in d["nodes"]:
            nid = int(entry["id"])
            nodes[nid] = Tensor.from_dict(entry["tensor"])
            labels[nid] = entry.get("label", "")
        return cls(nodes, labels)


def basis_vector(bit: str) -> np.ndarray:
    v = np.zeros(2, dtype=np.complex128)
    v[int(bit)] = 1.0
    return v


def circuit_to_network(c: Circuit, out_bits: str, in_bits: str | None = None) -> TensorNetwork:
    """Closed network whose full contraction is ``<out_bits| U |in_bits>``."""
    in_bits = check_bits(in_bits or "0" * c.n, c.n)
    check_bits(out_bits, c.n)
    seg = [0] * c.n
    nodes: dict[int, Tensor] = {}
    labels: dict[int, str] = {}

    def wire(q: int) -> Index:
        return Index(f"q{q}.{seg[q]}")

    for q in range(c.n):
        nid = len(nodes)
        nodes[nid] = Tensor([wire(q)], basis_vector(in_bits[q]), [True])
        labels[nid] = f"ket{in_bits[q]}[q{q}]"
    for g in c.gates:
        ins = [wire(q) for q in g.qubits]
        for q in g.qubits:
            seg[q] += 1
        outs = [wire(q) for q in g.qubits]
        a = len(g.qubits)
        u = gate_unitary(g).reshape((2,) * (2 * a))
        nid = len(nodes)
        nodes[nid] = Tensor(outs + ins, u, [True] * a + [False] * a)
        labels[nid] = f"{g.kind.value}{list(g.qubits)}"
    for q in range(c.n):
        nid = len(nodes)
        # bra <b| is the conjugate transpose of the ket
        nodes[nid] = Tensor([wire(q)], basis_vector(out_bits[q]).conj(), [False])
        labels[nid] = f"bra{out_bits[q]}[q{q}]"
    return TensorNetwork(nodes, labels)


@dataclass
class TraceStep:
    step: int
    left_node: int
    right_node: int
    new_node: int
    left_order: int
    right_order: int
    shared_dims: tuple[int, ...]
    out_order: int
    out_elems: int
    macs: int | None = None
    cycles: int | None = None
    saturated: bool = False
    gemm_shape: tuple[int, int, int] | None = None


@dataclass
class ContractionTrace:
    backend: str
    steps: list[TraceStep] = field(default_factory=list)
    common_size: int | None = None
    precontracted: int = 0
    input_saturated: bool = False

    @property
    def total_macs(self) -> int:
        return sum(s.macs or 0 for s in self.steps)

    @property
    def total_cycles(self) -> int:
        return sum(s.cycles or 0 for s in self.steps)

    @property
    def total_elems(self) -> int:
        return sum(s.out_elems for s in self.steps)

    @property
    def peak_elems(self) -> int:
        return max((s.out_elems for s in self.steps), default=0)

    @property
    def saturated(self) -> bool:
        return self.input_saturated or any(s.saturated for s in self.steps)

    def rows(self) -> list[dict]:
        out = []
        for s in self.steps:
            out.append({
                "step": s.step,
                "left_node": s.left_node,
                "right_node": s.right_node,
                "shared_dims": "x".join(map(str, s.shared_dims)),
                "out_order": s.out_order,
                "out_elems": s.out_elems,
                "macs": "" if s.macs is None else s.macs,
                "cycles": "" if s.cycles is None else s.cycles,
            })
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=TRACE_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(self.rows())
        return buf.getvalue()


@dataclass
class ContractionResult:
    value: complex
    trace: ContractionTrace
    raw: FixedComplex | None = None

    @property
    def saturated(self) -> bool:
        return self.trace.saturated


def lowering(left: tuple, right: tuple) -> tuple[list[int], list[int], int, int, int]:
    """Axis permutations and (rows, inner, cols) for the matmul form of one step."""
    rids = {i for i, _ in right}
    lpos = {i: p for p, (i, _) in enumerate(left)}
    free_l = [p for p, (i, _) in enumerate(left) if i not in rids]
    sh_l = [p for p, (i, _) in enumerate(left) if i in rids]
    rpos = {i: p for p, (i, _) in enumerate(right)}
    sh_r = [rpos[left[p][0]] for p in sh_l]
    free_r = [p for p, (i, _) in enumerate(right) if i not in lpos]
    rows = math.prod(left[p][1] for p in free_l)
    inner = math.prod(left[p][1] for p in sh_l)
    cols = math.prod(right[p][1] for p in free_r)
    return free_l + sh_l, sh_r + free_r, rows, inner, cols


def _next_pow2(x: int) -> int:
    return 1 << max(0, (x - 1).bit_length())


def common_matrix_size(tn: TensorNetwork, path: ContractionPath, skip: int = 0) -> int:
    """Largest lowered operand dimension over steps ``skip..``, rounded up to a power of two."""
    biggest = 1
    for s, (_, _, _, la, lb, _) in enumerate(iter_steps(tn, path)):
        if s < skip:
            continue
        _, _, r, k, c = lowering(la, lb)
        biggest = max(biggest, r, k, c)
    return _next_pow2(biggest)


def deployed_gate_matrices(tn: TensorNetwork, size: int | None = None) -> dict[int, np.ndarray]:
    """Square matrix form of every order >= 2 node, padded to ``size``.

    Order-2 nodes are taken as is; higher orders are laid out block-diagonally
    over their trailing (out, in) matrix pair. This is the deployment view of
    the gate set; contraction itself uses :func:`lowering`.
    """
    mats = {}
    for nid, t in tn.nodes.items():
        if t.order < 2:
            continue
        m = flatten_to_block_diag(t).values
        mats[nid] = m
    side = size or _next_pow2(max((max(m.shape) for m in mats.values()), default=1))
    out = {}
    for nid, m in mats.items():
        if max(m.shape) > side:
            raise ValueError(f"node {nid} needs {m.shape}, larger than common size {side}")
        pad = np.zeros((side, side), dtype=np.complex128)
        pad[: m.shape[0], : m.shape[1]] = m
        out[nid] = pad
    return out


def contract_network(
    tn: TensorNetwork,
    path: ContractionPath,
    backend: str = "float",
    array: ArrayConfig | None = None,
    common_size: int | None = None,
    precontract: int = 0,
    load_latency: int = 0,
) -> ContractionResult:
    """Replay ``path`` pairwise on the chosen arithmetic backend.

    ``precontract`` runs the first steps in floating point on the host before
    quantising, deploying only the remaining steps to the fixed backend.
    """
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
    steps = list(iter_steps(tn, path))  # validates the whole path up front
    trace = ContractionTrace(backend)
    live: dict[int, object] = dict(tn.nodes)
    legs: dict[int, tuple] = leg_map(tn)

    if backend == "float":
        for s, (new, a, b, la, lb, out) in enumerate(steps):
            ta, tb = live.pop(a), live.pop(b)
            tab = contract_pair(ta, tb)
            live[new] = tab
            shared = tuple(ta.legs[i].dim for i in shared_positions(ta, tb)[0])
            trace.steps.append(TraceStep(s, a, b, new, ta.order, tb.order, shared, tab.order, tab.size))
        (final,) = live.values()
        return ContractionResult(_scalar(final), trace)

    precontract = max(0, min(precontract, len(steps)))
    size = common_matrix_size(tn, path, precontract)
    if common_size is not None:
        if common_size < size:
            raise ValueError(f"common size {common_size} smaller than required {size}")
        if common_size & (common_size - 1):
            raise ValueError("common size must be a power of two")
        size = common_size
    trace.common_size = size
    trace.precontracted = precontract
    replay = ContractionReplay(backend, array or ArrayConfig(), load_latency)
    ctx = FixedContext()

    for s, (new, a, b, la, lb, out) in enumerate(steps[:precontract]):
        ta, tb = live.pop(a), live.pop(b)
        tab = contract_pair(ta, tb)
        live[new] = tab
        shared = tuple(ta.legs[i].dim for i in shared_positions(ta, tb)[0])
        trace.steps.append(TraceStep(s, a, b, new, ta.order, tb.order, shared, tab.order, tab.size))

    fixed = {nid: FixedComplex.from_complex(t.values, ctx) for nid, t in live.items()}
    for s, (new, a, b, la, lb, out) in enumerate(steps[precontract:], start=precontract):
        fa, fb = fixed.pop(a), fixed.pop(b)
        perm_a, perm_b, r, k, c = lowering(la, lb)
        ma = fa.transpose(perm_a).reshape(r, k)
        mb = fb.transpose(perm_b).reshape(k, c)
        res = replay.run(_pad(ma, size), _pad(mb, size))
        prod = res.c[:r, :c].reshape(tuple(d for _, d in out))
        fixed[new] = prod
        trace.steps.append(TraceStep(
            s, a, b, new, len(la), len(lb), _shared_dims(la, lb), len(out), math.prod(d for _, d in out),
            macs=res.macs, cycles=res.cycles, saturated=res.saturated, gemm_shape=(r, k, c),
        ))
    trace.input_saturated = ctx.saturated
    (final,) = fixed.values()
    if final.shape != ():
        raise ValueError(f"network is not closed: final tensor has shape {final.shape}")
    return ContractionResult(complex(final.to_complex()), trace, final)


def _shared_dims(la, lb) -> tuple[int, ...]:
    rids = {i for i, _ in lb}
    return tuple(d for i, d in la if i in rids)


def _pad(m: FixedComplex, size: int) -> FixedComplex:
    r, c = m.shape
    if (r, c) == (size, size):
        return m
    re = np.zeros((size, size), np.int64)
    im = np.zeros((size, size), np.int64)
    re[:r, :c] = m.re
    im[:r, :c] = m.im
    return FixedComplex(re, im)


def _scalar(t: Tensor) -> complex:
    if t.order:
        raise ValueError(f"network is not closed: final tensor has order {t.order}")
    return t.item()


def amplitude(
    c: Circuit,
    out_bits: str,
    path: ContractionPath | None = None,
    backend: str = "float",
    in_bits: str | None = None,
    **kwargs,
) -> complex:
    """Convenience wrapper: build, pick a greedy path if none given, contract."""
    from .paths import greedy_search

    tn = circuit_to_network(c, out_bits, in_bits)
    path = path or greedy_search(tn)
    return contract_network(tn, path, backend, **kwargs).value


def dump_network(tn: TensorNetwork) -> str:
    return json.dumps(tn.to_dict())


def load_network(text: str) -> TensorNetwork:
    return TensorNetwork.from_dict(json.loads(text))
