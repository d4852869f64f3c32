"""Parameter sweeps over the test-circuit family and a standalone verifier."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .circuit import Circuit, amplitude_oracle, build_test_circuit, oracle_cap
from .network import BACKENDS, circuit_to_network, common_matrix_size, contract_network
from .paths import (
    ContractionPath,
    PathError,
    SearchBudget,
    greedy_search,
    path_cost,
    stochastic_search,
    validate_path,
)
from .systolic import ArrayConfig

log = logging.getLogger(__name__)

STRATEGIES = ("greedy", "stochastic")
SWEEP_SCHEMA_VERSION = 1
SWEEP_COLUMNS = (
    "n", "k", "seed", "strategy", "backend", "status",
    "search_wall_seconds", "samples", "peak_order", "peak_elems", "total_flops", "steps",
    "common_size", "model_cycles", "macs",
    "amplitude_re", "amplitude_im", "oracle_abs_err", "saturated",
)
WALL_CLOCK_COLUMNS = ("search_wall_seconds",)


@dataclass
class SweepSpec:
    n_values: list[int]
    k_values: list[int]
    seeds: list[int] = field(default_factory=lambda: [0])
    strategies: list[str] = field(default_factory=lambda: list(STRATEGIES))
    backends: list[str] = field(default_factory=lambda: list(BACKENDS))
    budget: SearchBudget = field(default_factory=lambda: SearchBudget(wall_clock_limit=600.0))
    array: ArrayConfig = field(default_factory=ArrayConfig)
    out_bits: str | None = None  # default all zeros
    max_float_elems: int = 1 << 24
    max_fixed_size: int = 256

    def __post_init__(self):
        for name in ("n_values", "k_values", "seeds", "strategies", "backends"):
            if not getattr(self, name):
                raise ValueError(f"sweep spec field {name!r} must be non-empty")
        bad = [n for n in self.n_values if n < 2 or n % 2]
        if bad:
            raise ValueError(f"qubit counts must be even and >= 2: {bad}")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ValueError(f"unknown strategy {s!r}")
        for b in self.backends:
            if b not in BACKENDS:
                raise ValueError(f"unknown backend {b!r}")

    @classmethod
    def from_dict(cls, d: dict) -> SweepSpec:
        d = dict(d)
        b = d.pop("budget", {}) or {}
        a = d.pop("array", {}) or {}
        return cls(budget=SearchBudget(**b), array=ArrayConfig(**a), **d)

    def to_dict(self) -> dict:
        d = asdict(self)
        return d


def _blank_row(n, k, seed, strategy, backend) -> dict:
    row = {c: "" for c in SWEEP_COLUMNS}
    row.update(n=n, k=k, seed=seed, strategy=strategy, backend=backend)
    return row


def _search(tn, strategy: str, budget: SearchBudget):
    t0 = time.monotonic()
    if strategy == "greedy":
        path = greedy_search(tn)
        samples = 1
    else:
        path, _, samples, _ = stochastic_search(tn, budget)
    return path, samples, time.monotonic() - t0


def run_cell(spec: SweepSpec, n: int, k: int, seed: int) -> list[dict]:
    """All rows for one (n, k, seed); never raises."""
    rows = []
    try:
        circuit = build_test_circuit(n, k, seed)
        out_bits = spec.out_bits[:n].ljust(n, "0") if spec.out_bits else "0" * n
        tn = circuit_to_network(circuit, out_bits)
        oracle = amplitude_oracle(circuit, out_bits) if n <= oracle_cap() else None
    except Exception as exc:  # noqa: BLE001 - a broken cell must not stop the sweep
        log.exception("cell n=%d k=%d seed=%d failed", n, k, seed)
        for strategy in spec.strategies:
            for backend in spec.backends:
                row = _blank_row(n, k, seed, strategy, backend)
                row["status"] = f"error: {exc}"
                rows.append(row)
        return rows

    for strategy in spec.strategies:
        try:
            path, samples, wall = _search(tn, strategy, spec.budget)
            cost = path_cost(tn, path)
            size = common_matrix_size(tn, path)
        except Exception as exc:  # noqa: BLE001
            log.exception("search failed")
            for backend in spec.backends:
                row = _blank_row(n, k, seed, strategy, backend)
                row["status"] = f"error: {exc}"
                rows.append(row)
            continue
        for backend in spec.backends:
            row = _blank_row(n, k, seed, strategy, backend)
            row.update(
                search_wall_seconds=f"{wall:.6f}", samples=samples,
                peak_order=cost.peak_order, peak_elems=cost.peak_elems,
                total_flops=cost.total_flops, steps=cost.steps,
            )
            fixed = backend != "float"
            if fixed:
                row["common_size"] = size
            if cost.peak_elems > spec.max_float_elems or (fixed and size > spec.max_fixed_size):
                row["status"] = "skipped"
                rows.append(row)
                continue
            try:
                res = contract_network(tn, path, backend, array=spec.array)
            except Exception as exc:  # noqa: BLE001
                log.exception("contraction failed")
                row["status"] = f"error: {exc}"
                rows.append(row)
                continue
            row.update(
                status="ok",
                amplitude_re=repr(res.value.real),
                amplitude_im=repr(res.value.imag),
                saturated=int(res.saturated),
            )
            if fixed:
                row.update(model_cycles=res.trace.total_cycles, macs=res.trace.total_macs)
            if oracle is not None:
                row["oracle_abs_err"] = f"{abs(res.value - oracle):.3e}"
            rows.append(row)
    return rows


def _row_key(spec: SweepSpec, row: dict):
    return (
        int(row["n"]), int(row["k"]), int(row["seed"]),
        STRATEGIES.index(row["strategy"]), BACKENDS.index(row["backend"]),
    )


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[dict]:
    cells = [(n, k, s) for n in spec.n_values for k in spec.k_values for s in spec.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_cell, spec, *cell) for cell in cells]
            rows = [r for f in futures for r in f.result()]
    else:
        rows = [r for cell in cells for r in run_cell(spec, *cell)]
    rows.sort(key=lambda r: _row_key(spec, r))
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def write_csv(rows: list[dict], path: str | Path) -> None:
    Path(path).write_text(rows_to_csv(rows))


DEFAULT_TOLERANCE = {"float": 1e-10, "fixed-naive": 1e-3, "fixed-systolic": 1e-3}


@dataclass
class VerifyReport:
    passed: bool
    backend: str
    value: complex | None = None
    oracle: complex | None = None
    abs_err: float | None = None
    tolerance: float | None = None
    message: str = ""
    step: int | None = None
    saturated: bool = False

    def summary(self) -> str:
        head = "PASS" if self.passed else "FAIL"
        parts = [head, f"backend={self.backend}"]
        if self.step is not None:
            parts.append(f"step={self.step}")
        if self.value is not None:
            parts.append(f"amplitude={self.value.real:.12g}{self.value.imag:+.12g}j")
        if self.oracle is not None:
            parts.append(f"oracle={self.oracle.real:.12g}{self.oracle.imag:+.12g}j")
        if self.abs_err is not None:
            parts.append(f"abs_err={self.abs_err:.3e} tol={self.tolerance:.1e}")
        if self.saturated:
            parts.append("saturated")
        if self.message:
            parts.append(self.message)
        return " ".join(parts)


def verify(
    circuit: Circuit,
    path: ContractionPath,
    backend: str = "float",
    out_bits: str | None = None,
    tolerance: float | None = None,
    array: ArrayConfig | None = None,
) -> VerifyReport:
    """Validate ``path``, contract it and compare against the statevector oracle."""
    out_bits = out_bits or "0" * circuit.n
    tol = DEFAULT_TOLERANCE[backend] if tolerance is None else tolerance
    tn = circuit_to_network(circuit, out_bits)
    try:
        validate_path(tn, path)
    except PathError as exc:
        return VerifyReport(False, backend, message=str(exc), step=exc.step, tolerance=tol)
    res = contract_network(tn, path, backend, array=array)
    if circuit.n > oracle_cap():
        return VerifyReport(True, backend, res.value, message="oracle skipped: above cap",
                            tolerance=tol, saturated=res.saturated)
    ref = amplitude_oracle(circuit, out_bits)
    err = abs(res.value - ref)
    return VerifyReport(err <= tol, backend, res.value, ref, err, tol, saturated=res.saturated)


def load_spec(path: str | Path) -> SweepSpec:
    return SweepSpec.from_dict(json.loads(Path(path).read_text()))
