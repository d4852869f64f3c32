"""Fixed-point complex GEMM backends with cycle and MAC accounting.

``gemm_naive`` models a fully unrolled combinational multiplier: one model
cycle per output entry plus an optional operand load latency. This is an
idealised cost model, not a synthesis result.

``gemm_systolic`` emulates an output-stationary array of ``rows x cols``
processing elements. Output tiles are processed one after another with no
overlap. Inside a tile, row ``r`` of A enters from the left delayed ``r``
cycles and column ``c`` of B enters from the top delayed ``c`` cycles;
operands hop one PE per cycle and every PE holding a matched pair performs
one ``fc_mac``. The cycle counter ticks once per cycle in which any PE
fires, plus one drain cycle to read the accumulators out, giving
``K + rows + cols - 1`` cycles per tile.

Both backends accumulate each output in k order 0..K-1 through the same
``fc_mac``, so their products agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fixed import FixedComplex, FixedContext, mac_arrays


class GemmShapeError(ValueError):
    pass


@dataclass(frozen=True)
class ArrayConfig:
    rows: int = 4
    cols: int = 4
    dataflow: str = "output-stationary"

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"array must be at least 1x1, got {self.rows}x{self.cols}")
        if self.dataflow != "output-stationary":
            raise ValueError(f"unsupported dataflow {self.dataflow!r}")

    def resources(self) -> dict[str, int]:
        """Analytic PE/multiplier/adder counts (context only, not a synthesis estimate)."""
        pes = self.rows * self.cols
        return {"pes": pes, "real_multipliers": 4 * pes, "adders": 6 * pes}


@dataclass
class GemmResult:
    c: FixedComplex
    cycles: int
    macs: int
    saturated: bool = False
    tiles: int = 1
    tile_cycles: int = 0


def _check(a: FixedComplex, b: FixedComplex) -> tuple[int, int, int]:
    if len(a.shape) != 2 or len(b.shape) != 2:
        raise GemmShapeError("GEMM operands must be 2-D")
    m, k = a.shape
    k2, n = b.shape
    if k != k2:
        raise GemmShapeError(f"inner dimensions differ: {a.shape} x {b.shape}")
    return m, k, n


def gemm_naive(a: FixedComplex, b: FixedComplex, load_latency: int = 0) -> GemmResult:
    """Reference i, j, k loop of ``fc_mac``.

    The (i, j) accumulators are independent, so the loop over k is run on all
    of them at once; each entry still sees the k = 0..K-1 sequence.
    """
    m, k, n = _check(a, b)
    ctx = FixedContext()
    acc_re = np.zeros((m, n), np.int64)
    acc_im = np.zeros((m, n), np.int64)
    for kk in range(k):
        acc_re, acc_im, sat = mac_arrays(
            acc_re, acc_im,
            a.re[:, kk:kk + 1], a.im[:, kk:kk + 1],
            b.re[kk:kk + 1, :], b.im[kk:kk + 1, :],
        )
        ctx.flag(int(np.count_nonzero(sat)))
    cycles = m * n + 2 * load_latency
    return GemmResult(FixedComplex(acc_re, acc_im), cycles, m * n * k, ctx.saturated)


def tile_cycle_formula(k: int, rows: int, cols: int) -> int:
    return k + rows + cols - 1


def gemm_systolic(
    a: FixedComplex, b: FixedComplex, cfg: ArrayConfig | None = None, check_schedule: bool = True
) -> GemmResult:
    cfg = cfg or ArrayConfig()
    m, k, n = _check(a, b)
    pr, pc = cfg.rows, cfg.cols
    tr, tc = -(-m // pr), -(-n // pc)
    ctx = FixedContext()

    # zero-pad to whole tiles; padded lanes stream zeros and are not counted
    a_re = np.zeros((tr * pr, k), np.int64)
    a_im = np.zeros_like(a_re)
    a_re[:m], a_im[:m] = a.re, a.im
    b_re = np.zeros((k, tc * pc), np.int64)
    b_im = np.zeros_like(b_re)
    b_re[:, :n], b_im[:, :n] = b.re, b.im
    # per-tile feeds: A rows (tr, pr, k); B columns (tc, k, pc)
    fa_re, fa_im = a_re.reshape(tr, pr, k), a_im.reshape(tr, pr, k)
    fb_re, fb_im = b_re.reshape(k, tc, pc).transpose(1, 0, 2), b_im.reshape(k, tc, pc).transpose(1, 0, 2)

    grid = (tr, tc, pr, pc)
    acc_re = np.zeros(grid, np.int64)
    acc_im = np.zeros(grid, np.int64)
    ar_reg = np.zeros(grid, np.int64)
    ai_reg = np.zeros(grid, np.int64)
    br_reg = np.zeros(grid, np.int64)
    bi_reg = np.zeros(grid, np.int64)
    a_tag = np.full(grid, -1, np.int64)  # k index carried by the A operand, -1 = bubble
    b_tag = np.full(grid, -1, np.int64)
    fired = np.zeros((pr, pc), np.int64)  # MACs performed by each PE position

    real = np.zeros(grid, bool)
    real_rows = (np.arange(tr)[:, None] * pr + np.arange(pr)[None, :]) < m
    real_cols = (np.arange(tc)[:, None] * pc + np.arange(pc)[None, :]) < n
    real[...] = real_rows[:, None, :, None] & real_cols[None, :, None, :]

    r_idx = np.arange(pr)
    c_idx = np.arange(pc)
    busy_cycles = 0
    macs = 0
    t = 0
    while True:
        # operands advance one PE per cycle
        ar_reg[..., 1:] = ar_reg[..., :-1]
        ai_reg[..., 1:] = ai_reg[..., :-1]
        a_tag[..., 1:] = a_tag[..., :-1]
        br_reg[..., 1:, :] = br_reg[..., :-1, :]
        bi_reg[..., 1:, :] = bi_reg[..., :-1, :]
        b_tag[..., 1:, :] = b_tag[..., :-1, :]

        # skewed injection at the left and top edges
        ka = t - r_idx
        ok_a = (ka >= 0) & (ka < k)
        kb = t - c_idx
        ok_b = (kb >= 0) & (kb < k)
        a_tag[..., 0] = np.where(ok_a, ka, -1)[None, None, :]
        b_tag[..., 0, :] = np.where(ok_b, kb, -1)[None, None, :]
        kac = np.clip(ka, 0, max(k - 1, 0))
        kbc = np.clip(kb, 0, max(k - 1, 0))
        ar_reg[..., 0] = np.where(ok_a, fa_re[:, r_idx, kac], 0)[:, None, :]
        ai_reg[..., 0] = np.where(ok_a, fa_im[:, r_idx, kac], 0)[:, None, :]
        br_reg[..., 0, :] = np.where(ok_b, fb_re[:, kbc, c_idx], 0)[None, :, :]
        bi_reg[..., 0, :] = np.where(ok_b, fb_im[:, kbc, c_idx], 0)[None, :, :]

        live = (a_tag >= 0) | (b_tag >= 0)
        if not live.any() and t >= k:
            break
        fire = (a_tag >= 0) & (b_tag >= 0)
        if fire.any():
            if check_schedule:
                if np.any(a_tag[fire] != b_tag[fire]):
                    raise AssertionError(f"cycle {t}: PE received operands for different k")
                pos = fire[0, 0]
                # each PE must see k = 0, 1, 2, ... exactly once and in order
                if np.any(a_tag[0, 0][pos] != fired[pos]):
                    raise AssertionError(f"cycle {t}: PE received k out of sequence")
            nr, ni, sat = mac_arrays(acc_re, acc_im, ar_reg, ai_reg, br_reg, bi_reg)
            acc_re = np.where(fire, nr, acc_re)
            acc_im = np.where(fire, ni, acc_im)
            ctx.flag(int(np.count_nonzero(sat & fire & real)))
            fired += fire[0, 0]
            macs += int(np.count_nonzero(fire & real))
            busy_cycles += 1
        t += 1

    if check_schedule and np.any(fired != k):
        raise AssertionError("some PE missed part of its reduction")
    tile_cycles = busy_cycles + 1  # drain
    c_re = acc_re.transpose(0, 2, 1, 3).reshape(tr * pr, tc * pc)[:m, :n]
    c_im = acc_im.transpose(0, 2, 1, 3).reshape(tr * pr, tc * pc)[:m, :n]
    return GemmResult(
        FixedComplex(c_re, c_im),
        cycles=tr * tc * tile_cycles,
        macs=macs,
        saturated=ctx.saturated,
        tiles=tr * tc,
        tile_cycles=tile_cycles,
    )


@dataclass
class ContractionReplay:
    """Runs the per-step GEMMs of a contraction on one backend and totals them."""

    backend: str = "fixed-systolic"
    array: ArrayConfig = field(default_factory=ArrayConfig)
    load_latency: int = 0
    results: list[GemmResult] = field(default_factory=list)

    def __post_init__(self):
        if self.backend not in ("fixed-naive", "fixed-systolic"):
            raise ValueError(f"not a GEMM backend: {self.backend!r}")

    def run(self, a: FixedComplex, b: FixedComplex) -> GemmResult:
        if self.backend == "fixed-naive":
            res = gemm_naive(a, b, self.load_latency)
        else:
            res = gemm_systolic(a, b, self.array)
        self.results.append(res)
        return res

    @property
    def cycles(self) -> int:
        return sum(r.cycles for r in self.results)

    @property
    def macs(self) -> int:
        return sum(r.macs for r in self.results)

    @property
    def saturated(self) -> bool:
        return any(r.saturated for r in self.results)


def replay_contraction(pairs, backend: str = "fixed-systolic", array: ArrayConfig | None = None):
    """Run a sequence of independent (A, B) GEMMs; returns the replay with totals."""
    rep = ContractionReplay(backend, array or ArrayConfig())
    for a, b in pairs:
        rep.run(a, b)
    return rep
