"""Dense complex tensors with labelled legs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg


class DimensionMismatchError(ValueError):
    """Shared legs disagree on their dimension."""


@dataclass(frozen=True)
class Index:
    id: str
    dim: int = 2

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"index {self.id!r} has non-positive dim {self.dim}")


class Tensor:
    """Complex array whose axes are the listed legs, in order.

    ``upper`` marks each leg as contravariant (True) or covariant (False);
    it is metadata only and never restricts which legs may be contracted.
    Legs default to the first half upper, the rest lower.
    """

    __slots__ = ("legs", "values", "upper")

    def __init__(self, legs: Sequence[Index], values, upper: Sequence[bool] | None = None):
        legs = tuple(legs)
        values = np.array(values, dtype=np.complex128)
        dims = tuple(leg.dim for leg in legs)
        if values.shape != dims:
            if values.size != int(np.prod(dims, dtype=np.int64)):
                raise ValueError(f"values of size {values.size} do not fit legs {dims}")
            values = values.reshape(dims)
        ids = [leg.id for leg in legs]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate leg ids in {ids}")
        if upper is None:
            p = (len(legs) + 1) // 2
            upper = [True] * p + [False] * (len(legs) - p)
        upper = tuple(bool(u) for u in upper)
        if len(upper) != len(legs):
            raise ValueError("upper flags must match legs")
        values.setflags(write=False)
        self.legs = legs
        self.values = values
        self.upper = upper

    @classmethod
    def scalar(cls, value: complex) -> Tensor:
        return cls((), np.asarray(value, dtype=np.complex128))

    @classmethod
    def matrix(cls, m, row: str, col: str) -> Tensor:
        m = np.asarray(m, dtype=np.complex128)
        return cls((Index(row, m.shape[0]), Index(col, m.shape[1])), m, (True, False))

    @property
    def order(self) -> int:
        return len(self.legs)

    @property
    def valence(self) -> tuple[int, int]:
        p = sum(self.upper)
        return p, self.order - p

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def size(self) -> int:
        return int(self.values.size)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(leg.id for leg in self.legs)

    def item(self) -> complex:
        if self.order:
            raise ValueError(f"tensor of order {self.order} is not a scalar")
        return complex(self.values)

    def __repr__(self) -> str:
        return f"Tensor(legs={list(self.ids)}, shape={self.shape})"

    def to_dict(self) -> dict:
        flat = self.values.reshape(-1)
        p, q = self.valence
        return {
            "legs": [{"id": leg.id, "dim": leg.dim} for leg in self.legs],
            "valence": [p, q],
            "values": [[float(z.real), float(z.imag)] for z in flat],
        }

    @classmethod
    def from_dict(cls, d: dict) -> Tensor:
        legs = [Index(str(leg["id"]), int(leg["dim"])) for leg in d["legs"]]
        p, q = d.get("valence", [len(legs), 0])
        if p + q != len(legs):
            raise ValueError(f"valence {p, q} does not match {len(legs)} legs")
        vals = np.array([complex(re, im) for re, im in d["values"]], dtype=np.complex128)
        return cls(legs, vals, [True] * p + [False] * q)

    def dumps(self) -> str:
        return json.dumps(self.to_dict())


def tensor_product(t: Tensor, w: Tensor) -> Tensor:
    """Outer product, ``t``'s legs first. For matrices this is ``np.kron``
    once legs are regrouped as (rows_t, rows_w, cols_t, cols_w)."""
    clash = set(t.ids) & set(w.ids)
    if clash:
        raise ValueError(f"tensor product operands share leg ids {sorted(clash)}")
    values = np.multiply.outer(t.values, w.values)
    return Tensor(t.legs + w.legs, values, t.upper + w.upper)


def shared_positions(t: Tensor, w: Tensor) -> tuple[list[int], list[int]]:
    """Positions of shared legs, ordered by their position in ``t``."""
    w_pos = {leg.id: i for i, leg in enumerate(w.legs)}
    ta, wa = [], []
    for i, leg in enumerate(t.legs):
        j = w_pos.get(leg.id)
        if j is None:
            continue
        if w.legs[j].dim != leg.dim:
            raise DimensionMismatchError(
                f"leg {leg.id!r} has dim {leg.dim} on one side and {w.legs[j].dim} on the other"
            )
        ta.append(i)
        wa.append(j)
    return ta, wa


def contract_pair(t: Tensor, w: Tensor) -> Tensor:
    """Sum over every leg id present in both tensors.

    The result keeps ``t``'s remaining legs then ``w``'s remaining legs, each
    in their original order. With no shared legs this is the tensor product.
    """
    ta, wa = shared_positions(t, w)
    values = np.tensordot(t.values, w.values, axes=(ta, wa))
    legs = [leg for i, leg in enumerate(t.legs) if i not in ta]
    legs += [leg for j, leg in enumerate(w.legs) if j not in wa]
    upper = [u for i, u in enumerate(t.upper) if i not in ta]
    upper += [u for j, u in enumerate(w.upper) if j not in wa]
    return Tensor(legs, values, upper)


def self_contract(t: Tensor, a: int, b: int) -> Tensor:
    """Trace over legs at positions ``a`` and ``b``."""
    if a == b:
        raise ValueError("self-contraction needs two distinct legs")
    n = t.order
    if not (0 <= a < n and 0 <= b < n):
        raise ValueError(f"leg positions {a}, {b} out of range for order {n}")
    if t.legs[a].dim != t.legs[b].dim:
        raise DimensionMismatchError(
            f"cannot trace legs of dims {t.legs[a].dim} and {t.legs[b].dim}"
        )
    values = np.trace(t.values, axis1=a, axis2=b)
    keep = [i for i in range(n) if i not in (a, b)]
    return Tensor([t.legs[i] for i in keep], values, [t.upper[i] for i in keep])


def flatten_to_block_diag(t: Tensor, row: str | None = None, col: str | None = None) -> Tensor:
    """Lay the trailing-matrix slices of ``t`` along a block diagonal.

    Slices are taken over every assignment of the leading legs, enumerated
    row-major, and become consecutive diagonal blocks of a (1,1) tensor.
    """
    if t.order < 2:
        raise ValueError(f"need order >= 2 to flatten, got {t.order}")
    r_leg, c_leg = t.legs[-2], t.legs[-1]
    if t.order == 2:
        return t
    lead = t.shape[:-2]
    blocks = [t.values[idx] for idx in np.ndindex(lead)]
    mat = scipy.linalg.block_diag(*blocks)
    return Tensor.matrix(
        mat,
        row if row is not None else f"{r_leg.id}:bd",
        col if col is not None else f"{c_leg.id}:bd",
    )
