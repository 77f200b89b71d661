"""Nested lattice pairs and coset coding.

The fine lattice is split into ``det J`` cosets of the coarse lattice
``G_c = G_f J``.  Coset ``i`` is labelled by the mixed-radix digits of
``i`` over the diagonal of ``J``; its representative is ``G_f digits(i)``
reduced into the coarse Voronoi cell.  Any fixed bijection would do for
correctness; this one is O(N) to invert.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InvalidParameterError
from .lattice import Lattice, cvp, make_lattice, mod_lattice, stretch_lattice

DEFAULT_TABLE_CAP = 1 << 20


@dataclass(frozen=True, eq=False)
class NestedPair:
    fine: Lattice
    coarse: Lattice
    nesting: tuple[int, ...]
    rate: float

    @property
    def dim(self) -> int:
        return self.fine.dim

    @property
    def det(self) -> int:
        return math.prod(self.nesting)

    @property
    def self_similar(self) -> bool:
        return len(set(self.nesting)) == 1

    @property
    def gamma(self) -> int | None:
        """Common nesting ratio when ``coarse = gamma * fine``, else None."""
        return self.nesting[0] if self.self_similar else None

    @property
    def bits_per_frame(self) -> int:
        """Whole message bits one frame can carry (``floor(log2 det J)``)."""
        return self.det.bit_length() - 1

    def describe(self) -> str:
        f = self.fine
        name = f"Z{f.dim}" if f.kind == "ZN" else f.kind
        return f"{name}/J=diag({','.join(map(str, self.nesting))})"


@dataclass(frozen=True, eq=False)
class CosetTable:
    representatives: np.ndarray
    index_radices: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.representatives)


def _as_nesting(nesting, dim: int | None) -> tuple[int, ...]:
    if isinstance(nesting, (int, np.integer)):
        if dim is None:
            raise InvalidParameterError("a scalar nesting ratio needs the lattice dimension")
        nesting = [nesting] * dim
    out = []
    for v in nesting:
        if isinstance(v, bool) or not float(v).is_integer() or v < 1:
            raise InvalidParameterError(f"nesting entries must be positive integers, got {list(nesting)}")
        out.append(int(v))
    return tuple(out)


def build_nested(kind: str, scale: float, nesting, dim: int | None = None) -> NestedPair:
    """Fine lattice ``scale * kind`` and coarse lattice ``G_f diag(nesting)``.

    ``nesting`` is the diagonal of J, or a single ratio for the self-similar case.
    """
    fine = make_lattice(kind, scale, dim if dim is not None else (
        None if isinstance(nesting, (int, np.integer)) else len(nesting)))
    diag = _as_nesting(nesting, fine.dim)
    if len(diag) != fine.dim:
        raise InvalidParameterError(f"nesting diagonal has {len(diag)} entries for a {fine.dim}-dimensional lattice")
    coarse = stretch_lattice(fine, diag)
    rate = math.log2(math.prod(diag)) / fine.dim
    return NestedPair(fine=fine, coarse=coarse, nesting=diag, rate=rate)


def nested_for_rate(kind: str, scale: float, rate: int, dim: int | None = None) -> NestedPair:
    """Self-similar pair with ``J = 2^rate I`` (``Lambda_c = scale 2^rate Lambda``)."""
    if int(rate) != rate or rate < 0:
        raise InvalidParameterError(f"rate must be a non-negative integer, got {rate}")
    fine = make_lattice(kind, scale, dim)
    return build_nested(kind, scale, [2 ** int(rate)] * fine.dim)


def _digits(index, radices) -> np.ndarray:
    index = np.asarray(index, dtype=np.int64)
    out = np.empty(index.shape + (len(radices),), dtype=np.int64)
    rest = index.copy()
    for k, r in enumerate(radices):
        out[..., k] = rest % r
        rest //= r
    return out


def _undigits(digits, radices) -> np.ndarray:
    idx = np.zeros(digits.shape[:-1], dtype=np.int64)
    for k in range(len(radices) - 1, -1, -1):
        idx = idx * radices[k] + digits[..., k]
    return idx


def coset_representatives(pair: NestedPair, cap: int = DEFAULT_TABLE_CAP) -> CosetTable:
    if pair.det > cap:
        raise CapacityError(f"det J = {pair.det} exceeds the coset table cap of {cap}")
    digits = _digits(np.arange(pair.det), pair.nesting)
    reps = mod_lattice(pair.coarse, pair.fine.point(digits))
    reps.setflags(write=False)
    return CosetTable(representatives=reps, index_radices=pair.nesting)


def _check_index(pair: NestedPair, i) -> np.ndarray:
    i = np.asarray(i)
    if not np.issubdtype(i.dtype, np.integer):
        if not np.all(np.mod(i, 1) == 0):
            raise InvalidParameterError("coset indices must be integers")
        i = i.astype(np.int64)
    if np.any((i < 0) | (i >= pair.det)):
        raise InvalidParameterError(f"coset index out of range [0, {pair.det})")
    return i


def quantize_to_coset(pair: NestedPair, table: CosetTable, i, s) -> np.ndarray:
    """Nearest point of coset ``d_i + Lambda_c`` to ``s``.

    ``i`` broadcasts against the leading dimensions of ``s``.
    """
    i = _check_index(pair, i)
    s = np.asarray(s, dtype=float)
    d = table.representatives[i]
    return cvp(pair.coarse, s - d) + d


def coset_index_of(pair: NestedPair, point) -> np.ndarray:
    """Label of the coset containing the fine-lattice point(s) ``point``."""
    reduced = mod_lattice(pair.coarse, point)
    z = np.rint(pair.fine.coefficients(reduced.reshape(-1, pair.dim)))
    digits = np.mod(z, np.array(pair.nesting)).astype(np.int64)
    return _undigits(digits, pair.nesting).reshape(np.shape(point)[:-1])


def decode_coset(pair: NestedPair, table: CosetTable, y) -> np.ndarray:
    """Minimum-distance coset decision: ``mod(Q_f(y), Lambda_c)`` mapped back to its label."""
    return coset_index_of(pair, cvp(pair.fine, y))


def min_coset_distance(table: CosetTable) -> float:
    """Smallest distance between two distinct cosets (representatives are already reduced)."""
    if len(table) < 2:
        return math.inf
    return float(np.linalg.norm(table.representatives[1:], axis=1).min())


def bits_to_indices(bits, k: int) -> np.ndarray:
    """Pack a flat 0/1 array into k-bit indices, most significant bit first."""
    bits = np.asarray(bits, dtype=np.int64).reshape(-1, k)
    weights = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
    return bits @ weights


def indices_to_bits(indices, k: int) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64).reshape(-1, 1)
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    return ((idx >> shifts) & 1).astype(np.uint8).reshape(-1)
