"""Lattices used for quantization: Z^N, A2, D3, D4 and E8.

A lattice is ``{G @ z : z integer}`` where the *columns* of ``G`` are the
basis vectors.  All decoders take arrays of shape ``(..., N)`` and work on
every leading index at once.

Exact distance ties (a measure-zero event) are broken deterministically in
favour of the candidate whose coordinate vector is lexicographically
smallest.  The embedding schemes rely on this rule being identical for the
coarse and fine lattices when samples land exactly on a cell boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from itertools import product

import numpy as np

from .errors import CapacityError, InvalidParameterError

KINDS = ("ZN", "A2", "D3", "D4", "E8")

# generator matrices exactly as tabulated, columns = basis vectors
_S3 = math.sqrt(3.0)
_TABLE = {
    "A2": (
        np.array([[_S3 / 2, 0.0], [0.5, 1.0]]),
        0.5, _S3 / 3, 0.080188,
    ),
    "D3": (
        np.array([[-1.0, 1.0, 0.0], [-1.0, -1.0, 1.0], [0.0, 0.0, -1.0]]),
        math.sqrt(2.0) / 2, 1.0, 0.078745,
    ),
    "D4": (
        np.array([
            [2.0, 1.0, 1.0, 1.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]),
        math.sqrt(2.0) / 2, 1.0, 0.076603,
    ),
    "E8": (
        np.array([
            [2, -1, 0, 0, 0, 0, 0, 0.5],
            [0, 1, -1, 0, 0, 0, 0, 0.5],
            [0, 0, 1, -1, 0, 0, 0, 0.5],
            [0, 0, 0, 1, -1, 0, 0, 0.5],
            [0, 0, 0, 0, 1, -1, 0, 0.5],
            [0, 0, 0, 0, 0, 1, -1, 0.5],
            [0, 0, 0, 0, 0, 0, 1, 0.5],
            [0, 0, 0, 0, 0, 0, 0, 0.5],
        ], dtype=float),
        math.sqrt(2.0) / 2, 1.0, 0.071682,
    ),
}
ZN_NSM = 0.083333

# squared-distance slack (unit-scale coordinates) for declaring a tie
_TIE = 1e-12
_MAX_COSETS = 4096
_CHUNK = 1 << 18


@dataclass(frozen=True, eq=False)
class Lattice:
    """A scaled (and possibly column-stretched) tabulated lattice.

    ``stretch`` holds the diagonal of a nesting matrix applied to the
    columns of the unit generator; it is all ones for the tabulated
    lattices themselves.  Geometric constants are in amplitude units.
    """

    kind: str
    scale: float
    generator: np.ndarray
    r_pack: float
    r_cov: float
    nsm: float
    volume: float
    stretch: tuple[int, ...] = ()
    _unit: np.ndarray = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.generator.shape[0]

    @property
    def is_stretched(self) -> bool:
        return any(s != 1 for s in self.stretch)

    def point(self, z) -> np.ndarray:
        """Map integer coefficient vectors ``z`` (..., N) to lattice points."""
        return np.asarray(z, dtype=float) @ self.generator.T

    def coefficients(self, x) -> np.ndarray:
        """Real coefficients ``G^{-1} x`` (not rounded)."""
        return np.linalg.solve(self.generator, np.asarray(x, dtype=float).T).T

    def __repr__(self) -> str:
        extra = f", stretch={self.stretch}" if self.is_stretched else ""
        return f"Lattice({self.kind}, N={self.dim}, scale={self.scale:g}{extra})"


def parse_kind(name: str) -> tuple[str, int | None]:
    """Accept ``"A2"``, ``"E8"``, ``"ZN"``, ``"Z"`` or ``"Z3"``; return (kind, dim)."""
    key = name.strip().upper()
    if key in _TABLE:
        return key, _TABLE[key][0].shape[0]
    if key in ("Z", "ZN"):
        return "ZN", None
    if key.startswith("Z") and key[1:].isdigit() and int(key[1:]) >= 1:
        return "ZN", int(key[1:])
    raise InvalidParameterError(f"unknown lattice kind {name!r}; expected one of {KINDS}")


def make_lattice(kind: str, scale: float = 1.0, dim: int | None = None) -> Lattice:
    """Build ``scale`` times a tabulated lattice.

    ``dim`` is required for ``ZN`` (``"Z2"`` style names carry it).
    """
    kind, implied = parse_kind(kind)
    if dim is None:
        dim = implied
    if not (isinstance(scale, (int, float, np.floating)) and math.isfinite(scale) and scale > 0):
        raise InvalidParameterError(f"lattice scale must be a positive finite number, got {scale!r}")
    scale = float(scale)
    if kind == "ZN":
        if dim is None or int(dim) < 1:
            raise InvalidParameterError("ZN lattice needs a dimension >= 1")
        dim = int(dim)
        unit = np.eye(dim)
        r_pack, r_cov, nsm = 0.5, math.sqrt(dim) / 2, ZN_NSM
    else:
        unit, r_pack, r_cov, nsm = _TABLE[kind]
        if dim is not None and dim != unit.shape[0]:
            raise InvalidParameterError(f"{kind} has dimension {unit.shape[0]}, not {dim}")
        dim = unit.shape[0]
    unit = unit.copy()
    unit.setflags(write=False)
    gen = scale * unit
    gen.setflags(write=False)
    return Lattice(
        kind=kind,
        scale=scale,
        generator=gen,
        r_pack=scale * r_pack,
        r_cov=scale * r_cov,
        nsm=nsm,
        volume=abs(float(np.linalg.det(unit))) * scale**dim,
        stretch=(1,) * dim,
        _unit=unit,
    )


def stretch_lattice(lattice: Lattice, diag) -> Lattice:
    """Sublattice generated by ``G @ diag(diag)``.

    Equal entries give the self-similar case ``diag[0] * lattice``; unequal
    entries give a rectangular-shaped sublattice whose constants are
    computed numerically.
    """
    diag = tuple(int(d) for d in diag)
    if len(diag) != lattice.dim:
        raise InvalidParameterError(f"nesting diagonal has length {len(diag)}, lattice dimension is {lattice.dim}")
    if any(d < 1 for d in diag):
        raise InvalidParameterError(f"nesting entries must be positive integers, got {diag}")
    total = tuple(a * b for a, b in zip(lattice.stretch, diag))
    if len(set(total)) == 1:
        return make_lattice(lattice.kind, lattice.scale * total[0], lattice.dim)

    from . import geometry

    unit = lattice._unit / np.array(lattice.stretch) * np.array(total)
    unit.setflags(write=False)
    gen = lattice.scale * unit
    gen.setflags(write=False)
    proto = Lattice(
        kind=lattice.kind, scale=lattice.scale, generator=gen,
        r_pack=math.nan, r_cov=math.nan, nsm=math.nan,
        volume=abs(float(np.linalg.det(gen))), stretch=total, _unit=unit,
    )
    if lattice.kind != "ZN":
        _check_coset_count(proto)
    r_pack = geometry.packing_radius(proto)
    r_cov = geometry.covering_radius(proto)
    nsm = geometry.normalized_second_moment(proto)
    return Lattice(
        kind=lattice.kind, scale=lattice.scale, generator=gen,
        r_pack=r_pack, r_cov=r_cov, nsm=nsm, volume=proto.volume,
        stretch=total, _unit=unit,
    )


# ---------------------------------------------------------------- decoders


def _round_low(y):
    # nearest integer, halves go down (the lexicographically smaller choice)
    return np.ceil(y - 0.5)


def _select(cands, x):
    """Nearest of K candidates per row with lexicographic tie-break.

    cands: (M, K, N), x: (M, N) -> (M, N)
    """
    d2 = ((cands - x[:, None, :]) ** 2).sum(-1)
    alive = d2 <= d2.min(axis=1, keepdims=True) + _TIE
    for j in range(cands.shape[-1]):
        col = cands[..., j]
        low = np.where(alive, col, np.inf).min(axis=1, keepdims=True)
        alive &= col <= low + 1e-9
    pick = alive.argmax(axis=1)
    return cands[np.arange(len(cands)), pick]


def _decode_zn(y):
    return _round_low(y)


def _decode_dn(y):
    f = _round_low(y)
    odd = f.sum(-1) % 2 != 0
    if not odd.any():
        return f
    yo, fo = y[odd], f[odd]
    err = yo - fo
    mag = np.abs(err)
    tied = mag >= mag.max(-1, keepdims=True)
    down = tied & (err <= 0)
    n = y.shape[-1]
    k = np.where(
        down.any(-1),
        down.argmax(-1),
        n - 1 - tied[:, ::-1].argmax(-1),
    )
    rows = np.arange(len(fo))
    fo[rows, k] += np.where(err[rows, k] > 0, 1.0, -1.0)
    f[odd] = fo
    return f


def _decode_e8(y):
    a = _decode_dn(y)
    b = _decode_dn(y - 0.5) + 0.5
    return _select(np.stack([a, b], axis=1), y)


_A2_UNIT = _TABLE["A2"][0]
_A2_INV = np.linalg.inv(_A2_UNIT)
# the reduced basis spans a 60-degree rhombus made of two equilateral Delaunay
# triangles, so the nearest point is one of its four corners
_A2_OFFSETS = np.array(list(product(range(2), repeat=2)), dtype=float)


def _decode_a2(y):
    base = np.floor(y @ _A2_INV.T)
    z = base[:, None, :] + _A2_OFFSETS[None]
    return _select(z @ _A2_UNIT.T, y)


_UNIT_DECODERS = {"ZN": _decode_zn, "A2": _decode_a2, "D3": _decode_dn, "D4": _decode_dn, "E8": _decode_e8}


def _coset_shifts(lattice: Lattice) -> tuple[int, np.ndarray]:
    """For a stretched lattice L = G_u diag(s) Z^N with m = lcm(s):
    L is the disjoint union of c + m * G_u Z^N over the returned shifts c (unit scale)."""
    s = lattice.stretch
    m = reduce(math.lcm, s)
    ranges = [range(m // k) for k in s]
    w = np.array(list(product(*ranges)), dtype=float) * np.array(s)
    base = lattice._unit / np.array(s)
    return m, w @ base.T


def _check_coset_count(lattice: Lattice) -> None:
    s = lattice.stretch
    m = reduce(math.lcm, s)
    count = math.prod(m // k for k in s)
    if count > _MAX_COSETS:
        raise CapacityError(
            f"stretch {s} needs {count} coset decoders (cap {_MAX_COSETS}); use a more uniform nesting matrix"
        )


def _decode_stretched(lattice: Lattice, y):
    inner = _UNIT_DECODERS[lattice.kind]
    m, shifts = _coset_shifts(lattice)
    out = np.empty_like(y)
    step = max(1, _CHUNK // len(shifts))
    for lo in range(0, len(y), step):
        yc = y[lo:lo + step]
        cands = np.empty((len(yc), len(shifts), y.shape[-1]))
        for j, c in enumerate(shifts):
            cands[:, j] = m * inner((yc - c) / m) + c
        out[lo:lo + step] = _select(cands, yc)
    return out


def _as_batch(lattice: Lattice, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != lattice.dim:
        raise InvalidParameterError(
            f"expected vectors of dimension {lattice.dim}, got array of shape {x.shape}"
        )
    return x, x.reshape(-1, lattice.dim)


def cvp(lattice: Lattice, x) -> np.ndarray:
    """Nearest lattice point to each vector in ``x`` (shape ``(..., N)``)."""
    x, flat = _as_batch(lattice, x)
    y = flat / lattice.scale
    if lattice.kind == "ZN":
        s = np.array(lattice.stretch, dtype=float)
        unit = _round_low(y / s) * s
    elif lattice.is_stretched:
        unit = _decode_stretched(lattice, y)
    else:
        unit = _UNIT_DECODERS[lattice.kind](y)
    return (unit * lattice.scale).reshape(x.shape)


def mod_lattice(lattice: Lattice, x) -> np.ndarray:
    """``x - cvp(lattice, x)``: the offset of ``x`` inside its Voronoi cell."""
    x = np.asarray(x, dtype=float)
    return x - cvp(lattice, x)


def is_lattice_point(lattice: Lattice, x, tol: float = 1e-9) -> np.ndarray:
    """Solve-and-round membership test, residual measured in amplitude units."""
    x, flat = _as_batch(lattice, x)
    z = np.rint(lattice.coefficients(flat))
    resid = np.linalg.norm(lattice.point(z) - flat, axis=-1)
    return (resid < tol).reshape(x.shape[:-1])


def cvp_bruteforce(lattice: Lattice, x, radius: int, center=None) -> np.ndarray:
    """Exhaustive nearest point over ``{G z : z in center + [-radius, radius]^N}``.

    Test oracle only; cost is ``(2 radius + 1)^N`` per vector.  ``center``
    defaults to the origin; passing an integer vector per row (e.g. the
    rounded coefficients of ``x``) keeps the box small.
    """
    x, flat = _as_batch(lattice, x)
    n = lattice.dim
    box = np.array(list(product(range(-radius, radius + 1), repeat=n)), dtype=float)
    if center is None:
        center = np.zeros_like(flat)
    center = np.broadcast_to(np.asarray(center, dtype=float).reshape(-1, n), flat.shape)
    out = np.empty_like(flat)
    step = max(1, (1 << 21) // len(box))
    for lo in range(0, len(flat), step):
        xc = flat[lo:lo + step]
        z = center[lo:lo + step, None, :] + box[None]
        cands = z @ lattice.generator.T
        d2 = ((cands - xc[:, None, :]) ** 2).sum(-1)
        best = np.empty_like(xc)
        for r in range(len(xc)):
            tied = np.flatnonzero(d2[r] <= d2[r].min() + _TIE * lattice.scale**2)
            pts = cands[r, tied]
            order = np.lexsort(pts.T[::-1])
            best[r] = pts[order[0]]
        out[lo:lo + step] = best
    return out.reshape(x.shape)
