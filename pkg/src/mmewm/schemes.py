"""Watermark embedding schemes: scalar and lattice QIM, IQIM, and MME.

MME (meet-in-the-middle embedding) moves a host vector ``s`` only part of
the way to its message coset point ``q``::

    w = alpha * q + (1 - alpha) * s

As long as the leftover ``(1 - alpha) (s - q)`` stays inside the fine
Voronoi cell, the receiver recovers ``q = Q_f(w)`` and then ``s`` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvalidParameterError
from .lattice import cvp
from .nested import (
    CosetTable,
    NestedPair,
    bits_to_indices,
    coset_index_of,
    coset_representatives,
    indices_to_bits,
    quantize_to_coset,
)

DOUBLE_MANTISSA = 52
SINGLE_MANTISSA = 23
BOUNDS = ("general", "self_similar")


# ------------------------------------------------------------ scalar QIM


def _floor_quant(x, step):
    return step * np.floor(np.asarray(x, dtype=float) / step)


def qim_scalar_embed(s, m, step: float):
    """One-bit dithered QIM with ``Q(x) = step * floor(x / step)`` and offsets -/+ step/4."""
    if step <= 0:
        raise InvalidParameterError("QIM step must be positive")
    d = np.where(np.asarray(m) == 1, step / 4, -step / 4)
    return _floor_quant(np.asarray(s, dtype=float) - d, step) + d


def qim_scalar_decode(y, step: float):
    """Minimum-distance bit decision; ties resolve to 0."""
    if step <= 0:
        raise InvalidParameterError("QIM step must be positive")
    y = np.asarray(y, dtype=float)
    dist = []
    for d in (-step / 4, step / 4):
        t = y - d
        dist.append(np.abs(t - step * np.round(t / step)))
    return (dist[1] < dist[0]).astype(np.int64)


# ------------------------------------------------------------------- IQIM


@dataclass(frozen=True)
class IqimConfig:
    step: float
    bits: int

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError(f"IQIM step must be positive, got {self.step}")
        if int(self.bits) != self.bits or self.bits < 1:
            raise ConfigError(f"IQIM bits must be a positive integer, got {self.bits}")

    @property
    def levels(self) -> int:
        return 1 << self.bits

    @property
    def beta(self) -> float:
        return 1.0 - 1.0 / self.levels


def iqim_embed(s, m, cfg: IqimConfig):
    s = np.asarray(s, dtype=float)
    m = np.asarray(m)
    if np.any((m < 0) | (m >= cfg.levels)) or np.any(np.mod(m, 1) != 0):
        raise InvalidParameterError(f"IQIM message must be an integer in [0, {cfg.levels})")
    span = cfg.levels * cfg.step
    gamma = np.floor(s / span)
    r = s - span * gamma
    return span * gamma + m * cfg.step + r / cfg.levels


def iqim_extract(y, cfg: IqimConfig):
    """Return ``(message, host_estimate)``."""
    y = np.asarray(y, dtype=float)
    gw = np.floor(y / cfg.step)
    rw = y - gw * cfg.step
    block = np.floor(gw / cfg.levels)
    m = (gw - cfg.levels * block).astype(np.int64)
    s = cfg.levels * block * cfg.step + cfg.levels * rw
    return m, s


# the vector form is the scalar rule applied per coordinate
iqim_embed_vector = iqim_embed


def iqim_embed_beta(s, m, cfg: IqimConfig):
    """Scaled-combination form ``beta [2^b step gamma + step m / beta] + (1 - beta) s``."""
    s = np.asarray(s, dtype=float)
    beta = cfg.beta
    gamma = np.floor(s / (cfg.levels * cfg.step))
    return beta * (cfg.levels * cfg.step * gamma + cfg.step * np.asarray(m) / beta) + (1 - beta) * s


def iqim_cell_offset(y, cfg: IqimConfig):
    """Offset of ``y`` from the centre of its width-``step`` decision interval."""
    y = np.asarray(y, dtype=float)
    return y - cfg.step * (np.floor(y / cfg.step) + 0.5)


# ------------------------------------------------------------------ bounds


def alpha_lower_bound(pair: NestedPair, bound: str = "general") -> float:
    """Smallest alpha keeping the scaled self-noise inside the fine Voronoi cell.

    ``"general"``: ``1 - r_pack(fine) / r_cov(coarse)``.
    ``"self_similar"``: ``1 - 1/Gamma``, only for ``coarse = Gamma * fine``.
    """
    if bound == "general":
        return 1.0 - pair.fine.r_pack / pair.coarse.r_cov
    if bound == "self_similar":
        if not pair.self_similar:
            raise InvalidParameterError(f"self-similar bound needs equal nesting entries, got {pair.nesting}")
        return 1.0 - 1.0 / pair.gamma
    raise InvalidParameterError(f"unknown bound {bound!r}; expected one of {BOUNDS}")


def alpha_upper_bound(mantissa_bits: int = DOUBLE_MANTISSA) -> float:
    return 1.0 - 2.0 ** -(mantissa_bits + 1)


# --------------------------------------------------------------------- MME


@dataclass(frozen=True, eq=False)
class MmeConfig:
    pair: NestedPair
    alpha: float
    mantissa_bits: int = DOUBLE_MANTISSA
    bound: str = "general"
    table: CosetTable = field(default=None)
    enforce_bounds: bool = True

    def __post_init__(self):
        if self.table is None:
            object.__setattr__(self, "table", coset_representatives(self.pair))
        if not (isinstance(self.alpha, (int, float, np.floating)) and math.isfinite(self.alpha)):
            raise ConfigError(f"alpha must be a finite number, got {self.alpha!r}")
        if self.enforce_bounds:
            lo, hi = self.alpha_range
            if not (lo - 1e-12 <= self.alpha <= hi):
                raise ConfigError(
                    f"alpha={self.alpha} outside feasible range [{lo:.6f}, {hi!r}] "
                    f"({self.bound} bound for {self.pair.describe()})"
                )

    @property
    def alpha_range(self) -> tuple[float, float]:
        return alpha_lower_bound(self.pair, self.bound), alpha_upper_bound(self.mantissa_bits)


@dataclass(frozen=True, eq=False)
class EmbedResult:
    watermarked: np.ndarray
    coset_index: np.ndarray
    self_noise: np.ndarray
    # per frame: cvp(fine, (1 - alpha) * self_noise) == 0
    contained: np.ndarray


@dataclass(frozen=True, eq=False)
class RestoreResult:
    host_estimate: np.ndarray
    message_index: np.ndarray
    composite_noise_ok: np.ndarray


def mme_embed(s, i, cfg: MmeConfig) -> EmbedResult:
    s = np.asarray(s, dtype=float)
    q = quantize_to_coset(cfg.pair, cfg.table, i, s)
    e = s - q
    w = cfg.alpha * q + (1.0 - cfg.alpha) * s
    leftover = cvp(cfg.pair.fine, (1.0 - cfg.alpha) * e)
    contained = np.all(leftover == 0, axis=-1)
    return EmbedResult(watermarked=w, coset_index=np.asarray(i), self_noise=e, contained=contained)


def mme_extract(y, cfg: MmeConfig) -> RestoreResult:
    """Invert the embedding: ``s = (y - Q_f(y)) / (1 - alpha) + Q_f(y)``.

    ``composite_noise_ok`` re-embeds the estimate on the decoded coset and
    checks it maps back to the same fine point, i.e. ``W(s_hat) == y``.  It
    always holds without noise; a False flags a frame whose composite noise
    left the fine cell (or whose restoration is otherwise inconsistent).
    """
    y = np.asarray(y, dtype=float)
    q = cvp(cfg.pair.fine, y)
    s_hat = (y - q) / (1.0 - cfg.alpha) + q
    idx = coset_index_of(cfg.pair, q)
    again = quantize_to_coset(cfg.pair, cfg.table, idx, s_hat)
    tol = 1e-9 * max(1.0, cfg.pair.fine.scale)
    ok = np.all(np.abs(again - q) <= tol, axis=-1)
    return RestoreResult(host_estimate=s_hat, message_index=idx, composite_noise_ok=ok)


# ------------------------------------------------------- frame-level codecs


def _frame_indices(bits, k: int, n_frames: int):
    if k == 0:
        return np.zeros(n_frames, dtype=np.int64)
    return bits_to_indices(bits, k)


class QimCodec:
    """Lattice QIM: hosts snap onto the message coset (not reversible)."""

    name = "qim"
    reversible = False

    def __init__(self, pair: NestedPair):
        self.pair = pair
        self.table = coset_representatives(pair)
        self.dim = pair.dim
        self.bits_per_frame = pair.bits_per_frame

    @property
    def alpha(self) -> float:
        return 1.0

    def embed(self, frames, bits):
        idx = _frame_indices(bits, self.bits_per_frame, len(frames))
        q = quantize_to_coset(self.pair, self.table, idx, frames)
        return q, q

    def extract(self, y):
        q = cvp(self.pair.fine, y)
        bits = indices_to_bits(coset_index_of(self.pair, q), self.bits_per_frame)
        return bits, np.array(y, dtype=float)

    def composite_noise(self, y, reference):
        return np.asarray(y) - reference

    def gsnr_theory(self, sigma: float) -> float:
        num = 4 * self.pair.fine.r_pack**2
        den = self.dim * sigma**2
        return math.inf if den == 0 else num / den


class IqimCodec:
    """Per-coordinate IQIM over frames of ``dim`` samples, ``bits`` bits per sample."""

    name = "iqim"
    reversible = True

    def __init__(self, cfg: IqimConfig, dim: int):
        self.cfg = cfg
        self.dim = dim
        self.bits_per_frame = cfg.bits * dim

    @property
    def alpha(self) -> float:
        return self.cfg.beta

    def embed(self, frames, bits):
        frames = np.asarray(frames, dtype=float)
        m = bits_to_indices(bits, self.cfg.bits).reshape(frames.shape)
        w = iqim_embed(frames, m, self.cfg)
        centre = w - iqim_cell_offset(w, self.cfg)
        return w, centre

    def extract(self, y):
        m, s = iqim_extract(y, self.cfg)
        return indices_to_bits(m.reshape(-1), self.cfg.bits), s

    def composite_noise(self, y, reference):
        return np.asarray(y) - reference

    def gsnr_theory(self, sigma: float) -> float:
        # decision intervals of width step, offsets uniform over them
        step = self.cfg.step
        return step**2 / (self.dim * step**2 / 12 + self.dim * sigma**2)


class MmeCodec:
    name = "mme"
    reversible = True

    def __init__(self, cfg: MmeConfig):
        self.cfg = cfg
        self.pair = cfg.pair
        self.dim = cfg.pair.dim
        self.bits_per_frame = cfg.pair.bits_per_frame

    @property
    def alpha(self) -> float:
        return self.cfg.alpha

    def embed(self, frames, bits):
        frames = np.asarray(frames, dtype=float)
        idx = _frame_indices(bits, self.bits_per_frame, len(frames))
        res = mme_embed(frames, idx, self.cfg)
        return res.watermarked, frames - res.self_noise

    def extract(self, y):
        res = mme_extract(y, self.cfg)
        return indices_to_bits(res.message_index, self.bits_per_frame), res.host_estimate

    def composite_noise(self, y, reference):
        return np.asarray(y) - reference

    def gsnr_theory(self, sigma: float) -> float:
        from .metrics import gsnr_theoretical

        return gsnr_theoretical(self.cfg, sigma)
