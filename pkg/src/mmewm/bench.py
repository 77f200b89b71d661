"""Full-factorial experiment sweeps producing :class:`MetricsReport` rows.

Hosts depend on ``(seed, dim)``; payload and channel noise on the seed plus
the lattice, rate, step and SNR.  Cells that differ only in scheme or alpha
therefore see identical hosts, payloads and noise, and the whole sweep is a
pure function of its specification.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidParameterError
from .lattice import cvp, parse_kind
from .metrics import (
    AwgnChannel,
    MetricsReport,
    awgn_apply,
    ber,
    gsnr_empirical,
    rmse,
    signal_power,
    snr_to_sigma,
    swr,
)
from .nested import nested_for_rate
from .schemes import (
    IqimCodec,
    IqimConfig,
    MmeCodec,
    MmeConfig,
    QimCodec,
    alpha_lower_bound,
)
from .synth import make_host, rng_for

SCHEMES = ("qim", "iqim", "mme")
PCM_MAX = 32767


@dataclass(frozen=True)
class Cell:
    scheme: str
    lattice: str
    rate: int
    alpha: str  # "bound", "bound-ss" or a number
    delta: float
    snr_db: float  # inf means no channel noise
    frames: int
    host: str = "flat"
    host_level: float | None = None
    seed: int = 0


def _resolve_alpha(value: str, pair) -> tuple[float, str]:
    if value == "bound":
        return alpha_lower_bound(pair, "general"), "general"
    if value == "bound-ss":
        return alpha_lower_bound(pair, "self_similar"), "self_similar"
    try:
        return float(value), "general"
    except ValueError:
        raise InvalidParameterError(f"alpha must be a number, 'bound' or 'bound-ss', got {value!r}") from None


def _key(*parts) -> list[int]:
    digest = hashlib.sha256(repr(parts).encode()).digest()
    return [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]


def run_cell(cell: Cell) -> MetricsReport:
    kind, dim = parse_kind(cell.lattice)
    if cell.scheme not in SCHEMES:
        raise InvalidParameterError(f"unknown scheme {cell.scheme!r}")
    pair = nested_for_rate(kind, cell.delta, cell.rate, dim)
    alpha, bound = _resolve_alpha(cell.alpha, pair)
    try:
        alpha_min = alpha_lower_bound(pair, bound)
    except InvalidParameterError:
        alpha_min = math.nan
    report = MetricsReport(
        scheme=cell.scheme, lattice=cell.lattice, dim=pair.dim, delta=float(cell.delta),
        nesting="x".join(map(str, pair.nesting)), rate=float(pair.rate), alpha=float(alpha),
        alpha_min=float(alpha_min), bound=bound, snr_db=float(cell.snr_db), sigma=math.nan,
        host=cell.host, frames=int(cell.frames), seed=int(cell.seed), feasible=True,
    )

    if cell.scheme == "iqim":
        if kind != "ZN":
            report.feasible = False
            report.note = "iqim is defined on cubic lattices only"
            return report
        codec = IqimCodec(IqimConfig(cell.delta, cell.rate), pair.dim)
        report.alpha = codec.alpha
        report.alpha_min = codec.alpha
        report.bound = "beta"
    elif cell.scheme == "qim":
        codec = QimCodec(pair)
        report.alpha = 1.0
    else:
        try:
            codec = MmeCodec(MmeConfig(pair, alpha, bound=bound))
        except ConfigError as exc:
            report.feasible = False
            report.note = str(exc)
            return report

    host = make_host(cell.host, pair.coarse, cell.frames, cell.seed, cell.host_level)
    k = codec.bits_per_frame
    bits = rng_for(cell.seed, 2, *_key(cell.lattice, cell.rate)).integers(0, 2, size=cell.frames * k)
    w, reference = codec.embed(host, bits)

    power = signal_power(host)
    sigma = 0.0 if math.isinf(cell.snr_db) and cell.snr_db > 0 else snr_to_sigma(cell.snr_db, power)
    noise_key = _key(cell.lattice, cell.rate, cell.delta, cell.snr_db)
    channel = AwgnChannel(sigma, int(np.random.SeedSequence([cell.seed, 3, *noise_key]).generate_state(1)[0]))
    y = awgn_apply(channel, w)

    decoded, restored = codec.extract(y)
    fine_points_ok = np.all(cvp(pair.fine, y - reference) == 0, axis=-1) if cell.scheme != "iqim" else None
    report.sigma = sigma
    report.swr_db = swr(host, w)
    report.gsnr_empirical = gsnr_empirical(codec.composite_noise(y, reference), pair.fine)
    report.gsnr_theoretical = codec.gsnr_theory(sigma)
    report.ber = ber(bits, decoded)
    if codec.reversible:
        report.restore_rmse = rmse(restored, host)
    if fine_points_ok is not None:
        report.decode_ok = float(np.mean(fine_points_ok))
    else:
        report.decode_ok = float(np.mean(np.all(np.abs(y - reference) < cell.delta / 2, axis=-1)))
    report.clipped_frames = int(np.count_nonzero(np.any(np.abs(w) > PCM_MAX, axis=-1)))
    return report


def sweep_cells(schemes, lattices, rates, alphas, deltas, snrs, frames: int, host: str = "flat",
                host_level: float | None = None, seed: int = 0) -> list[Cell]:
    """Cells in row-major order over (scheme, lattice, rate, alpha, delta, snr).

    IQIM and QIM ignore the alpha axis, so only one cell per alpha list is
    kept for them.
    """
    axes = [list(schemes), list(lattices), list(rates), list(alphas), list(deltas), list(snrs)]
    for name, ax in zip(("scheme", "lattice", "rate", "alpha", "delta", "snr"), axes):
        if not ax:
            raise InvalidParameterError(f"sweep axis {name!r} is empty")
    cells = []
    for sch, lat, r, a, d, snr in itertools.product(*axes):
        if sch != "mme" and a != axes[3][0]:
            continue
        cells.append(Cell(sch, lat, int(r), str(a), float(d), float(snr), int(frames), host, host_level, int(seed)))
    return cells


def run_sweep(cells, workers: int = 1) -> list[MetricsReport]:
    """Run cells, returning reports in cell order whatever the worker count."""
    if workers <= 1:
        return [run_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_cell, cells))
