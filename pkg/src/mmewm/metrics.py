"""AWGN attack channel and distortion / robustness metrics."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import InvalidParameterError
from .lattice import Lattice


class AwgnChannel:
    """i.i.d. zero-mean Gaussian noise from a seeded Philox stream.

    Successive calls continue the same stream; two channels built with the
    same seed produce identical noise.
    """

    def __init__(self, sigma: float, seed: int = 0):
        if not sigma >= 0:
            raise InvalidParameterError(f"noise sigma must be non-negative, got {sigma}")
        self.sigma = float(sigma)
        self.seed = int(seed)
        self._rng = np.random.Generator(np.random.Philox(self.seed))

    def noise(self, shape) -> np.ndarray:
        return self.sigma * self._rng.standard_normal(shape)

    def __repr__(self) -> str:
        return f"AwgnChannel(sigma={self.sigma:g}, seed={self.seed})"


def awgn_apply(channel: AwgnChannel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if channel.sigma == 0:
        return x.copy()
    return x + channel.noise(x.shape)


def signal_power(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.mean(x * x))


def snr_to_sigma(snr_db: float, host_power: float) -> float:
    """Noise std for a host-power-referenced SNR (power ratio, in dB)."""
    if not host_power > 0:
        raise InvalidParameterError(f"host power must be positive, got {host_power}")
    return math.sqrt(host_power / 10 ** (snr_db / 10))


def swr(host, watermarked) -> float:
    """Signal-to-watermark ratio in dB; ``inf`` when nothing was changed."""
    s = np.asarray(host, dtype=float)
    x = np.asarray(watermarked, dtype=float)
    if s.shape != x.shape:
        raise InvalidParameterError(f"host and watermarked shapes differ: {s.shape} vs {x.shape}")
    w = x - s
    ew = float(np.sum(w * w))
    if ew == 0:
        return math.inf
    return 10 * math.log10(float(np.sum(s * s)) / ew)


def flat_host_distortion(coarse: Lattice, alpha: float) -> float:
    """Expected ``||w - s||^2`` per frame when the host is uniform over coarse cells."""
    n = coarse.dim
    return alpha**2 * n * coarse.nsm * coarse.volume ** (2 / n)


def cubic_distortion(dim: int, alpha: float, bits: int, step: float) -> float:
    """Closed form of :func:`flat_host_distortion` for ``step Z^N`` inside ``step 2^bits Z^N``."""
    return dim * alpha**2 * 2 ** (2 * bits) * step**2 / 12


def gsnr_theoretical(cfg, sigma: float) -> float:
    """Closed-form GSNR of MME under the flat-host assumption."""
    pair = cfg.pair
    n = pair.dim
    c = pair.coarse
    self_noise = (1 - cfg.alpha) ** 2 * n * c.nsm * c.volume ** (2 / n)
    den = self_noise + n * sigma**2
    num = 4 * pair.fine.r_pack**2
    return math.inf if den == 0 else num / den


def gsnr_empirical(composite_noises, fine: Lattice) -> float:
    """``4 r_pack^2 / mean ||v||^2`` over per-frame composite noise vectors."""
    v = np.asarray(composite_noises, dtype=float)
    if v.size == 0:
        raise InvalidParameterError("need at least one composite noise vector")
    energy = float(np.mean(np.sum(v.reshape(-1, v.shape[-1]) ** 2, axis=-1)))
    if energy == 0:
        return math.inf
    return 4 * fine.r_pack**2 / energy


def ber(sent, received) -> float:
    a = np.asarray(sent)
    b = np.asarray(received)
    if a.shape != b.shape:
        raise InvalidParameterError(f"bit arrays differ in shape: {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    return float(np.count_nonzero(a != b)) / a.size


def rmse(a, b) -> float:
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return float(np.sqrt(np.mean(d * d))) if d.size else 0.0


CSV_VERSION = 1


@dataclass
class MetricsReport:
    """One experiment cell.  Field order is the CSV column order."""

    scheme: str
    lattice: str
    dim: int
    delta: float
    nesting: str
    rate: float
    alpha: float
    alpha_min: float
    bound: str
    snr_db: float
    sigma: float
    host: str
    frames: int
    seed: int
    feasible: bool
    swr_db: float = math.nan
    gsnr_empirical: float = math.nan
    gsnr_theoretical: float = math.nan
    ber: float = math.nan
    restore_rmse: float = math.nan
    decode_ok: float = math.nan
    clipped_frames: int = 0
    note: str = ""

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list[str]:
        out = []
        for v in asdict(self).values():
            if isinstance(v, bool):
                out.append("1" if v else "0")
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out


def write_csv(reports, stream, comment: str | None = None) -> None:
    stream.write(f"# mmewm-bench v{CSV_VERSION} columns: {','.join(MetricsReport.columns())}\n")
    if comment:
        for line in comment.splitlines():
            stream.write(f"# {line}\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(MetricsReport.columns())
    for r in reports:
        w.writerow(r.row())


def read_csv(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))
