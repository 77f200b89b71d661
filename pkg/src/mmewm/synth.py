"""Deterministic synthetic hosts for desk-scale experiments."""

from __future__ import annotations

import numpy as np

from .audio import AudioClip
from .errors import InvalidParameterError
from .lattice import Lattice

HOSTS = ("flat", "box", "tone")

# incommensurate partials so consecutive frames do not repeat
_TONE_FREQS = (220.0, 347.3, 529.1, 811.7, 1303.9)


def rng_for(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, key)])))


def flat_host(coarse: Lattice, n_frames: int, rng: np.random.Generator, cells: int = 16) -> np.ndarray:
    """Frames uniform over ``cells^N`` whole coarse cells (the flat-host model).

    Drawing ``t`` uniformly on ``[-cells/2, cells/2)^N`` and mapping through the
    coarse generator tiles a fundamental parallelotope, which is a union of
    complete Voronoi cells up to measure zero.
    """
    t = rng.uniform(-cells / 2, cells / 2, size=(n_frames, coarse.dim))
    return coarse.point(t)


def box_host(dim: int, n_frames: int, rng: np.random.Generator, amplitude: float = 32767.0) -> np.ndarray:
    return rng.uniform(-amplitude, amplitude, size=(n_frames, dim))


def tone_samples(n_samples: int, sample_rate: int = 44100, rms: float = 1000.0, phase_seed: int = 0) -> np.ndarray:
    """Integer multi-tone waveform with (approximately) the requested RMS level."""
    t = np.arange(n_samples) / sample_rate
    phases = rng_for(phase_seed, 7).uniform(0, 2 * np.pi, len(_TONE_FREQS))
    x = sum(np.sin(2 * np.pi * f * t + p) / (k + 1) for k, (f, p) in enumerate(zip(_TONE_FREQS, phases)))
    x = np.asarray(x, dtype=float)
    level = np.sqrt(np.mean(x * x)) if n_samples else 1.0
    return np.clip(np.rint(x * (rms / level)), -32768, 32767)


def tone_host(dim: int, n_frames: int, rms: float = 1000.0, seed: int = 0) -> np.ndarray:
    return tone_samples(n_frames * dim, rms=rms, phase_seed=seed).reshape(n_frames, dim)


def tone_clip(seconds: float, sample_rate: int = 44100, channels: int = 1, rms: float = 1000.0, seed: int = 0) -> AudioClip:
    n = int(round(seconds * sample_rate))
    cols = [tone_samples(n, sample_rate, rms, seed + c) for c in range(channels)]
    return AudioClip(np.stack(cols, axis=1) if cols else np.zeros((n, 0)), sample_rate)


def make_host(kind: str, coarse: Lattice, n_frames: int, seed: int, level: float | None = None) -> np.ndarray:
    """Dispatch on host kind; ``level`` is the box amplitude or tone RMS."""
    if kind == "flat":
        return flat_host(coarse, n_frames, rng_for(seed, 1, coarse.dim))
    if kind == "box":
        return box_host(coarse.dim, n_frames, rng_for(seed, 1, coarse.dim), 32767.0 if level is None else level)
    if kind == "tone":
        return tone_host(coarse.dim, n_frames, 1000.0 if level is None else level, seed)
    raise InvalidParameterError(f"unknown host kind {kind!r}; expected one of {HOSTS}")
