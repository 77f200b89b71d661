"""RIFF/WAVE I/O and framing of sample streams into host vectors.

Two encodings are supported: format code 1 with 16-bit samples and format
code 3 with 64-bit IEEE floats.  Files are written with the canonical
44-byte layout::

    "RIFF" <u32 size> "WAVE"
    "fmt " <u32 16> <u16 format> <u16 channels> <u32 rate>
           <u32 byte_rate> <u16 block_align> <u16 bits>
    "data" <u32 nbytes> <interleaved little-endian samples>

No other chunks are emitted.  Samples stay in raw integer amplitude units
(PCM16 values are not normalised), so quantizer step sizes refer directly to
16-bit levels.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, PrecisionError

PCM16 = "pcm16"
FLOAT64 = "float64"
_CODES = {1: PCM16, 3: FLOAT64}
_WIDTH = {PCM16: 2, FLOAT64: 8}
_DTYPE = {PCM16: "<i2", FLOAT64: "<f8"}


@dataclass
class AudioClip:
    samples: np.ndarray  # (n_samples, channels), float64
    sample_rate: int
    source_format: str = PCM16

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        self.samples = s

    @property
    def channels(self) -> int:
        return self.samples.shape[1]

    def __len__(self) -> int:
        return self.samples.shape[0]


def wav_read(path) -> AudioClip:
    data = Path(path).read_bytes()
    return wav_decode(data, name=str(path))


def wav_decode(data: bytes, name: str = "<bytes>") -> AudioClip:
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError(f"{name}: not a RIFF/WAVE file (bad header at offset 0)")
    # the RIFF size field is not trusted; each chunk is bounds-checked instead
    pos = 12
    fmt = None
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        size = struct.unpack_from("<I", data, pos + 4)[0]
        body = pos + 8
        if cid == b"fmt ":
            if size < 16 or body + size > len(data):
                raise FormatError(f"{name}: truncated fmt chunk at offset {pos}")
            code, channels, rate, byte_rate, align, bits = struct.unpack_from("<HHIIHH", data, body)
            if code not in _CODES:
                raise FormatError(f"{name}: unsupported format code {code} at offset {body}")
            kind = _CODES[code]
            if bits != 8 * _WIDTH[kind]:
                raise FormatError(f"{name}: {kind} needs {8 * _WIDTH[kind]} bits per sample, got {bits} at offset {body + 14}")
            if channels < 1 or align != channels * _WIDTH[kind] or byte_rate != rate * align:
                raise FormatError(f"{name}: inconsistent fmt fields at offset {body}")
            fmt = (kind, channels, rate)
        elif cid == b"data":
            if fmt is None:
                raise FormatError(f"{name}: data chunk at offset {pos} precedes fmt chunk")
            kind, channels, rate = fmt
            if body + size > len(data):
                raise FormatError(
                    f"{name}: truncated data chunk at offset {pos}: header declares {size} bytes, "
                    f"{len(data) - body} present"
                )
            align = channels * _WIDTH[kind]
            if size % align:
                raise FormatError(f"{name}: data chunk size {size} at offset {pos} is not a multiple of {align}")
            raw = np.frombuffer(data, dtype=_DTYPE[kind], count=size // _WIDTH[kind], offset=body)
            return AudioClip(raw.reshape(-1, channels).astype(float), rate, kind)
        pos = body + size + (size & 1)
    raise FormatError(f"{name}: no data chunk found" if fmt else f"{name}: no fmt chunk found")


def wav_encode(clip: AudioClip, fmt: str = PCM16) -> bytes:
    if fmt not in _WIDTH:
        raise FormatError(f"unsupported output format {fmt!r}")
    s = clip.samples
    if fmt == PCM16:
        if not np.all(np.isfinite(s)) or np.any(s != np.round(s)):
            raise PrecisionError("refusing to write non-integer samples as PCM16 (would destroy reversibility)")
        if s.size and (s.min() < -32768 or s.max() > 32767):
            raise PrecisionError("samples outside the 16-bit range cannot be written as PCM16")
    payload = np.ascontiguousarray(s, dtype=float).astype(_DTYPE[fmt]).tobytes()
    code = 1 if fmt == PCM16 else 3
    align = clip.channels * _WIDTH[fmt]
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, code, clip.channels, int(clip.sample_rate),
        int(clip.sample_rate) * align, align, 8 * _WIDTH[fmt],
        b"data", len(payload),
    )
    return header + payload


def wav_write(clip: AudioClip, path, fmt: str = PCM16) -> None:
    Path(path).write_bytes(wav_encode(clip, fmt))


@dataclass
class FrameStream:
    """Per-channel non-overlapping frames plus the unframed tail.

    ``frames`` has shape ``(channels, n_frames, frame_dim)`` and ``tail``
    shape ``(channels, n_tail)`` with ``n_tail < frame_dim``.
    """

    frames: np.ndarray
    tail: np.ndarray
    frame_dim: int
    sample_rate: int
    source_format: str = PCM16

    @property
    def channels(self) -> int:
        return self.frames.shape[0]

    def interleaved(self) -> np.ndarray:
        """Frames in payload order: frame 0 of every channel, then frame 1, ..."""
        return self.frames.transpose(1, 0, 2).reshape(-1, self.frame_dim)

    def with_interleaved(self, flat) -> "FrameStream":
        flat = np.asarray(flat, dtype=float)
        nf = self.frames.shape[1]
        frames = flat.reshape(nf, self.channels, self.frame_dim).transpose(1, 0, 2)
        return FrameStream(frames.copy(), self.tail.copy(), self.frame_dim, self.sample_rate, self.source_format)


def frame(clip: AudioClip, n: int) -> FrameStream:
    if int(n) != n or n < 1:
        raise ValueError(f"frame dimension must be a positive integer, got {n}")
    n = int(n)
    per_ch = clip.samples.T
    nf = per_ch.shape[1] // n
    cut = nf * n
    frames = per_ch[:, :cut].reshape(clip.channels, nf, n).copy()
    tail = per_ch[:, cut:].copy()
    return FrameStream(frames, tail, n, clip.sample_rate, clip.source_format)


def deframe(stream: FrameStream) -> AudioClip:
    ch, nf, n = stream.frames.shape
    body = stream.frames.reshape(ch, nf * n)
    samples = np.concatenate([body, stream.tail], axis=1).T
    return AudioClip(np.ascontiguousarray(samples), stream.sample_rate, stream.source_format)
