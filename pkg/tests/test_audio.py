import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.io import wavfile

from mmewm.audio import (
    FLOAT64,
    PCM16,
    AudioClip,
    deframe,
    frame,
    wav_decode,
    wav_encode,
    wav_read,
    wav_write,
)
from mmewm.errors import FormatError, PrecisionError
from mmewm.nested import nested_for_rate
from mmewm.schemes import MmeCodec, MmeConfig, alpha_lower_bound
from mmewm.synth import tone_clip

from conftest import LATTICE_NAMES


def _pcm_clip(rng, n=1000, channels=2):
    return AudioClip(rng.integers(-32768, 32768, size=(n, channels)).astype(float), 8000)


def test_pcm16_round_trip_is_byte_identical(tmp_path, rng):
    clip = _pcm_clip(rng)
    path = tmp_path / "a.wav"
    wav_write(clip, path)
    data = path.read_bytes()
    back = wav_read(path)
    assert back.source_format == PCM16
    np.testing.assert_array_equal(back.samples, clip.samples)
    assert wav_encode(back, PCM16) == data


def test_float64_round_trip_is_bit_exact(rng):
    clip = AudioClip(rng.normal(scale=1e4, size=(777, 1)), 44100)
    back = wav_decode(wav_encode(clip, FLOAT64))
    assert back.source_format == FLOAT64
    assert back.samples.tobytes() == clip.samples.tobytes()


def test_scipy_agrees_with_our_encoding(tmp_path, rng):
    clip = _pcm_clip(rng, 500, 2)
    wav_write(clip, tmp_path / "p.wav")
    rate, data = wavfile.read(tmp_path / "p.wav")
    assert rate == 8000 and data.dtype == np.int16
    np.testing.assert_array_equal(data, clip.samples)

    fclip = AudioClip(rng.normal(size=(300, 3)), 22050)
    wav_write(fclip, tmp_path / "f.wav", FLOAT64)
    rate, data = wavfile.read(tmp_path / "f.wav")
    assert data.dtype == np.float64
    np.testing.assert_array_equal(data, fclip.samples)


def test_reads_scipy_output(tmp_path, rng):
    data = rng.integers(-30000, 30000, size=(1234, 2)).astype(np.int16)
    wavfile.write(tmp_path / "s.wav", 16000, data)
    clip = wav_read(tmp_path / "s.wav")
    assert clip.sample_rate == 16000 and clip.channels == 2
    np.testing.assert_array_equal(clip.samples, data)


def test_one_second_mono():
    clip = wav_decode(wav_encode(tone_clip(1.0)))
    assert len(clip) == 44100 and clip.channels == 1


def test_truncated_data_is_an_error(rng):
    data = wav_encode(_pcm_clip(rng, 100, 1))
    with pytest.raises(FormatError, match="offset 36"):
        wav_decode(data[:-10])


def test_malformed_headers(rng):
    data = bytearray(wav_encode(_pcm_clip(rng, 10, 1)))
    with pytest.raises(FormatError, match="offset 0"):
        wav_decode(b"RIFX" + bytes(data[4:]))
    bad = bytearray(data)
    struct.pack_into("<H", bad, 20, 6)  # A-law
    with pytest.raises(FormatError, match="format code 6"):
        wav_decode(bytes(bad))
    bad = bytearray(data)
    struct.pack_into("<H", bad, 34, 8)  # 8-bit samples
    with pytest.raises(FormatError):
        wav_decode(bytes(bad))
    with pytest.raises(FormatError):
        wav_decode(bytes(data[:30]))


def test_skips_unknown_chunks(rng):
    clip = _pcm_clip(rng, 20, 1)
    data = wav_encode(clip)
    extra = b"LIST" + struct.pack("<I", 5) + b"abcde\0"
    spliced = data[:36] + extra + data[36:]
    spliced = spliced[:4] + struct.pack("<I", len(spliced) - 8) + spliced[8:]
    np.testing.assert_array_equal(wav_decode(spliced).samples, clip.samples)


def test_pcm16_refuses_lossy_writes():
    with pytest.raises(PrecisionError):
        wav_encode(AudioClip(np.array([0.5, 1.0]), 8000), PCM16)
    with pytest.raises(PrecisionError):
        wav_encode(AudioClip(np.array([40000.0]), 8000), PCM16)
    with pytest.raises(PrecisionError):
        wav_encode(AudioClip(np.array([np.nan]), 8000), PCM16)


def test_empty_clip():
    data = wav_encode(AudioClip(np.zeros((0, 1)), 8000))
    assert len(data) == 44
    clip = wav_decode(data)
    assert len(clip) == 0 and clip.channels == 1


def test_frame_examples():
    clip = AudioClip(np.arange(10.0), 8000)
    fs = frame(clip, 4)
    assert fs.frames.shape == (1, 2, 4)
    np.testing.assert_array_equal(fs.tail, [[8.0, 9.0]])
    assert frame(clip, 1).frames.shape == (1, 10, 1)
    np.testing.assert_array_equal(deframe(fs).samples, clip.samples)


def test_interleaved_order():
    clip = AudioClip(np.arange(16.0).reshape(8, 2), 8000)
    fs = frame(clip, 2)
    # channel 0 holds even samples, channel 1 odd ones; payload order alternates channels
    np.testing.assert_array_equal(fs.interleaved()[:2], [[0.0, 2.0], [1.0, 3.0]])
    again = fs.with_interleaved(fs.interleaved())
    np.testing.assert_array_equal(deframe(again).samples, clip.samples)


@given(n=st.integers(0, 50), ch=st.integers(1, 3), dim=st.integers(1, 9))
def test_frame_round_trip(n, ch, dim):
    x = np.arange(n * ch, dtype=float).reshape(n, ch)
    clip = AudioClip(x, 8000)
    fs = frame(clip, dim)
    assert fs.tail.shape[1] < dim
    np.testing.assert_array_equal(deframe(fs).samples, x)


def test_frame_rejects_bad_dimension():
    with pytest.raises(ValueError):
        frame(AudioClip(np.zeros(4), 8000), 0)


@pytest.mark.parametrize("rate", [1, 2])
@pytest.mark.parametrize("name", LATTICE_NAMES)
def test_pipeline_reversibility(name, rate, rng):
    host = AudioClip(rng.integers(-32768, 32768, size=(3001, 2)).astype(float), 44100)
    host_bytes = wav_encode(host)
    pair = nested_for_rate(name, 2000.0, rate)
    codec = MmeCodec(MmeConfig(pair, alpha_lower_bound(pair)))
    fs = frame(wav_decode(host_bytes), codec.dim)
    frames = fs.interleaved()
    bits = rng.integers(0, 2, len(frames) * codec.bits_per_frame)
    w, _ = codec.embed(frames, bits)
    # full-scale host with a 2000 step pushes some samples past the PCM range
    stored = wav_encode(deframe(fs.with_interleaved(w)), FLOAT64)
    fs2 = frame(wav_decode(stored), codec.dim)
    got, restored = codec.extract(fs2.interleaved())
    np.testing.assert_array_equal(got, bits)
    out = deframe(fs2.with_interleaved(restored))
    assert np.max(np.abs(out.samples - np.rint(out.samples))) < 1e-6
    out.samples = np.rint(out.samples) + 0.0
    assert wav_encode(out, PCM16) == host_bytes
