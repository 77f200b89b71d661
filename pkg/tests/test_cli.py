import json

import numpy as np
import pytest

from mmewm.audio import AudioClip, wav_read, wav_write
from mmewm.cli import main
from mmewm.synth import tone_clip


@pytest.fixture
def host(tmp_path):
    path = tmp_path / "host.wav"
    wav_write(tone_clip(1.0, rms=1000.0), path)
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    report = json.loads(out.out) if code == 0 and out.out.strip().startswith("{") else None
    return code, report, out.err


def test_defaults_swr_matches_flat_host_prediction(tmp_path, capsys):
    # a loud multi-tone spreads samples over many coarse cells, close to the flat-host model
    src = tmp_path / "loud.wav"
    wav_write(tone_clip(1.0, rms=12000.0), src)
    code, rep, _ = run(capsys, "embed", src, "-o", tmp_path / "w.wav")
    assert code == 0
    assert rep["swr_db"] == pytest.approx(rep["swr_flat_prediction_db"], rel=0.01)


def test_round_trip_with_file_payload(tmp_path, capsys, host):
    payload = tmp_path / "msg.bin"
    payload.write_bytes(b"meet in the middle" * 40)
    wm = tmp_path / "wm.wav"
    code, rep, _ = run(capsys, "embed", host, "-o", wm, "--payload", payload)
    assert code == 0 and rep["payload_bits"] == 8 * 18 * 40
    assert rep["capacity_bits"] == 44100
    code, rep, _ = run(capsys, "extract", wm, "-o", tmp_path / "out.bin", "--restored", tmp_path / "r.wav")
    assert code == 0
    assert rep["payload_digest_ok"] and rep["pristine"]
    assert (tmp_path / "out.bin").read_bytes() == payload.read_bytes()
    assert (tmp_path / "r.wav").read_bytes() == host.read_bytes()
    # untouched frames after the payload are copied through
    assert rep["restored_matches_host_file"]


@pytest.mark.parametrize(
    "flags",
    [
        ["--scheme", "iqim"],
        ["--lattice", "E8", "--rate", "2", "--alpha", "0.9"],
        ["--lattice", "A2", "--nesting", "2,4", "--alpha", "0.8"],
        ["--lattice", "Z1", "--bound", "self_similar", "--alpha", "0.5"],
    ],
)
def test_restore_is_byte_identical(tmp_path, capsys, host, flags):
    wm = tmp_path / "wm.wav"
    assert run(capsys, "embed", host, "-o", wm, *flags)[0] == 0
    code, rep, _ = run(capsys, "restore", wm, "-o", tmp_path / "r.wav")
    assert code == 0 and rep["ber"] == 0.0
    assert (tmp_path / "r.wav").read_bytes() == host.read_bytes()


def test_multichannel_capacity(tmp_path, capsys):
    src = tmp_path / "st.wav"
    wav_write(tone_clip(0.1, channels=2), src)  # 4410 samples per channel
    code, rep, _ = run(capsys, "embed", src, "-o", tmp_path / "w.wav", "--lattice", "D3", "--rate", "2", "--alpha", "0.9")
    assert code == 0
    assert rep["capacity_bits"] == 2 * (4410 // 3) * 3 * 2
    code, rep, _ = run(capsys, "restore", tmp_path / "w.wav", "-o", tmp_path / "r.wav")
    assert code == 0 and rep["ber"] == 0.0
    assert (tmp_path / "r.wav").read_bytes() == src.read_bytes()


def test_zero_length_payload(tmp_path, capsys, host):
    wm = tmp_path / "w.wav"
    code, rep, _ = run(capsys, "embed", host, "-o", wm, "--payload-bits", "0")
    assert code == 0 and rep["embedded_frames"] == 0
    np.testing.assert_array_equal(wav_read(wm).samples, wav_read(host).samples)


def test_alpha_below_bound_is_rejected_before_writing(tmp_path, capsys, host):
    wm = tmp_path / "w.wav"
    code, _, err = run(capsys, "embed", host, "-o", wm, "--alpha", "0.6")
    assert code == 3 and "alpha" in err
    assert not wm.exists()


def test_capacity_error(tmp_path, capsys, host):
    code, _, err = run(capsys, "embed", host, "-o", tmp_path / "w.wav", "--payload-bits", "50000")
    assert code == 5 and "44100 bits" in err


def test_format_error(tmp_path, capsys):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"RIFF\0\0\0\0WAVEjunk")
    code, _, _ = run(capsys, "embed", bad, "-o", tmp_path / "w.wav")
    assert code == 4


def test_wrong_alpha_is_an_integrity_error(tmp_path, capsys, host):
    wm = tmp_path / "w.wav"
    run(capsys, "embed", host, "-o", wm)
    code, _, err = run(capsys, "restore", wm, "-o", tmp_path / "r.wav", "--alpha", "0.7")
    assert code == 6
    assert not (tmp_path / "r.wav").exists()


def test_tampered_sidecar(tmp_path, capsys, host):
    wm = tmp_path / "w.wav"
    run(capsys, "embed", host, "-o", wm)
    meta = tmp_path / "w.wav.json"
    doc = json.loads(meta.read_text())
    doc["params"]["alpha"] = 0.7
    meta.write_text(json.dumps(doc))
    assert run(capsys, "extract", wm)[0] == 6


def test_mismatched_file(tmp_path, capsys, host):
    wm = tmp_path / "w.wav"
    run(capsys, "embed", host, "-o", wm)
    short = tmp_path / "short.wav"
    clip = wav_read(wm)
    wav_write(AudioClip(clip.samples[:-5], clip.sample_rate), short, "float64")
    code, _, err = run(capsys, "extract", short, "--meta", tmp_path / "w.wav.json")
    assert code == 6 and "sidecar expects" in err


def test_attack_then_restore(tmp_path, capsys, host):
    wm, att = tmp_path / "w.wav", tmp_path / "a.wav"
    run(capsys, "embed", host, "-o", wm)
    code, rep, _ = run(capsys, "attack", wm, "-o", att, "--snr", "25", "--meta", tmp_path / "w.wav.json", "--seed", "3")
    assert code == 0
    sigma = rep["sigma"]
    code, rep, _ = run(
        capsys, "restore", att, "-o", tmp_path / "r.wav", "--meta", tmp_path / "w.wav.json", "--reference", host
    )
    assert code == 0 and not rep["pristine"]
    assert rep["restored_format"] == "float64"
    assert rep["restore_rmse"] == pytest.approx(sigma / (1 - 0.6569), rel=0.05)
    assert rep["ber"] == 0.0


def test_qim_cannot_restore(tmp_path, capsys, host):
    wm = tmp_path / "w.wav"
    run(capsys, "embed", host, "-o", wm, "--scheme", "qim")
    code, rep, _ = run(capsys, "extract", wm)
    assert code == 0 and rep["ber"] == 0.0
    assert run(capsys, "restore", wm, "-o", tmp_path / "r.wav")[0] == 3


def test_config_file_and_override(tmp_path, capsys, host):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# shared settings\nlattice = A2\nalpha = 0.1\nrate = 2\n")
    wm = tmp_path / "w.wav"
    # alpha from the file is infeasible; the flag wins
    assert run(capsys, "--config", cfg, "embed", host, "-o", wm)[0] == 3
    assert run(capsys, "embed", host, "-o", wm, "--config", cfg, "--alpha", "0.85")[0] == 0
    params = json.loads((tmp_path / "w.wav.json").read_text())["params"]
    assert params["lattice"] == "A2" and params["rate"] == 2 and params["alpha"] == 0.85
    cfg.write_text("colour = blue\n")
    assert run(capsys, "--config", cfg, "embed", host, "-o", wm)[0] == 3


def test_bench_csv_is_reproducible(tmp_path, capsys):
    argv = ["bench", "--schemes", "mme,iqim", "--lattices", "Z2,A2", "--rates", "1",
            "--alphas", "0.6,bound", "--snrs", "20,inf", "--frames", "500"]
    assert main(argv + ["-o", str(tmp_path / "a.csv")]) == 0
    assert main(argv + ["-o", str(tmp_path / "b.csv")]) == 0
    capsys.readouterr()
    a = (tmp_path / "a.csv").read_text()
    assert a == (tmp_path / "b.csv").read_text()
    assert a.startswith("# mmewm-bench v1 columns:")
    assert main(argv) == 0
    assert capsys.readouterr().out == a
