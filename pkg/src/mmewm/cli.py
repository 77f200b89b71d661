"""Command-line interface: ``mmewm {embed,extract,restore,attack,bench}``.

Embedding parameters travel from ``embed`` to ``extract`` in a JSON sidecar
(``<output>.json`` by default) whose ``params`` block is protected by a
SHA-256 checksum.  Any subcommand also accepts ``--config FILE`` holding
``key = value`` lines; flags given on the command line take precedence.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audio import FLOAT64, PCM16, AudioClip, deframe, frame, wav_decode, wav_encode, wav_read
from .bench import run_sweep, sweep_cells
from .errors import CapacityError, ConfigError, IntegrityError, MmeError
from .lattice import parse_kind
from .metrics import AwgnChannel, awgn_apply, ber, flat_host_distortion, rmse, signal_power, snr_to_sigma, swr, write_csv
from .nested import build_nested, nested_for_rate
from .schemes import IqimCodec, IqimConfig, MmeCodec, MmeConfig, QimCodec
from .synth import rng_for

SIDECAR_VERSION = 1
RESIDUAL_TOL = 1e-6
DEFAULTS = dict(scheme="mme", lattice="Z2", delta=2000.0, rate=1, alpha="0.6569", bound="general")


# ------------------------------------------------------------ helpers


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _words(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _bits_digest(bits) -> str:
    return _sha256(np.asarray(bits, dtype=np.uint8).tobytes())


def _samples_digest(clip: AudioClip) -> str:
    return _sha256(np.ascontiguousarray(clip.samples, dtype="<f8").tobytes())


def _params_checksum(params: dict) -> str:
    return _sha256(json.dumps(params, sort_keys=True, separators=(",", ":")).encode())


def _emit(report: dict) -> None:
    print(json.dumps(report, indent=2, sort_keys=True, default=float))


def build_codec(params: dict, enforce_bounds: bool = True):
    """Codec from a parameter mapping (CLI flags or a sidecar ``params`` block)."""
    scheme = params["scheme"]
    kind, dim = parse_kind(params["lattice"])
    if params.get("nesting"):
        nesting = list(params["nesting"])
        pair = build_nested(kind, float(params["delta"]), nesting, dim or len(nesting))
    else:
        pair = nested_for_rate(kind, float(params["delta"]), int(params["rate"]), dim)
    if scheme == "mme":
        return MmeCodec(MmeConfig(pair, float(params["alpha"]), bound=params.get("bound", "general"),
                                  enforce_bounds=enforce_bounds))
    if scheme == "qim":
        return QimCodec(pair)
    if scheme == "iqim":
        if kind != "ZN":
            raise ConfigError(f"iqim runs on cubic lattices only, got {params['lattice']}")
        bits = params.get("iqim_bits") or params.get("rate")
        return IqimCodec(IqimConfig(float(params["delta"]), int(bits)), pair.dim)
    raise ConfigError(f"unknown scheme {scheme!r}")


def _codec_params(args) -> dict:
    params = {
        "scheme": args.scheme,
        "lattice": args.lattice,
        "delta": float(args.delta),
        "rate": int(args.rate),
        "nesting": _ints(args.nesting) if args.nesting else None,
        "alpha": float(args.alpha) if args.scheme == "mme" else None,
        "bound": args.bound,
        "iqim_bits": int(args.iqim_bits) if args.iqim_bits else None,
    }
    if params["nesting"] and args.scheme == "iqim":
        raise ConfigError("iqim takes --rate/--iqim-bits, not --nesting")
    return params


def _payload_bits(args, capacity: int) -> tuple[np.ndarray, str]:
    if args.payload:
        raw = Path(args.payload).read_bytes()
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))
        source = "file"
    else:
        n = capacity if args.payload_bits is None else int(args.payload_bits)
        if n < 0:
            raise ConfigError("payload bit count must be non-negative")
        bits = rng_for(args.seed, 5).integers(0, 2, size=n).astype(np.uint8)
        source = "random"
    if len(bits) > capacity:
        raise CapacityError(f"payload of {len(bits)} bits exceeds the capacity of {capacity} bits")
    return bits, source


def _load_sidecar(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
        params = doc["params"]
        checksum = doc["checksum"]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise IntegrityError(f"cannot read sidecar {path}: {exc}") from exc
    if _params_checksum(params) != checksum:
        raise IntegrityError(f"sidecar {path} fails its checksum; parameters were altered")
    return params


# ------------------------------------------------------------ commands


def cmd_embed(args) -> dict:
    params = _codec_params(args)
    codec = build_codec(params)
    data = Path(args.input).read_bytes()
    clip = wav_decode(data, args.input)
    stream = frame(clip, codec.dim)
    hosts = stream.interleaved()
    k = codec.bits_per_frame
    capacity = len(hosts) * k
    bits, source = _payload_bits(args, capacity)

    n_embed = math.ceil(len(bits) / k) if k else 0
    padded = np.zeros(n_embed * k, dtype=np.uint8)
    padded[: len(bits)] = bits
    marked = hosts.copy()
    if n_embed:
        marked[:n_embed] = codec.embed(hosts[:n_embed], padded)[0]
    out_clip = deframe(stream.with_interleaved(marked))
    out_bytes = wav_encode(out_clip, FLOAT64)
    clipped = int(np.count_nonzero(np.any(np.abs(marked[:n_embed]) > 32767, axis=-1)))

    params.update(
        version=SIDECAR_VERSION,
        frame_dim=codec.dim,
        bits_per_frame=k,
        embedded_frames=n_embed,
        payload_bits=int(len(bits)),
        payload_source=source,
        payload_sha256=_bits_digest(bits),
        seed=int(args.seed),
        host_sha256=_sha256(data),
        host_samples_sha256=_samples_digest(clip),
        host_power=signal_power(clip.samples),
        watermarked_sha256=_sha256(out_bytes),
        sample_rate=clip.sample_rate,
        channels=clip.channels,
        n_samples=len(clip),
        source_format=clip.source_format,
    )
    Path(args.output).write_bytes(out_bytes)
    meta = args.meta or f"{args.output}.json"
    Path(meta).write_text(json.dumps({"params": params, "checksum": _params_checksum(params)}, indent=2, sort_keys=True))

    report = {
        "capacity_bits": capacity,
        "payload_bits": int(len(bits)),
        "embedded_frames": n_embed,
        "swr_db": swr(clip.samples, out_clip.samples),
        "clipped_frames": clipped,
        "sidecar": meta,
    }
    if args.scheme in ("mme", "qim") and n_embed == len(hosts) and len(hosts):
        pair = codec.pair
        per_sample = flat_host_distortion(pair.coarse, codec.alpha) / pair.dim
        report["swr_flat_prediction_db"] = 10 * math.log10(signal_power(hosts) / per_sample)
    return report


def _restore(args, want_payload: bool, want_audio: bool) -> dict:
    params = _load_sidecar(args.meta or f"{args.input}.json")
    if args.alpha is not None:
        params = dict(params, alpha=float(args.alpha))
    codec = build_codec(params, enforce_bounds=False)
    data = Path(args.input).read_bytes()
    clip = wav_decode(data, args.input)
    if (clip.sample_rate, clip.channels, len(clip)) != (params["sample_rate"], params["channels"], params["n_samples"]):
        raise IntegrityError(
            f"{args.input} has rate/channels/length {(clip.sample_rate, clip.channels, len(clip))}, "
            f"sidecar expects {(params['sample_rate'], params['channels'], params['n_samples'])}"
        )
    pristine = _sha256(data) == params["watermarked_sha256"]

    stream = frame(clip, params["frame_dim"])
    frames = stream.interleaved()
    n_embed = params["embedded_frames"]
    bits, restored_frames = codec.extract(frames[:n_embed]) if n_embed else (np.zeros(0, np.uint8), frames[:0])
    bits = np.asarray(bits, dtype=np.uint8)[: params["payload_bits"]]
    payload_ok = _bits_digest(bits) == params["payload_sha256"]

    report = {"pristine": pristine, "payload_bits": int(len(bits)), "payload_digest_ok": payload_ok}
    if params["payload_source"] == "random":
        sent = rng_for(params["seed"], 5).integers(0, 2, size=params["payload_bits"]).astype(np.uint8)
        report["ber"] = ber(sent, bits)
    if pristine and not payload_ok:
        raise IntegrityError("extracted payload does not match the sidecar digest; parameters do not fit this file")

    if want_payload and args.payload_out:
        Path(args.payload_out).write_bytes(np.packbits(bits).tobytes())
        report["payload_out"] = args.payload_out

    restored_path = args.output if want_audio else getattr(args, "restored", None)
    if restored_path:
        if not codec.reversible:
            raise ConfigError(f"{params['scheme']} is not reversible; no host can be restored")
        merged = frames.copy()
        merged[:n_embed] = restored_frames
        restored = deframe(stream.with_interleaved(merged))
        fmt = params["source_format"]
        if fmt == PCM16:
            residual = float(np.max(np.abs(restored.samples - np.rint(restored.samples)))) if len(restored) else 0.0
            report["integer_residual"] = residual
            if residual <= RESIDUAL_TOL:
                restored.samples = np.rint(restored.samples) + 0.0  # drop negative zeros
                if np.any(np.abs(restored.samples) > 32768):
                    fmt = FLOAT64
            elif pristine:
                raise IntegrityError(
                    f"restored samples are not integers (max residual {residual:.3g}); "
                    "the parameters do not match this file"
                )
            else:
                fmt = FLOAT64
        out = wav_encode(AudioClip(restored.samples, restored.sample_rate), fmt)
        if pristine and _samples_digest(restored) != params["host_samples_sha256"]:
            raise IntegrityError("restored host differs from the embedded host; parameters do not match this file")
        Path(restored_path).write_bytes(out)
        report["restored"] = restored_path
        report["restored_format"] = fmt
        report["restored_matches_host_file"] = _sha256(out) == params["host_sha256"]
        if args.reference:
            ref = wav_read(args.reference)
            report["restore_rmse"] = rmse(restored.samples, ref.samples)
    return report


def cmd_extract(args) -> dict:
    return _restore(args, want_payload=True, want_audio=False)


def cmd_restore(args) -> dict:
    return _restore(args, want_payload=bool(args.payload_out), want_audio=True)


def cmd_attack(args) -> dict:
    clip = wav_read(args.input)
    if args.meta:
        power = float(_load_sidecar(args.meta)["host_power"])
    else:
        power = signal_power(clip.samples)
    sigma = snr_to_sigma(float(args.snr), power)
    noisy = awgn_apply(AwgnChannel(sigma, args.seed), clip.samples)
    Path(args.output).write_bytes(wav_encode(AudioClip(noisy, clip.sample_rate), FLOAT64))
    return {"snr_db": float(args.snr), "sigma": sigma, "host_power": power, "seed": int(args.seed)}


def cmd_bench(args) -> dict | None:
    cells = sweep_cells(
        _words(args.schemes), _words(args.lattices), _ints(args.rates), _words(args.alphas),
        _floats(args.deltas), _floats(args.snrs), args.frames, args.host, args.host_level, args.seed,
    )
    reports = run_sweep(cells, args.workers)
    comment = (
        f"seed={args.seed} host={args.host} frames={args.frames} "
        "snr=host-power-referenced rng=philox"
    )
    if args.output in (None, "-"):
        write_csv(reports, sys.stdout, comment)
        return None
    with open(args.output, "w", newline="") as fh:
        write_csv(reports, fh, comment)
    return {"cells": len(reports), "output": args.output}


# ------------------------------------------------------------ parser


def _add_scheme_flags(p) -> None:
    p.add_argument("--scheme", choices=("mme", "iqim", "qim"), default=DEFAULTS["scheme"])
    p.add_argument("--lattice", default=DEFAULTS["lattice"], help="Z<N>, A2, D3, D4 or E8")
    p.add_argument("--delta", type=float, default=DEFAULTS["delta"], help="fine lattice scale")
    p.add_argument("--rate", type=int, default=DEFAULTS["rate"], help="bits per dimension (J = 2^R I)")
    p.add_argument("--nesting", default=None, help="comma-separated diagonal of J, overrides --rate")
    p.add_argument("--alpha", default=DEFAULTS["alpha"])
    p.add_argument("--bound", choices=("general", "self_similar"), default=DEFAULTS["bound"])
    p.add_argument("--iqim-bits", type=int, default=None, help="IQIM bits per sample (default: rate)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmewm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="embed a payload into a WAV file")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--meta", help="sidecar path (default: OUTPUT.json)")
    p.add_argument("--payload", help="payload file (bytes, MSB first)")
    p.add_argument("--payload-bits", type=int, default=None, help="random payload length (default: capacity)")
    p.add_argument("--seed", type=int, default=0)
    _add_scheme_flags(p)
    p.set_defaults(func=cmd_embed)

    for name, func, helptext in (
        ("extract", cmd_extract, "recover the payload (and optionally the host)"),
        ("restore", cmd_restore, "recover the original host"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("input")
        p.add_argument("--meta", help="sidecar path (default: INPUT.json)")
        p.add_argument("--alpha", type=float, default=None, help="override the sidecar alpha")
        p.add_argument("--reference", help="original WAV, for restore RMSE")
        if name == "extract":
            p.add_argument("-o", "--payload-out", default=None)
            p.add_argument("--restored", default=None, help="also write the restored host here")
        else:
            p.add_argument("-o", "--output", required=True)
            p.add_argument("--payload-out", default=None)
        p.set_defaults(func=func)

    p = sub.add_parser("attack", help="add white Gaussian noise at a given SNR")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--snr", type=float, required=True, help="dB, relative to host power")
    p.add_argument("--meta", help="sidecar whose host power sets the noise level")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("bench", help="parameter sweep to CSV")
    p.add_argument("--schemes", default="mme")
    p.add_argument("--lattices", default="Z2")
    p.add_argument("--rates", default="1")
    p.add_argument("--alphas", default="bound", help="numbers, 'bound' or 'bound-ss'")
    p.add_argument("--deltas", default="2000")
    p.add_argument("--snrs", default="25", help="dB values; 'inf' for a noiseless channel")
    p.add_argument("--frames", type=int, default=10000)
    p.add_argument("--host", choices=("flat", "box", "tone"), default="flat")
    p.add_argument("--host-level", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_bench)
    return parser


def read_config(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{n}: expected key = value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return rest
    values = read_config(known.config)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((a for a in rest if a in subparsers.choices), None)
    if command is None:
        return rest
    sp = subparsers.choices[command]
    dests = {a.dest for a in sp._actions}
    unknown = sorted(set(values) - dests)
    if unknown:
        raise ConfigError(f"config keys not accepted by '{command}': {', '.join(unknown)}")
    for action in sp._actions:
        if action.dest in values:
            action.required = False
    sp.set_defaults(**values)
    return rest


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_apply_config(parser, argv))
        report = args.func(args)
    except MmeError as exc:
        print(f"mmewm: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"mmewm: error: {exc}", file=sys.stderr)
        return 1
    if report is not None:
        _emit(report)
    return 0
