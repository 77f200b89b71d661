"""Reversible audio watermarking on nested lattices.

The core scheme embeds ``w = alpha * q + (1 - alpha) * s`` where ``q`` is the
host's nearest point on the message coset; QIM and IQIM are provided as
baselines together with AWGN/BER/GSNR metrics, WAV I/O and a sweep harness.
"""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    ConfigError,
    FormatError,
    IntegrityError,
    InvalidParameterError,
    MmeError,
    PrecisionError,
)
from .lattice import Lattice, cvp, cvp_bruteforce, is_lattice_point, make_lattice, mod_lattice
from .nested import (
    CosetTable,
    NestedPair,
    build_nested,
    coset_representatives,
    decode_coset,
    nested_for_rate,
    quantize_to_coset,
)
from .schemes import (
    IqimCodec,
    IqimConfig,
    MmeCodec,
    MmeConfig,
    QimCodec,
    alpha_lower_bound,
    alpha_upper_bound,
    iqim_embed,
    iqim_extract,
    mme_embed,
    mme_extract,
    qim_scalar_decode,
    qim_scalar_embed,
)
from .metrics import (
    AwgnChannel,
    MetricsReport,
    awgn_apply,
    ber,
    gsnr_empirical,
    gsnr_theoretical,
    snr_to_sigma,
    swr,
)
from .audio import AudioClip, FrameStream, deframe, frame, wav_read, wav_write

__all__ = [
    "Lattice",
    "cvp",
    "cvp_bruteforce",
    "is_lattice_point",
    "make_lattice",
    "mod_lattice",
    "AudioClip",
    "FrameStream",
    "deframe",
    "frame",
    "wav_read",
    "wav_write",
    "CapacityError",
    "ConfigError",
    "FormatError",
    "IntegrityError",
    "InvalidParameterError",
    "MmeError",
    "PrecisionError",
    "CosetTable",
    "NestedPair",
    "build_nested",
    "coset_representatives",
    "decode_coset",
    "nested_for_rate",
    "quantize_to_coset",
    "IqimCodec",
    "IqimConfig",
    "MmeCodec",
    "QimCodec",
    "MmeConfig",
    "alpha_lower_bound",
    "alpha_upper_bound",
    "iqim_embed",
    "iqim_extract",
    "mme_embed",
    "mme_extract",
    "qim_scalar_decode",
    "qim_scalar_embed",
    "AwgnChannel",
    "MetricsReport",
    "awgn_apply",
    "ber",
    "gsnr_empirical",
    "gsnr_theoretical",
    "snr_to_sigma",
    "swr",
]
