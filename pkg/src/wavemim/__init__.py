"""Wavelet-coefficient reconstruction targets for masked image modeling.

A multi-level 2D Haar transform engine with a direct-summation oracle, the
multi-level target generator, block-wise masking with exact rescaling, a tiny
multi-tap transformer autoencoder with verified gradients, the weighted
masked loss, and a CLI pipeline (synthetic corpus, AdamW training,
verification suites).
"""

from .dwt import (
    FilterPair,
    WaveletPyramid,
    dwt2_level,
    dwt2_multi,
    dwt2_oracle,
    haar_filters,
    idwt2_multi,
)
from .loss import LossReport, make_report, masked_distance, total_loss
from .masking import PatchMask, ScaleMask, gen_block_mask, rescale_mask, visible_indices
from .model import (
    EncoderTaps,
    ModelConfig,
    ModelParams,
    decode_level,
    encode_taps,
    forward_loss,
    grad,
    init_params,
)
from .targets import LevelSelection, TargetSet, build_targets, layer_for_level, normalize_targets

__version__ = "0.1.0"

__all__ = [
    "FilterPair",
    "WaveletPyramid",
    "dwt2_level",
    "dwt2_multi",
    "dwt2_oracle",
    "haar_filters",
    "idwt2_multi",
    "LossReport",
    "make_report",
    "masked_distance",
    "total_loss",
    "PatchMask",
    "ScaleMask",
    "gen_block_mask",
    "rescale_mask",
    "visible_indices",
    "EncoderTaps",
    "ModelConfig",
    "ModelParams",
    "decode_level",
    "encode_taps",
    "forward_loss",
    "grad",
    "init_params",
    "LevelSelection",
    "TargetSet",
    "build_targets",
    "layer_for_level",
    "normalize_targets",
    "__version__",
]
