"""Tucker low-rank compression toolkit for multi-exposure stereo image stacks."""

from .tensor import DenseTensor, fold, fro_norm, gram, leading_eigvecs, ttm, ttmc, unfold
from .tucker import (
    PPState,
    SolveConfig,
    SolveTrace,
    TuckerModel,
    fit,
    hooi_sweep,
    hosvd,
    pp_operators,
    pp_sweep,
    reconstruct,
    t_hosvd,
    tucker_als,
)
from .color import (
    ColorImage,
    SPACE_IPT,
    SPACE_RGB,
    SPACE_YCBCR,
    ipt_to_rgb,
    rgb_to_ipt,
    rgb_to_ycbcr,
    ycbcr_to_rgb,
)
from .sceneio import SceneStack, load_scene, stack_to_tensor, tensor_to_stack, write_image
from .codec import (
    BackendConfig,
    CompressedStream,
    CodecError,
    EncodeConfig,
    PATH_FRAMES,
    PATH_LATENT,
    QuantizedModel,
    decode_stream,
    dequantize,
    encode_stream,
    parse_stream,
    preset_ranks,
    quantize_core,
    serialize_stream,
)
from .metrics import RDPoint, mse, psnr, scene_psnr

__version__ = "0.1.0"

__all__ = [
    "DenseTensor", "fold", "fro_norm", "gram", "leading_eigvecs", "ttm", "ttmc", "unfold",
    "PPState", "SolveConfig", "SolveTrace", "TuckerModel", "fit", "hooi_sweep", "hosvd",
    "pp_operators", "pp_sweep", "reconstruct", "t_hosvd", "tucker_als",
    "ColorImage", "SPACE_IPT", "SPACE_RGB", "SPACE_YCBCR",
    "ipt_to_rgb", "rgb_to_ipt", "rgb_to_ycbcr", "ycbcr_to_rgb",
    "SceneStack", "load_scene", "stack_to_tensor", "tensor_to_stack", "write_image",
    "BackendConfig", "CompressedStream", "CodecError", "EncodeConfig",
    "PATH_FRAMES", "PATH_LATENT", "QuantizedModel",
    "decode_stream", "dequantize", "encode_stream", "parse_stream",
    "preset_ranks", "quantize_core", "serialize_stream",
    "RDPoint", "mse", "psnr", "scene_psnr",
    "__version__",
]
