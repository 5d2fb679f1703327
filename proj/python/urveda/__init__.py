"""Residual UNet segmentation with dual attention and a transformer bottleneck."""

from ._urveda import (
    ConfigError,
    DataError,
    Model,
    NumericError,
    ShapeError,
    ce_loss,
    dsc,
    generate_phantom,
    hausdorff,
    kfold_split,
    read_nifti1,
    sobel_magnitude,
    softmax,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Model",
    "NumericError",
    "ShapeError",
    "ce_loss",
    "dsc",
    "generate_phantom",
    "hausdorff",
    "kfold_split",
    "read_nifti1",
    "sobel_magnitude",
    "softmax",
]
