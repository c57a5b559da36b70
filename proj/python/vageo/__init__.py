"""Click-guided cross-view object localization."""

from ._vageo import (
    RING_WEIGHT_ABLATION,
    ConfigError,
    IoError,
    ParseError,
    PreconditionError,
    ShapeError,
    ValidationError,
    VageoError,
    accuracy_at,
    cli,
    config,
    csha_forward,
    csha_identity,
    decode_grid,
    drone_encoding,
    encode_box,
    ground_encoding,
    iou,
    load_manifest,
    lr_schedule,
    patch_retrieval,
    summarize,
    synth_generate,
    train_evaluate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
