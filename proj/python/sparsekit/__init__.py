"""Sparse training and pruning primitives backed by the C++ core."""

import json as _json

from ._core import (
    ArgumentError,
    CheckpointError,
    ConfigError,
    DataError,
    Schedule,
    SparsekitError,
    StructureError,
    UnsupportedError,
    compute_distribution,
    drop_fraction,
    instant_sparsify,
    load_checkpoint,
    pack_mask,
    structured_mask,
    topk_indices,
    unpack_mask,
    zero_count,
)
from ._core import train as _train


def train(config):
    """Train one arm from a config dict (or JSON string); metrics come back parsed."""
    text = config if isinstance(config, str) else _json.dumps(config)
    result = _train(text)
    result["metrics"] = [_json.loads(line) for line in result["metrics"]]
    return result


__all__ = [
    "ArgumentError",
    "CheckpointError",
    "ConfigError",
    "DataError",
    "Schedule",
    "SparsekitError",
    "StructureError",
    "UnsupportedError",
    "compute_distribution",
    "drop_fraction",
    "instant_sparsify",
    "load_checkpoint",
    "pack_mask",
    "structured_mask",
    "topk_indices",
    "train",
    "unpack_mask",
    "zero_count",
]
