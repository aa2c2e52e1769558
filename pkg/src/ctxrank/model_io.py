"""Persisted trained model: CTXR binary format.

Layout (little-endian): magic ``CTXR``, u32 format version, a u32-length
JSON header carrying the feature schema, normalizer statistics, ablation
mask and architecture descriptor, then every weight matrix row-major as
float32 in a fixed order (cross W/b alternating, hidden W/b alternating,
head weights, head bias), and finally a u32-length UTF-8 block echoing the
training configuration.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .dcn import DcnParams
from .errors import DataError
from .features import AblationMask, FeatureSchema, Normalizer

MAGIC = b"CTXR"
FORMAT_VERSION = 1


@dataclass
class RankerModel:
    schema: FeatureSchema
    normalizer: Normalizer
    params: DcnParams
    mask: AblationMask
    config_echo: str = ""


def _header(model: RankerModel) -> dict:
    return {
        "schema": {
            "context_attrs": list(model.schema.context_attrs),
            "base_features": list(model.schema.base_features),
            "version": model.schema.version,
        },
        "normalizer": {
            "mean": model.normalizer.mean.tolist(),
            "std": model.normalizer.std.tolist(),
        },
        "mask": {
            "use_context": model.mask.use_context,
            "use_lexical_context": model.mask.use_lexical_context,
            "use_semantic_context": model.mask.use_semantic_context,
        },
        "arch": {
            "input_dim": model.params.input_dim,
            "n_cross": model.params.n_cross,
            "hidden_widths": model.params.hidden_widths,
            "activation": model.params.activation,
        },
    }


def save_model(model: RankerModel, path) -> None:
    header = json.dumps(_header(model), separators=(",", ":")).encode("utf-8")
    echo = model.config_echo.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for arr in model.params.as_list():
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
        fh.write(struct.pack("<I", len(echo)))
        fh.write(echo)


def load_model(path) -> RankerModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise DataError(f"unrecognized format: bad magic in {path}")
    if len(data) < 12:
        raise DataError(f"truncated model file: {path}")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported model format version {version}")
    (header_len,) = struct.unpack_from("<I", data, 8)
    offset = 12
    if offset + header_len > len(data):
        raise DataError(f"truncated model file: {path}")
    try:
        header = json.loads(data[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"corrupt model header: {exc}") from exc
    offset += header_len

    schema = FeatureSchema(
        context_attrs=tuple(header["schema"]["context_attrs"]),
        base_features=tuple(header["schema"]["base_features"]),
        version=header["schema"]["version"],
    )
    normalizer = Normalizer(
        mean=np.asarray(header["normalizer"]["mean"], dtype=np.float64),
        std=np.asarray(header["normalizer"]["std"], dtype=np.float64),
    )
    mask = AblationMask(
        use_context=header["mask"]["use_context"],
        use_lexical_context=header["mask"]["use_lexical_context"],
        use_semantic_context=header["mask"]["use_semantic_context"],
    )
    arch = header["arch"]
    p = int(arch["input_dim"])
    if p != schema.total_dim:
        raise DataError(
            f"architecture input dim {p} does not match schema dim {schema.total_dim}"
        )

    def take(shape) -> np.ndarray:
        nonlocal offset
        count = int(np.prod(shape)) if shape else 1
        end = offset + 4 * count
        if end > len(data):
            raise DataError(f"truncated model file: {path}")
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=offset).astype(np.float64)
        offset = end
        return arr.reshape(shape) if shape else arr

    cross_w, cross_b, hidden_w, hidden_b = [], [], [], []
    for _ in range(int(arch["n_cross"])):
        cross_w.append(take((p, p)))
        cross_b.append(take((p,)))
    prev = p
    for width in arch["hidden_widths"]:
        width = int(width)
        hidden_w.append(take((width, prev)))
        hidden_b.append(take((width,)))
        prev = width
    head_w = take((prev,))
    head_b = float(take(())[0])

    (echo_len,) = struct.unpack_from("<I", data, offset)
    offset += 4
    if offset + echo_len != len(data):
        raise DataError(f"model file length mismatch: {path}")
    echo = data[offset : offset + echo_len].decode("utf-8")

    params = DcnParams(
        input_dim=p,
        cross_w=cross_w,
        cross_b=cross_b,
        hidden_w=hidden_w,
        hidden_b=hidden_b,
        head_w=head_w,
        head_b=head_b,
        activation=arch.get("activation", "relu"),
    )
    for arr in params.as_list():
        if not np.all(np.isfinite(arr)):
            raise DataError(f"non-finite weights in model file: {path}")
    return RankerModel(schema=schema, normalizer=normalizer, params=params, mask=mask, config_echo=echo)
