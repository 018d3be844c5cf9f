"""Model and detector container files.

Layout: a UTF-8 text manifest, one directive per line, terminated by a
``payload`` line, then the raw tensor bytes.

    wavedetect-container 1
    config {...model config as JSON...}
    meta kind detector
    meta mode semi
    meta threshold 0.0123
    tensor scale0.conv0.kernel 16,8,8 0
    ...
    payload
    <little-endian float32 payloads, in manifest order>

Offsets are relative to the start of the payload. Weights are stored as
float32; loading widens back to float64. Because float32 -> float64 ->
float32 is lossless, a save/load/save cycle is byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DataError
from .model import ModelConfig, WaveletAutoencoder, config_from_dict, config_to_dict

MAGIC = "wavedetect-container"
VERSION = 1


def _write_container(path, config: ModelConfig, named_arrays, meta: dict):
    lines = [f"{MAGIC} {VERSION}"]
    lines.append("config " + json.dumps(config_to_dict(config), sort_keys=True))
    for key, value in meta.items():
        lines.append(f"meta {key} {value}")
    payload = bytearray()
    for name, array in named_arrays:
        raw = np.ascontiguousarray(array, dtype="<f4").tobytes()
        shape = ",".join(str(d) for d in array.shape)
        lines.append(f"tensor {name} {shape} {len(payload)}")
        payload.extend(raw)
    lines.append("payload")
    Path(path).write_bytes("\n".join(lines).encode() + b"\n" + bytes(payload))


def _read_container(path):
    blob = Path(path).read_bytes()
    marker = b"\npayload\n"
    cut = blob.find(marker)
    if cut < 0:
        raise DataError(f"{path}: not a container file (missing payload marker)")
    header = blob[:cut].decode()
    payload = blob[cut + len(marker):]

    lines = header.splitlines()
    magic = lines[0].split()
    if len(magic) != 2 or magic[0] != MAGIC:
        raise DataError(f"{path}: bad magic line {lines[0]!r}")
    if int(magic[1]) != VERSION:
        raise DataError(f"{path}: unsupported format version {magic[1]}")

    config = None
    meta: dict = {}
    tensors: dict = {}
    order = []
    for line in lines[1:]:
        kind, _, rest = line.partition(" ")
        if kind == "config":
            config = config_from_dict(json.loads(rest))
        elif kind == "meta":
            key, _, value = rest.partition(" ")
            meta[key] = value
        elif kind == "tensor":
            name, shape_s, offset_s = rest.rsplit(" ", 2)
            shape = tuple(int(d) for d in shape_s.split(","))
            offset = int(offset_s)
            count = int(np.prod(shape))
            raw = payload[offset : offset + 4 * count]
            if len(raw) != 4 * count:
                raise DataError(f"{path}: payload truncated for tensor {name!r}")
            tensors[name] = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(shape)
            order.append(name)
        else:
            raise DataError(f"{path}: unknown directive {kind!r}")
    if config is None:
        raise DataError(f"{path}: container has no config")
    return config, meta, tensors, order


def _fill_model(config: ModelConfig, tensors: dict) -> WaveletAutoencoder:
    model = WaveletAutoencoder(config)
    for name, param in model.named_parameters():
        if name not in tensors:
            raise DataError(f"container is missing tensor {name!r}")
        stored = tensors[name]
        if stored.shape != param.data.shape:
            raise DataError(
                f"tensor {name!r} has shape {stored.shape}, expected {param.data.shape}"
            )
        param.data = stored
    return model


def save_model(model: WaveletAutoencoder, path):
    arrays = [(name, t.data) for name, t in model.named_parameters()]
    _write_container(path, model.config, arrays, {"kind": "model"})


def load_model(path) -> WaveletAutoencoder:
    config, meta, tensors, _ = _read_container(path)
    if meta.get("kind", "model") != "model":
        raise DataError(f"{path}: container holds a {meta.get('kind')!r}, not a model")
    return _fill_model(config, tensors)


def save_detector(detector, path):
    meta = {
        "kind": "detector",
        "mode": detector.mode,
        "threshold": "none" if detector.threshold is None else repr(detector.threshold),
        "train_loss_mean": repr(detector.train_loss_mean),
    }
    arrays = [(name, t.data) for name, t in detector.model.named_parameters()]
    arrays.append(("norm.mean", detector.norm_mean))
    arrays.append(("norm.std", detector.norm_std))
    _write_container(path, detector.model.config, arrays, meta)


def load_detector(path):
    from .training import Detector

    config, meta, tensors, _ = _read_container(path)
    if meta.get("kind") != "detector":
        raise DataError(f"{path}: container holds a {meta.get('kind')!r}, not a detector")
    for key in ("mode", "threshold", "train_loss_mean"):
        if key not in meta:
            raise DataError(f"{path}: detector container is missing meta field {key!r}")
    for name in ("norm.mean", "norm.std"):
        if name not in tensors:
            raise DataError(f"{path}: detector container is missing tensor {name!r}")
    model = _fill_model(config, tensors)
    threshold = None if meta["threshold"] == "none" else float(meta["threshold"])
    return Detector(
        model=model,
        mode=meta["mode"],
        threshold=threshold,
        train_loss_mean=float(meta["train_loss_mean"]),
        norm_mean=tensors["norm.mean"],
        norm_std=tensors["norm.std"],
    )
