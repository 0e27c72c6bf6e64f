"""Binary checkpoint format.

Layout: header line ``GCOPEv1``, one JSON manifest line (hyperparameters,
config fingerprint, tensor directory with byte offsets), then the raw
little-endian float32 payload in manifest order. Byte-exact for fixed
seeds: the manifest is serialized with sorted keys and no whitespace.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import errors
from .nn import MlpDecoder, make_encoder

MAGIC = b"GCOPEv1\n"


@dataclass
class Checkpoint:
    hyper: dict
    fingerprint: str
    tensors: dict = field(default_factory=dict)   # name -> float32 ndarray

    def encoder(self, seed: int = 0):
        h = self.hyper
        enc = make_encoder(h["enc_kind"], h["d_p"], hidden=h["hidden"],
                           num_layers=h["num_layers"],
                           activation=h.get("activation", "relu"),
                           eps=h.get("fagcn_eps", 0.3), seed=seed)
        for p in enc.params():
            if p.name not in self.tensors:
                raise errors.ShapeMismatch(f"checkpoint missing tensor {p.name!r}")
            stored = self.tensors[p.name]
            if stored.shape != p.data.shape:
                raise errors.DimensionMismatch(
                    f"tensor {p.name!r}: checkpoint {stored.shape} vs model {p.data.shape}")
            p.data = stored.copy()
        return enc

    def decoder(self, seed: int = 0) -> MlpDecoder:
        h = self.hyper
        dec = MlpDecoder(h["hidden"], h["hidden"], h["d_p"], seed=seed)
        for p in dec.params():
            if p.name in self.tensors:
                if self.tensors[p.name].shape != p.data.shape:
                    raise errors.DimensionMismatch(f"tensor {p.name!r} shape mismatch")
                p.data = self.tensors[p.name].copy()
        return dec


def config_fingerprint(resolved: dict) -> str:
    text = "\n".join(f"{k}={resolved[k]}" for k in sorted(resolved))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def save_checkpoint(path: str, hyper: dict, fingerprint: str,
                    named_tensors: list[tuple[str, np.ndarray]]) -> None:
    directory = []
    payload = bytearray()
    for name, arr in named_tensors:
        arr = np.ascontiguousarray(arr, dtype="<f4")
        directory.append({"name": name, "shape": list(arr.shape),
                          "offset": len(payload)})
        payload += arr.tobytes()
    manifest = json.dumps({"hyper": hyper, "fingerprint": fingerprint,
                           "tensors": directory},
                          sort_keys=True, separators=(",", ":"))
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(manifest.encode("utf-8") + b"\n")
        f.write(bytes(payload))


def load_checkpoint(path: str, expect_fingerprint: str = None) -> Checkpoint:
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise errors.IoError(f"{path}: not a GCOPEv1 checkpoint")
        manifest = json.loads(f.readline().decode("utf-8"))
        payload = f.read()
    prev_end = 0
    tensors = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        if start < prev_end:
            raise errors.IoError(f"{path}: overlapping tensor payloads")
        end = start + 4 * count
        if end > len(payload):
            raise errors.IoError(f"{path}: truncated payload")
        tensors[entry["name"]] = np.frombuffer(
            payload[start:end], dtype="<f4").reshape(shape).copy()
        prev_end = end
    ckpt = Checkpoint(hyper=manifest["hyper"], fingerprint=manifest["fingerprint"],
                      tensors=tensors)
    if expect_fingerprint is not None and expect_fingerprint != ckpt.fingerprint:
        warnings.warn(f"checkpoint fingerprint {ckpt.fingerprint} does not match "
                      f"current config fingerprint {expect_fingerprint}")
    return ckpt
