"""Binary checkpoint archive; layout documented in checkpoint_format.md."""
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .config import TrainConfig, format_key_values, parse_key_values
from .errors import DatasetError

MAGIC = b"AVSALCKP"
VERSION = 1


@dataclass
class Checkpoint:
    state: dict  # parameter path -> float32 ndarray
    config: TrainConfig
    epoch: int = 0
    rng_state: bytes = b""

    def model(self):
        from .model import SaliencyNet

        net = SaliencyNet(self.config)
        net.load_state_dict({k: torch.from_numpy(v.copy()) for k, v in self.state.items()})
        return net

    def equals(self, other):
        return (
            self.epoch == other.epoch
            and self.rng_state == other.rng_state
            and format_key_values(self.config) == format_key_values(other.config)
            and self.state.keys() == other.state.keys()
            and all(np.array_equal(self.state[k], other.state[k]) for k in self.state)
        )


def from_model(model, epoch=0, rng_state=b""):
    state = {k: v.detach().cpu().numpy().astype(np.float32) for k, v in model.state_dict().items()}
    return Checkpoint(state, model.config, epoch, bytes(rng_state))


def init_params(config):
    """Fresh randomly initialized checkpoint for ``config`` (deterministic in ``config.seed``)."""
    from .model import build_model

    gen = torch.Generator().manual_seed(config.seed)
    return from_model(build_model(config), 0, gen.get_state().numpy().tobytes())


def save_checkpoint(path, ckpt):
    config_text = format_key_values(ckpt.config).encode()
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    chunks += [struct.pack("<I", len(config_text)), config_text]
    chunks += [struct.pack("<Q", ckpt.epoch), struct.pack("<I", len(ckpt.rng_state)), ckpt.rng_state]
    chunks.append(struct.pack("<I", len(ckpt.state)))
    for name, arr in ckpt.state.items():
        key = name.encode()
        arr = np.ascontiguousarray(arr, dtype="<f4")
        chunks += [struct.pack("<H", len(key)), key, struct.pack("<B", arr.ndim)]
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.tobytes())
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(b"".join(chunks))
    tmp.replace(path)
    return path


def load_checkpoint(path):
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise DatasetError(path, f"cannot read checkpoint ({exc})") from exc
    if blob[:8] != MAGIC:
        raise DatasetError(path, "not a checkpoint file")
    pos = 8

    def take(fmt):
        nonlocal pos
        vals = struct.unpack_from(fmt, blob, pos)
        pos += struct.calcsize(fmt)
        return vals

    try:
        (version,) = take("<I")
        if version != VERSION:
            raise DatasetError(path, f"unsupported checkpoint version {version}")
        (n,) = take("<I")
        config = parse_key_values(blob[pos:pos + n].decode(), TrainConfig)
        pos += n
        (epoch,) = take("<Q")
        (n,) = take("<I")
        rng_state = blob[pos:pos + n]
        pos += n
        (count,) = take("<I")
        state = {}
        for _ in range(count):
            (n,) = take("<H")
            name = blob[pos:pos + n].decode()
            pos += n
            (ndim,) = take("<B")
            shape = take(f"<{ndim}I")
            size = int(np.prod(shape, dtype=np.int64))
            state[name] = np.frombuffer(blob, dtype="<f4", count=size, offset=pos).reshape(shape).copy()
            pos += 4 * size
    except (struct.error, ValueError) as exc:
        raise DatasetError(path, f"truncated or corrupt checkpoint ({exc})") from exc
    return Checkpoint(state, config, epoch, rng_state)
