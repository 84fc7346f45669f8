"""Flat ``key=value`` configuration files for training and scene generation."""
import dataclasses
import types
import typing
from dataclasses import dataclass, fields

from .avdata import FIXATION_MODES, SceneFamily
from .errors import ConfigError

VARIANTS = ("full", "visual_only", "av_inner_product", "concat_fusion", "no_sa", "no_ta")


@dataclass
class TrainConfig:
    dataset_path: str = ""
    test_path: str = ""
    epochs: int = 50
    batch_size: int = 8
    learning_rate: float = 1e-4
    eps: float = 1e-7
    w1: float = 1.0
    w2: float = 1.0
    w3: float = 1.0
    detach_audio_target: bool = True  # stop the location term's gradient into S_A
    variant: str = "full"
    seed: int = 0
    deterministic: bool = True
    frame_size: tuple[int, int] = (64, 64)
    out_size: tuple[int, ...] = ()  # empty -> frame_size / 4
    channels: tuple[int, ...] = (16, 32, 64, 128)
    audio_channels: tuple[int, ...] = (16, 32, 64)
    audio_kernels: tuple[int, ...] = (32, 16, 8, 8)
    audio_dim: int = 64
    sample_rate: int = 8000
    frame_rate: int = 8
    n_frames: int = 16

    @property
    def output_shape(self):
        if self.out_size:
            return tuple(self.out_size)
        return (self.frame_size[0] // 4, self.frame_size[1] // 4)

    @property
    def audio_window(self):
        return self.n_frames * self.sample_rate // self.frame_rate

    @property
    def weights(self):
        return (self.w1, self.w2, self.w3)

    def validate(self):
        if self.epochs < 1:
            raise ConfigError("epochs", "must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size", "must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate", "must be > 0")
        if self.variant not in VARIANTS:
            raise ConfigError("variant", f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if len(self.channels) != 4:
            raise ConfigError("channels", "needs four entries")
        if len(self.audio_kernels) != len(self.audio_channels) + 1:
            raise ConfigError("audio_kernels", "needs one kernel per audio layer (len(audio_channels) + 1)")
        if len(self.frame_size) != 2 or self.frame_size[0] % 16 or self.frame_size[1] % 16:
            raise ConfigError("frame_size", "must be two sizes divisible by 16")
        if self.out_size and len(self.out_size) != 2:
            raise ConfigError("out_size", "must be empty or two sizes")
        if self.sample_rate % self.frame_rate:
            raise ConfigError("frame_rate", "must divide sample_rate")
        return self


def _convert(name, kind, text):
    origin = typing.get_origin(kind)
    if origin in (typing.Union, types.UnionType):
        if text.strip().lower() in ("", "none"):
            return None
        inner = next(a for a in typing.get_args(kind) if a is not type(None))
        return _convert(name, inner, text)
    try:
        if origin is tuple:
            item = typing.get_args(kind)[0]
            parts = [p for p in text.replace("x", ",").split(",") if p.strip()]
            return tuple(item(p.strip()) for p in parts)
        if kind is bool:
            low = text.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        return kind(text.strip())
    except ValueError as exc:
        raise ConfigError(name, f"cannot parse {text!r} as {kind}") from exc


def parse_key_values(text, cls):
    """Build a ``cls`` dataclass from ``key=value`` lines; unknown keys are errors."""
    hints = typing.get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(key, "unknown configuration key")
        values[key] = _convert(key, hints[key], value)
    return cls(**values)


def format_key_values(obj):
    lines = []
    for f in fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        elif v is None:
            v = "none"
        lines.append(f"{f.name}={v}\n")
    return "".join(lines)


def _read_text(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read file ({exc.strerror})") from exc


def load_config(path):
    return parse_key_values(_read_text(path), TrainConfig).validate()


def load_scene_family(path):
    family = parse_key_values(_read_text(path), SceneFamily)
    if family.fixation_mode not in FIXATION_MODES:
        raise ConfigError("fixation_mode", f"unknown mode {family.fixation_mode!r}")
    return family


def replace(cfg, **changes):
    return dataclasses.replace(cfg, **changes).validate()
