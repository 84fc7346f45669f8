"""Synthetic audio-visual clips, audio windowing and fixation densities.

A clip is 16 RGB frames of colored shapes on a dark background, a waveform in
which every sounding object contributes one sine tone, and a ground-truth
fixation density (a Gaussian blob on the attended target).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DatasetError

CLIP_FRAMES = 16
FIXATION_MODES = ("on_sounding", "on_center", "mixed")
SHAPES = ("square", "disc")

# (name, rgb, tone in Hz); the tone identifies which object is sounding
PALETTE = (
    ("red", (0.95, 0.15, 0.1), 330.0),
    ("blue", (0.1, 0.25, 0.95), 1250.0),
    ("green", (0.15, 0.9, 0.2), 2400.0),
)


@dataclass(frozen=True)
class ObjectSpec:
    """One shape. ``position`` is its center (row, col) at frame 0, in canvas pixels."""

    shape: str = "square"
    size: float = 20.0
    position: tuple[float, float] = (32.0, 32.0)
    velocity: tuple[float, float] = (0.0, 0.0)  # pixels per frame
    color: tuple[float, float, float] = (1.0, 1.0, 1.0)
    emits_sound: bool = False
    tone_hz: float = 440.0

    def center(self, t):
        return (self.position[0] + self.velocity[0] * t, self.position[1] + self.velocity[1] * t)


@dataclass(frozen=True)
class SceneSpec:
    canvas_size: tuple[int, int] = (64, 64)
    n_frames: int = CLIP_FRAMES
    objects: tuple[ObjectSpec, ...] = ()
    audio_sample_rate: int = 8000
    frame_rate: int = 8
    fixation_mode: str = "on_sounding"
    noise_level: float = 0.0
    map_size: tuple[int, int] | None = None  # defaults to canvas / 4

    @property
    def fixation_shape(self):
        if self.map_size is not None:
            return tuple(self.map_size)
        return (self.canvas_size[0] // 4, self.canvas_size[1] // 4)

    @property
    def samples_per_frame(self):
        return self.audio_sample_rate // self.frame_rate

    def validate(self):
        h, w = self.canvas_size
        if h < 1 or w < 1:
            raise ConfigError("canvas_size", f"must be positive, got {self.canvas_size}")
        if self.n_frames < 2:
            raise ConfigError("n_frames", f"must be >= 2, got {self.n_frames}")
        if self.audio_sample_rate <= 0:
            raise ConfigError("audio_sample_rate", "must be positive")
        if self.frame_rate <= 0 or self.audio_sample_rate % self.frame_rate:
            raise ConfigError("frame_rate", "must be positive and divide audio_sample_rate")
        if self.fixation_mode not in FIXATION_MODES:
            raise ConfigError("fixation_mode", f"unknown mode {self.fixation_mode!r}")
        if not 0.0 <= self.noise_level <= 1.0:
            raise ConfigError("noise_level", f"must lie in [0, 1], got {self.noise_level}")
        hs, ws = self.fixation_shape
        if hs < 1 or ws < 1:
            raise ConfigError("map_size", f"must be positive, got {(hs, ws)}")
        for i, obj in enumerate(self.objects):
            if obj.shape not in SHAPES:
                raise ConfigError(f"objects[{i}].shape", f"unknown shape {obj.shape!r}")
            if obj.size <= 0:
                raise ConfigError(f"objects[{i}].size", "must be positive")
            if obj.emits_sound and not 0 < obj.tone_hz < self.audio_sample_rate / 2:
                raise ConfigError(f"objects[{i}].tone_hz", "must lie below the Nyquist frequency")
        if self.fixation_mode == "on_sounding" and not any(o.emits_sound for o in self.objects):
            raise ConfigError("objects", "fixation_mode=on_sounding needs a sounding object")


@dataclass
class AVClip:
    frames: np.ndarray  # [T, 3, H, W] in [0, 1]
    audio: np.ndarray  # [L] in [-1, 1]
    fixation_map: np.ndarray  # [Hs, Ws], sums to 1
    fixation_points: list[tuple[int, int]]
    # inclusive (r0, c0, r1, c1) boxes of sounding objects on the fixation grid
    sounding_boxes: list[tuple[int, int, int, int]] = field(default_factory=list)
    meta: dict[str, str] = field(default_factory=dict)


def to_map_coords(point, canvas_size, map_size):
    """Map a continuous canvas (row, col) onto the fixation grid (pixel centers at integers)."""
    return tuple((p + 0.5) * m / c - 0.5 for p, c, m in zip(point, canvas_size, map_size))


def gaussian_blob(center, shape, sigma):
    """Unnormalized isotropic Gaussian sampled at integer pixel centers."""
    rows = np.arange(shape[0], dtype=np.float64)[:, None]
    cols = np.arange(shape[1], dtype=np.float64)[None, :]
    return np.exp(-((rows - center[0]) ** 2 + (cols - center[1]) ** 2) / (2.0 * sigma**2))


def _draw(frame, obj, center):
    h, w = frame.shape[1:]
    rows = np.arange(h, dtype=np.float64)[:, None]
    cols = np.arange(w, dtype=np.float64)[None, :]
    half = obj.size / 2.0
    if obj.shape == "square":
        mask = (np.abs(rows - center[0]) < half) & (np.abs(cols - center[1]) < half)
    else:
        mask = (rows - center[0]) ** 2 + (cols - center[1]) ** 2 <= half**2
    for ch in range(3):
        frame[ch][mask] = obj.color[ch]


def _box_on_grid(obj, center, canvas_size, map_size):
    half = obj.size / 2.0
    idx = []
    for axis in range(2):
        centers = (np.arange(map_size[axis]) + 0.5) * canvas_size[axis] / map_size[axis] - 0.5
        inside = np.nonzero(np.abs(centers - center[axis]) < half)[0]
        if inside.size == 0:
            near = int(np.clip(round(to_map_coords(center, canvas_size, map_size)[axis]), 0, map_size[axis] - 1))
            idx.append((near, near))
        else:
            idx.append((int(inside[0]), int(inside[-1])))
    return (idx[0][0], idx[1][0], idx[0][1], idx[1][1])


def make_scene(spec, rng_seed):
    """Render ``spec`` into an :class:`AVClip`. Identical (spec, seed) gives identical arrays."""
    spec.validate()
    if rng_seed < 0:
        raise ConfigError("rng_seed", "must be >= 0")
    rng = np.random.default_rng(rng_seed)
    h, w = spec.canvas_size
    hs, ws = spec.fixation_shape
    t_mid = spec.n_frames // 2

    frames = np.full((spec.n_frames, 3, h, w), 0.05)
    for t in range(spec.n_frames):
        for obj in spec.objects:
            _draw(frames[t], obj, obj.center(t))
    if spec.noise_level > 0:
        frames += spec.noise_level * rng.standard_normal(frames.shape)
    frames = np.clip(frames, 0.0, 1.0)

    n_samples = spec.n_frames * spec.samples_per_frame
    time = np.arange(n_samples) / spec.audio_sample_rate
    sounding = [o for o in spec.objects if o.emits_sound]
    audio = np.zeros(n_samples)
    for obj in sounding:
        phase = rng.uniform(0.0, 2.0 * math.pi)
        audio += np.sin(2.0 * math.pi * obj.tone_hz * time + phase)
    if sounding:
        audio *= 0.5 / len(sounding)
    if spec.noise_level > 0:
        audio += 0.5 * spec.noise_level * rng.standard_normal(n_samples)
    audio = np.clip(audio, -1.0, 1.0)

    targets = []
    if spec.fixation_mode in ("on_sounding", "mixed"):
        targets += [to_map_coords(o.center(t_mid), spec.canvas_size, (hs, ws)) for o in sounding]
    if spec.fixation_mode in ("on_center", "mixed") or not targets:
        targets.append(((hs - 1) / 2.0, (ws - 1) / 2.0))
    sigma = 0.05 * min(hs, ws)
    density = sum(gaussian_blob(c, (hs, ws), sigma) for c in targets)
    density /= density.sum()
    points = [(int(np.clip(round(r), 0, hs - 1)), int(np.clip(round(c), 0, ws - 1))) for r, c in targets]
    boxes = [_box_on_grid(o, o.center(t_mid), spec.canvas_size, (hs, ws)) for o in sounding]

    return AVClip(
        frames=frames.astype(np.float32),
        audio=audio.astype(np.float32),
        fixation_map=density,
        fixation_points=points,
        sounding_boxes=boxes,
        meta=scene_meta(spec, rng_seed),
    )


@dataclass(frozen=True)
class SceneFamily:
    """Distribution over scenes used by ``gen-data``; each clip draws one SceneSpec."""

    canvas_size: tuple[int, int] = (64, 64)
    n_frames: int = CLIP_FRAMES
    n_objects: int = 2
    n_sounding: int = 1
    size_range: tuple[float, float] = (18.0, 22.0)
    max_speed: float = 0.25
    palette_size: int = 2
    audio_sample_rate: int = 8000
    frame_rate: int = 8
    fixation_mode: str = "on_sounding"
    noise_level: float = 0.05
    map_size: tuple[int, int] | None = None


def _separated(objects, span):
    """True if no two objects come within 2 px of touching at the start, middle or end of the clip."""
    for i, a in enumerate(objects):
        for b in objects[:i]:
            for t in (0, span // 2, span):
                gap = max(abs(p - q) for p, q in zip(a.center(t), b.center(t)))
                if gap <= (a.size + b.size) / 2 + 2:
                    return False
    return True


def random_scene(family, rng):
    """Draw non-overlapping objects of distinct palette colors; the first ``n_sounding`` emit their tone."""
    if family.n_objects > family.palette_size or family.palette_size > len(PALETTE):
        raise ConfigError("n_objects", "needs n_objects <= palette_size <= len(PALETTE)")
    if family.n_sounding > family.n_objects:
        raise ConfigError("n_sounding", "cannot exceed n_objects")
    h, w = family.canvas_size
    colors = rng.permutation(family.palette_size)[: family.n_objects]
    span = family.n_frames - 1
    for _ in range(1000):
        objects = []
        for k, ci in enumerate(colors):
            _, rgb, tone = PALETTE[ci]
            size = rng.uniform(*family.size_range)
            vel = tuple(rng.uniform(-family.max_speed, family.max_speed, size=2))
            margin = size / 2 + 1 + family.max_speed * span
            if 2 * margin >= min(h, w):
                raise ConfigError("size_range", "objects do not fit on the canvas")
            start = (rng.uniform(margin, h - margin), rng.uniform(margin, w - margin))
            shape = SHAPES[int(rng.integers(len(SHAPES)))]
            objects.append(ObjectSpec(shape, float(size), start, vel, rgb, k < family.n_sounding, tone))
        if _separated(objects, span):
            break
    else:
        raise ConfigError("n_objects", "could not place objects without overlap")
    order = rng.permutation(len(objects))
    return SceneSpec(
        canvas_size=family.canvas_size,
        n_frames=family.n_frames,
        objects=tuple(objects[i] for i in order),
        audio_sample_rate=family.audio_sample_rate,
        frame_rate=family.frame_rate,
        fixation_mode=family.fixation_mode,
        noise_level=family.noise_level,
        map_size=family.map_size,
    )


def generate_clips(family, n, seed):
    """``n`` clips; clip i is fully determined by (family, seed, i)."""
    clips = []
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        spec = random_scene(family, rng)
        clips.append(make_scene(spec, int(rng.integers(2**31))))
    return clips


def hann(window_len):
    i = np.arange(window_len)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * i / (window_len - 1)))


def window_audio(waveform, center_index, window_len):
    """Hanning-weighted crop of ``waveform`` centered at ``center_index``; zero outside the signal."""
    if window_len < 2:
        raise ValueError(f"window_len must be >= 2, got {window_len}")
    waveform = np.asarray(waveform)
    start = center_index - window_len // 2
    idx = np.arange(start, start + window_len)
    valid = (idx >= 0) & (idx < waveform.shape[0])
    crop = np.zeros(window_len, dtype=np.result_type(waveform.dtype, np.float64))
    crop[valid] = waveform[idx[valid]]
    return crop * hann(window_len)


def clip_audio_window(clip_audio, window_len=None):
    """Window aligned with the clip's middle frame (the clip's temporal center)."""
    window_len = window_len or clip_audio.shape[0]
    return window_audio(clip_audio, clip_audio.shape[0] // 2, window_len)


def fixations_to_density(points, shape, blur_sigma):
    """Sum of Gaussians at each fixation, truncated to the grid and normalized to 1."""
    if len(points) == 0:
        raise ValueError("fixations_to_density needs at least one point")
    if blur_sigma <= 0:
        raise ValueError("blur_sigma must be positive")
    density = np.zeros(shape)
    for p in points:
        density += gaussian_blob(p, shape, blur_sigma)
    return density / density.sum()


# -- on-disk layout ---------------------------------------------------------


def write_array(path, array):
    array = np.ascontiguousarray(array, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write((" ".join(str(d) for d in array.shape) + "\n").encode("ascii"))
        fh.write(array.tobytes())


def read_array(path):
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            header = fh.readline().decode("ascii").split()
            shape = tuple(int(d) for d in header)
            data = np.frombuffer(fh.read(), dtype="<f4")
    except (OSError, ValueError, UnicodeDecodeError) as exc:
        raise DatasetError(path, f"unreadable array file ({exc})") from exc
    if not shape or data.size != math.prod(shape):
        raise DatasetError(path, f"header {shape} does not match {data.size} values")
    return data.reshape(shape).astype(np.float32)


def scene_meta(spec, seed):
    meta = {
        "seed": str(seed),
        "canvas_size": f"{spec.canvas_size[0]},{spec.canvas_size[1]}",
        "n_frames": str(spec.n_frames),
        "audio_sample_rate": str(spec.audio_sample_rate),
        "frame_rate": str(spec.frame_rate),
        "fixation_mode": spec.fixation_mode,
        "noise_level": repr(spec.noise_level),
        "map_size": "{},{}".format(*spec.fixation_shape),
    }
    for i, o in enumerate(spec.objects):
        meta[f"object{i}"] = ",".join(
            str(v) for v in (o.shape, o.size, *o.position, *o.velocity, *o.color, int(o.emits_sound), o.tone_hz)
        )
    return meta


def _fmt_tuples(items):
    return ";".join(",".join(str(v) for v in it) for it in items)


def _parse_tuples(text):
    return [tuple(int(v) for v in part.split(",")) for part in text.split(";") if part]


def write_clip(directory, clip):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_array(directory / "frames.bin", clip.frames)
    write_array(directory / "audio.bin", clip.audio)
    write_array(directory / "fixmap.bin", clip.fixation_map)
    meta = dict(clip.meta)
    meta["fixation_points"] = _fmt_tuples(clip.fixation_points)
    meta["sounding_boxes"] = _fmt_tuples(clip.sounding_boxes)
    (directory / "meta.txt").write_text("".join(f"{k}={v}\n" for k, v in meta.items()))


def read_clip(directory):
    directory = Path(directory)
    if not directory.is_dir():
        raise DatasetError(directory, "clip directory missing")
    try:
        lines = (directory / "meta.txt").read_text().splitlines()
    except OSError as exc:
        raise DatasetError(directory / "meta.txt", str(exc)) from exc
    meta = dict(line.split("=", 1) for line in lines if "=" in line)
    frames = read_array(directory / "frames.bin")
    if frames.ndim != 4 or frames.shape[1] != 3:
        raise DatasetError(directory / "frames.bin", f"expected [T, 3, H, W], got {frames.shape}")
    fixmap = read_array(directory / "fixmap.bin").astype(np.float64)
    fixmap /= fixmap.sum()
    try:
        points = _parse_tuples(meta.get("fixation_points", ""))
        boxes = _parse_tuples(meta.get("sounding_boxes", ""))
    except ValueError as exc:
        raise DatasetError(directory / "meta.txt", f"bad point list ({exc})") from exc
    return AVClip(frames, read_array(directory / "audio.bin"), fixmap, points, boxes, meta)


def write_dataset(out_dir, clips, names=None):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = names or [f"clip_{i:04d}" for i in range(len(clips))]
    for name, clip in zip(names, clips):
        write_clip(out_dir / name, clip)
    (out_dir / "manifest.txt").write_text("".join(f"{n}\n" for n in names))
    return out_dir


def load_dataset(path):
    """Return ``[(clip_id, AVClip), ...]`` in manifest order."""
    path = Path(path)
    manifest = path / "manifest.txt"
    if not manifest.is_file():
        raise DatasetError(manifest, "manifest not found")
    names = [line.strip() for line in manifest.read_text().splitlines() if line.strip()]
    if not names:
        raise DatasetError(manifest, "manifest lists no clips")
    return [(name, read_clip(path / name)) for name in names]

