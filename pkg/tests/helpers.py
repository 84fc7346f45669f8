from avsal.avdata import SceneFamily
from avsal.config import TrainConfig


def tiny_config(**changes):
    """Smallest model the encoders accept: 16x16 frames, 4x4 output maps, few channels."""
    base = dict(
        frame_size=(16, 16),
        channels=(4, 4, 8, 8),
        audio_channels=(4, 4, 4),
        audio_kernels=(8, 8, 4, 4),
        audio_dim=8,
        epochs=2,
        batch_size=2,
        learning_rate=1e-3,
    )
    base.update(changes)
    return TrainConfig(**base).validate()


def tiny_family(**changes):
    base = dict(
        canvas_size=(16, 16),
        size_range=(3.0, 3.5),
        max_speed=0.05,
    )
    base.update(changes)
    return SceneFamily(**base)
