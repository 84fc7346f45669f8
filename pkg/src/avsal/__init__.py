"""Audio-visual saliency prediction on synthetic scenes."""
from .config import VARIANTS, TrainConfig, load_config
from .model import SaliencyNet, build_model

__all__ = ["VARIANTS", "TrainConfig", "load_config", "SaliencyNet", "build_model"]
__version__ = "0.1.0"
