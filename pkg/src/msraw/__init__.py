"""Multi-sensor raw image synthesis, noise modelling and evaluation."""

from .color import ColorCorrectionMatrix, WhiteBalanceGains
from .mosaic import RawImage, RgbImage, demosaic_bilinear, mosaic
from .noise import NoiseParams, SensorProfile, load_profile, noise_params
from .synthesis import MetaRecord, SampledParams, degrade, process, unprocess

__version__ = "0.1.0"
