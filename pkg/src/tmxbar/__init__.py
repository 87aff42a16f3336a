"""Behavioral simulator of a memristive crossbar accelerator for
coalesced Tsetlin machines: training, device-level mapping with
program-and-verify tuning, analog inference, and energy/area/throughput
accounting, all checked against a pure-logic golden model."""

__version__ = "0.1.0"

from .device import DeviceConfig, PulseSpec, sample_population
from .logic import Model, infer, predict
from .model_io import load_model, save_model
from .train import TrainConfig, fit

__all__ = [
    "DeviceConfig",
    "PulseSpec",
    "sample_population",
    "Model",
    "infer",
    "predict",
    "load_model",
    "save_model",
    "TrainConfig",
    "fit",
    "__version__",
]
