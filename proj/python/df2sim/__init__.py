"""Python face of the DeepFire2 mapping compiler and pipeline simulator.

Thin wrappers over the native module: every call takes a config JSON string
(or a dict, which is serialized for you) and returns parsed JSON.
"""

import json

from ._core import (  # noqa: F401
    MappingError,
    ParseError,
    SimError,
    ValidationError,
    __version__,
)
from . import _core


def _text(config):
    return json.dumps(config) if isinstance(config, dict) else config


def check(config):
    """Validate a network config. Returns {valid, diagnostics, layers, ...}."""
    return json.loads(_core.check(_text(config)))


def map(config, device="", clock_mhz=0.0, fps_hint=0.0, allow_splits=True):
    """Map the network onto the device. Returns the plan report."""
    return json.loads(
        _core.map(_text(config), device, clock_mhz, fps_hint, allow_splits)
    )


def quantize(config, seed, device="", clock_mhz=0.0):
    """Quantize a seeded random float model. Returns DF2P bytes."""
    return _core.quantize(_text(config), seed, device, clock_mhz)


def simulate(config, seed, images=None, limit=0, device="", clock_mhz=0.0):
    """Simulate the mapped pipeline. Returns the sim report."""
    return json.loads(
        _core.simulate(_text(config), seed, images, limit, device, clock_mhz)
    )


def reference(config, seed, image=None, device="", clock_mhz=0.0):
    """Dense reference inference. Returns {predicted_class, final_potentials}."""
    return json.loads(_core.reference(_text(config), seed, image, device, clock_mhz))


def analytic(config, device="", clock_mhz=0.0):
    """Static throughput report from the mapping plan alone."""
    return json.loads(_core.analytic(_text(config), device, clock_mhz))
