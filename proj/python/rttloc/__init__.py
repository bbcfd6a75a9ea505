"""Device-free WiFi RTT localization with per-reference-point denoising autoencoders.

Configs are plain dicts in the same layout as the CLI's JSON config files;
missing keys keep the preset defaults.
"""

import json

from . import _core
from ._core import ParseError, ValidationError, compute_rtt, distance_to_rtt, rtt_to_distance

__all__ = [
    "ParseError",
    "Registry",
    "ValidationError",
    "compute_rtt",
    "default_config",
    "distance_to_rtt",
    "run_experiment",
    "rtt_to_distance",
    "simulate",
    "train",
]

Registry = _core.Registry


def _dump(config):
    return json.dumps(config or {})


def default_config(preset="testbed1"):
    """Every knob of an experiment on a preset, with library defaults."""
    return json.loads(_core.default_config(preset))


def simulate(config=None, stream=0):
    """Labeled scans of the configured world.

    Returns a dict of numpy arrays: ref_id (n,), position (n, 2), rtt (n, K)
    in ns and detected (n, K). Stream 0 is the training stream.
    """
    return _core.simulate(_dump(config), stream)


def train(data, config=None, points=None):
    """Trains one model per reference point on a `simulate`-style dict."""
    return Registry.train(_dump(config), data["rtt"], data.get("detected"), data["ref_id"], list(points or []))


def run_experiment(config=None):
    """simulate -> train -> evaluate in process; returns the report dict."""
    return json.loads(_core.run_experiment(_dump(config)))
