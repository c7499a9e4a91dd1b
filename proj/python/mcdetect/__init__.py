"""Detection of a target by diffusing nanomachines.

Scenarios are plain dicts with the same layout as the JSON files accepted by
the `mcdetect` command-line tool.
"""

import json

from . import _core
from ._core import ConvergenceError, StructuralError, erfc, p_single, presets, sensing_radius

__version__ = _core.__version__

__all__ = [
    "ConvergenceError",
    "StructuralError",
    "compare_csv",
    "erfc",
    "evaluate",
    "mean_detection_time",
    "p_single",
    "preset_scenario",
    "presets",
    "run_figure",
    "sensing_radius",
    "simulate",
    "validate",
]


def _text(scenario):
    return scenario if isinstance(scenario, str) else json.dumps(scenario)


def validate(scenario):
    """Raise ValueError listing every violated constraint."""
    _core.validate_scenario(_text(scenario))


def evaluate(scenario, quantity, times, sensing_margin=0.0):
    """Closed-form curve: p_detect, p_detect_approx, mean_detectors, p_sense_at or p_sense_within."""
    return _core.evaluate(_text(scenario), quantity, list(times), sensing_margin)


def mean_detection_time(scenario, mobile=False):
    return _core.mean_detection_time(_text(scenario), mobile)


def simulate(scenario, trials=1000, seed=42, times=(), window=None, sensing_margin=0.0,
             mode="detect", threads=0):
    """Monte Carlo estimate; the window is chosen automatically unless given."""
    return _core.simulate(_text(scenario), trials, seed, list(times), window or 0.0,
                          sensing_margin, mode, threads)


def preset_scenario(preset_id):
    return json.loads(_core.preset_scenario(preset_id))


def run_figure(preset_id, trials=None, seed=None, threads=0):
    """Run a figure preset and return the CSV text."""
    return _core.run_figure(preset_id, trials, seed, threads)


def compare_csv(csv_text, tolerance=0.02):
    """Return (passed, report) for the analytic/mc columns of a CSV table."""
    return _core.compare_csv(csv_text, tolerance)
