"""Fall detection from wearable accelerometer streams.

Thin Python layer over the C++ core: SisFall parsing, windowing, the C8/C9
threshold baselines, LSTM checkpoint inference and the streaming detector.
The full pipeline (ingest, train, baseline, sweep, replay, serve) is reachable
through ``run_cli``.
"""

from ._core import (
    FalldetError,
    Model,
    OnlineDetector,
    c8,
    c9,
    calibrate_thresholds,
    counts_to_g,
    label_window,
    load_recording,
    loss_weights,
    run_cli,
    synthetic_windows,
    window_count,
    window_seconds,
    window_starts,
)

__all__ = [
    "FalldetError",
    "Model",
    "OnlineDetector",
    "c8",
    "c9",
    "calibrate_thresholds",
    "counts_to_g",
    "label_window",
    "load_recording",
    "loss_weights",
    "run_cli",
    "synthetic_windows",
    "window_count",
    "window_seconds",
    "window_starts",
]
