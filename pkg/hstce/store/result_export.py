"""This module contains functions for writing experiment results to an output directory."""

import json
import logging
import os
from collections.abc import Sequence
from typing import Any

import numpy as np
import pandas as pd

from hstce.config import RunConfig
from hstce.pilots import save_pattern
from hstce.store.plots import plot_results
from hstce.store.result_store import COLUMNS, ResultStore

logger = logging.getLogger(__name__)

RESULTS_FILE = "results.csv"
PATTERN_FILE = "pattern.txt"
RUN_FILE = "run.json"
TRACE_FILE = "design_trace.csv"
PLOT_FILE = "results.svg"


def export(
    path: str,
    store: ResultStore,
    config: RunConfig,
    experiment: str,
    pattern: np.ndarray | None = None,
    trace: Sequence[tuple[int, float, bool]] | None = None,
    svg: bool = False,
) -> list[str]:
    """Write the results of one run into the directory ``path``.

    Args:
        path: The output directory, created if missing.
        store: The result rows.
        config: The resolved configuration, echoed as ``run.json``.
        experiment: The experiment kind, recorded in ``run.json``.
        pattern: The pilot pattern used by the run, written as ``pattern.txt``.
        trace: The acceptance trace of the pattern design, written as ``design_trace.csv``.
        svg: If True, also draw ``results.svg``.

    Returns:
        The paths of the written files.
    """
    os.makedirs(path, exist_ok=True)
    written = [_export_csv(os.path.join(path, RESULTS_FILE), store)]
    written.append(_export_json(os.path.join(path, RUN_FILE), config, experiment))
    if pattern is not None:
        pattern_path = os.path.join(path, PATTERN_FILE)
        save_pattern(pattern_path, pattern)
        written.append(pattern_path)
    if trace is not None:
        written.append(_export_trace(os.path.join(path, TRACE_FILE), trace))
    if svg:
        svg_path = os.path.join(path, PLOT_FILE)
        plot_results(store.to_frame(), svg_path)
        written.append(svg_path)

    for file in written:
        logger.info("Wrote %s", file)
    return written


def results_frame(store: ResultStore) -> pd.DataFrame:
    """The result rows with integer columns kept integral and missing values empty."""
    frame = store.to_frame()
    return frame.astype({"antenna_id": "Int64", "trials": "int64", "seed": "int64"})


def _export_csv(path: str, store: ResultStore) -> str:
    """Export the result rows to a CSV file with the fixed header.

    Missing values (an SNR for a position-only metric, say) are written as empty fields.
    """
    if not path.endswith(".csv"):
        raise ValueError("Export path must be a CSV file.")
    results_frame(store).to_csv(path, index=False, columns=COLUMNS, na_rep="", lineterminator="\n")
    return path


def _export_json(path: str, config: RunConfig, experiment: str) -> str:
    if not path.endswith(".json"):
        raise ValueError("Export path must be a JSON file.")
    output: dict[str, Any] = {"experiment": experiment, **config.to_dict()}
    with open(path, "w") as f:
        json.dump(output, f, indent=4)
    return path


def _export_trace(path: str, trace: Sequence[tuple[int, float, bool]]) -> str:
    frame = pd.DataFrame(list(trace), columns=["m", "mu", "accepted"])
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def read_results(path: str) -> pd.DataFrame:
    """Read a ``results.csv`` written by ``export``.

    Raises:
        ValueError: If the header differs from the result columns.
    """
    frame = pd.read_csv(path, keep_default_na=True)
    if list(frame.columns) != COLUMNS:
        raise ValueError(f"Unexpected results header: {','.join(frame.columns)}.")
    return frame
