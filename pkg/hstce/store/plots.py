"""Static SVG line charts of a results table."""

import logging

import numpy as np
import pandas as pd
from matplotlib.figure import Figure

logger = logging.getLogger(__name__)

# metrics drawn on a logarithmic y axis
LOG_METRICS = ("nmse", "ber", "ici_ratio")


def _is_log_metric(name: str) -> bool:
    return name.startswith(LOG_METRICS)


def _series_label(row: pd.Series) -> str:
    label = f"{row['estimator']}/{row['pilot_design']}"
    if pd.notna(row["antenna_id"]):
        label += f" #{int(row['antenna_id'])}"
    return label


def plot_results(frame: pd.DataFrame, path: str) -> None:
    """Draw one panel per metric.

    The x axis is the SNR when the metric has one, the position otherwise; metrics with neither are
    drawn as bars per series. Error-like metrics use a log scale, on which non-positive values are
    left out.
    """
    metrics = list(dict.fromkeys(frame["metric_name"]))
    fig = Figure(figsize=(7.0, 3.2 * max(len(metrics), 1)))
    if not metrics:
        fig.savefig(path, format="svg", metadata={"Date": None})
        return

    axes = fig.subplots(len(metrics), 1, squeeze=False)[:, 0]
    for ax, metric in zip(axes, metrics):
        subset = frame[frame["metric_name"] == metric]
        labels = subset.apply(_series_label, axis=1)
        log_scale = _is_log_metric(metric)
        if subset["snr_db"].notna().any():
            x_column, x_label = "snr_db", "SNR [dB]"
        elif subset["position_m"].notna().any():
            x_column, x_label = "position_m", "position [m]"
        else:
            x_column, x_label = None, ""

        plotted_positive = False
        if x_column is None:
            values = subset["metric_value"].to_numpy(dtype=float)
            ax.bar(list(labels), values)
            plotted_positive = bool(np.any(values > 0))
        else:
            for label in dict.fromkeys(labels):
                series = subset[labels == label].sort_values(x_column)
                x = series[x_column].to_numpy(dtype=float)
                y = series["metric_value"].to_numpy(dtype=float)
                if log_scale:
                    keep = y > 0
                    x, y = x[keep], y[keep]
                if y.size:
                    ax.plot(x, y, marker="o", label=label)
                    plotted_positive = plotted_positive or bool(np.any(y > 0))
            if ax.get_legend_handles_labels()[0]:
                ax.legend(fontsize="small")

        if log_scale and plotted_positive:
            ax.set_yscale("log")
        ax.set_xlabel(x_label)
        ax.set_ylabel(metric)
        ax.grid(True, alpha=0.3, linestyle="--")

    fig.subplots_adjust(hspace=0.6, left=0.12, right=0.97, top=0.97, bottom=0.08)
    fig.savefig(path, format="svg", metadata={"Date": None})
    logger.debug("Plotted %d metric(s) to %s", len(metrics), path)
