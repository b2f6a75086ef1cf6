#!/usr/bin/env python3
"""
📊 Observables Report Generator
===============================
Turns the per-sample observables CSV written by `mirrorstate eval` (and,
optionally, a training log CSV) into a standalone HTML report: spectral and
diagonal-entry scatter plots in primal and dual coordinates, negativity
histograms per class and the training loss curve.
"""

import os
import sys
import logging
import argparse
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd
import plotly.express as px
from plotly.offline import plot as plot_offline

from mirrorstate.metrics import OBSERVABLE_COLUMNS

# --- Logging Configuration ---
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

# --- Configuration ---
REPORT_OUTPUT_DIR = Path(os.getenv("REPORT_OUTPUT_DIR", "./reports"))

SCATTER_PAIRS = [
    ("eig1", "eig2", "Leading eigenvalues"),
    ("primal_re_11", "primal_re_22", "Primal diagonal entries"),
    ("dual_re_11", "dual_re_22", "Dual diagonal entries"),
]


def load_observables(paths: List[Path]) -> pd.DataFrame:
    """Reads observables CSVs; rows get a `source` column naming their file."""
    frames = []
    for path in paths:
        frame = pd.read_csv(path)
        missing = set(OBSERVABLE_COLUMNS) - set(frame.columns)
        if missing:
            raise ValueError(f"{path} is missing observable columns: {sorted(missing)}")
        frame["source"] = path.stem
        frames.append(frame)
        logger.info(f"Loaded {len(frame)} observable rows from {path}")
    return pd.concat(frames, ignore_index=True)


def summary_stats(observables: pd.DataFrame) -> Dict[str, Dict[str, float]]:
    """Per source and class: sample count, mean negativity and the share of undefined dual entries."""
    stats = {}
    for (source, label), group in observables.groupby(["source", "class_label"]):
        stats[f"{source} / {label}"] = {
            "samples": int(len(group)),
            "mean_negativity": round(float(group["negativity"].mean()), 6),
            "dual_undefined_fraction": round(float(group["dual_re_11"].isna().mean()), 6),
        }
    return stats


def build_charts(observables: pd.DataFrame, training_log: Optional[pd.DataFrame] = None) -> Dict[str, object]:
    charts = {}
    facet = "source" if observables["source"].nunique() > 1 else None
    for x, y, title in SCATTER_PAIRS:
        subset = observables.dropna(subset=[x, y])
        if subset.empty:
            continue
        charts[f"{x}_vs_{y}"] = px.scatter(
            subset, x=x, y=y, color="class_label", facet_col=facet, opacity=0.6, title=title
        )

    charts["negativity_distribution"] = px.histogram(
        observables, x="negativity", color="class_label", facet_col=facet,
        barmode="overlay", nbins=50, title="Negativity distribution"
    )

    if training_log is not None and not training_log.empty:
        charts["training_loss"] = px.line(training_log, x="iteration", y="loss", log_y=True, title="Training loss")
    return charts


def save_report_html(stats: dict, charts: dict, output_path: Path) -> Path:
    """Saves the report as an HTML file; plotly.js is loaded once from the CDN."""
    html_string = f"""
    <html>
        <head><title>Mirror Diffusion Observables - {datetime.now().date()}</title></head>
        <body>
            <h1>Mirror Diffusion Observables</h1>
            <h2>Summary</h2>
            <ul>
    """
    for key, value in stats.items():
        html_string += f"<li><strong>{key}:</strong> {value}</li>\n"
    html_string += "</ul><h2>Charts</h2>"

    for index, (title, chart_fig) in enumerate(charts.items()):
        chart_html = plot_offline(chart_fig, output_type='div', include_plotlyjs='cdn' if index == 0 else False)
        html_string += f"<h3>{title.replace('_', ' ').title()}</h3>{chart_html}"

    html_string += """
        </body>
    </html>
    """
    output_path.parent.mkdir(parents=True, exist_ok=True)
    output_path.write_text(html_string, encoding='utf-8')
    logger.info(f"HTML report saved to {output_path}")
    return output_path


def generate_report(observables_paths: List[Path], training_log_path: Optional[Path], output_path: Path) -> Path:
    observables = load_observables(observables_paths)
    training_log = pd.read_csv(training_log_path) if training_log_path else None
    return save_report_html(summary_stats(observables), build_charts(observables, training_log), output_path)


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Plot observables CSVs written by `mirrorstate eval`.")
    parser.add_argument("observables", nargs="+", type=Path, help="One or more observables CSV files")
    parser.add_argument("--training-log", type=Path, help="Training log CSV (iteration, loss, lr)")
    parser.add_argument("--output", type=Path, help="Output HTML path (default: $REPORT_OUTPUT_DIR/observables.html)")
    args = parser.parse_args()

    output_path = args.output or REPORT_OUTPUT_DIR / "observables.html"
    try:
        generate_report(args.observables, args.training_log, output_path)
    except Exception as e:
        logger.critical(f"Report generation failed: {e}")
        sys.exit(1)
