"""This module contains the CSV and SVG writers of trace bundles."""

from __future__ import annotations

import csv
import xml.etree.ElementTree as ET
from pathlib import Path

from pyvhrnn.diagnostics.trace import TraceBundle

PANEL_WIDTH = 800
PANEL_HEIGHT = 300
MARGIN = 40
SERIES_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")
SWITCH_COLOR = "red"


def csv_columns(bundle: TraceBundle) -> list[str]:
    """step, kl, recon_l2, mean_logvar, x_0 … x_{D−1}, is_switch.

    mean_logvar is the decoder log-variance averaged over the output dimensions.
    """
    dim = len(bundle.observations[0])
    return ["step", "kl", "recon_l2", "mean_logvar"] + [f"x_{d}" for d in range(dim)] + ["is_switch"]


def emit_csv(bundle: TraceBundle, path: str | Path) -> None:
    """Writes one row per step, floats with 17 significant digits (exact round trip).

    Raises:
        OSError: If the file can't be written.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    switches = set(bundle.switches)
    with target.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(csv_columns(bundle))
        for t in range(bundle.length):
            values = [bundle.kl[t], bundle.recon_l2[t], bundle.mean_logvar[t], *bundle.observations[t]]
            writer.writerow([t] + [format(v, ".17g") for v in values] + [int(t in switches)])


def _series(bundle: TraceBundle) -> list[tuple[str, list[float]]]:
    series = [("kl", bundle.kl), ("recon_l2", bundle.recon_l2), ("mean_logvar", bundle.mean_logvar)]
    dim = len(bundle.observations[0])
    for d in range(dim):
        series.append((f"x_{d}", [row[d] for row in bundle.observations]))
    return series


def _panel(root: ET.Element, index: int, name: str, values: list[float], bundle: TraceBundle) -> None:
    top = index * PANEL_HEIGHT
    group = ET.SubElement(root, "g", {"id": name, "transform": f"translate(0,{top})"})
    ET.SubElement(group, "text", {"x": str(MARGIN), "y": str(MARGIN // 2)}).text = name
    low, high = min(values), max(values)
    span = high - low or 1.0
    inner_w = PANEL_WIDTH - 2 * MARGIN
    inner_h = PANEL_HEIGHT - 2 * MARGIN
    steps = max(len(values) - 1, 1)

    def x_of(t: float) -> float:
        return MARGIN + inner_w * t / steps

    def y_of(v: float) -> float:
        return MARGIN + inner_h * (1.0 - (v - low) / span)

    ET.SubElement(
        group,
        "rect",
        {"x": str(MARGIN), "y": str(MARGIN), "width": str(inner_w), "height": str(inner_h),
         "fill": "none", "stroke": "#cccccc"},
    )
    for switch in bundle.switches:
        x = f"{x_of(switch):.2f}"
        ET.SubElement(
            group,
            "line",
            {"x1": x, "x2": x, "y1": str(MARGIN), "y2": str(MARGIN + inner_h),
             "stroke": SWITCH_COLOR, "class": "switch"},
        )
    points = " ".join(f"{x_of(t):.2f},{y_of(v):.2f}" for t, v in enumerate(values))
    ET.SubElement(
        group,
        "polyline",
        {"points": points, "fill": "none", "stroke": SERIES_COLORS[index % len(SERIES_COLORS)],
         "class": "series"},
    )


def emit_svg(bundle: TraceBundle, path: str | Path) -> None:
    """Writes one 800 × 300 panel per series stacked vertically, each with a single polyline and
    the switch positions drawn as red vertical lines.

    Raises:
        OSError: If the file can't be written.
    """
    series = _series(bundle)
    height = PANEL_HEIGHT * len(series)
    root = ET.Element(
        "svg",
        {"xmlns": "http://www.w3.org/2000/svg", "width": str(PANEL_WIDTH), "height": str(height),
         "viewBox": f"0 0 {PANEL_WIDTH} {height}"},
    )
    for index, (name, values) in enumerate(series):
        _panel(root, index, name, values, bundle)
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    ET.ElementTree(root).write(target, encoding="utf-8", xml_declaration=True)
