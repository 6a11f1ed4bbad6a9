"""CSV and dependency-free SVG emitters for traces and spectrograms."""

from __future__ import annotations

import numpy as np


def write_csv(path, array: np.ndarray, header: str | None = None) -> None:
    array = np.atleast_2d(np.asarray(array))
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"# {header}\n")
        for row in array:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def write_line_svg(path, ys: np.ndarray, width: int = 960, height: int = 320,
                   title: str = "") -> None:
    """Single autoscaled polyline."""
    ys = np.asarray(ys, dtype=np.float64)
    lo, hi = float(ys.min()), float(ys.max())
    span = (hi - lo) or 1.0
    margin = 10
    xs = margin + (width - 2 * margin) * np.arange(ys.size) / max(ys.size - 1, 1)
    yy = height - margin - (height - 2 * margin) * (ys - lo) / span
    points = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, yy))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n')
        if title:
            fh.write(f'<text x="{margin}" y="{margin + 4}" font-size="12">{title}</text>\n')
        fh.write(f'<polyline fill="none" stroke="#1f77b4" stroke-width="1" points="{points}"/>\n')
        fh.write("</svg>\n")


def _block_reduce(matrix: np.ndarray, max_cells: int = 240) -> np.ndarray:
    """Mean-pool each axis down to at most max_cells entries for display."""
    out = matrix
    for axis in (0, 1):
        n = out.shape[axis]
        factor = -(-n // max_cells)
        if factor > 1:
            trim = (n // factor) * factor
            out = np.take(out, range(trim), axis=axis)
            shape = list(out.shape)
            shape[axis:axis + 1] = [trim // factor, factor]
            out = out.reshape(shape).mean(axis=axis + 1)
    return out


def write_heatmap_svg(path, matrix: np.ndarray, width: int = 960, height: int = 480,
                      title: str = "", log_scale: bool = True) -> None:
    """Grayscale heatmap; rows run bottom-up (row 0 at the bottom edge)."""
    data = _block_reduce(np.asarray(matrix, dtype=np.float64))
    if log_scale:
        data = 20.0 * np.log10(np.maximum(data, 1e-12))
        data = np.maximum(data, data.max() - 80.0)
    lo, hi = float(data.min()), float(data.max())
    span = (hi - lo) or 1.0
    shade = ((data - lo) / span * 255.0).astype(int)
    rows, cols = shade.shape
    cell_w, cell_h = width / cols, height / rows
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n')
        if title:
            fh.write(f'<text x="4" y="14" font-size="12" fill="#ffffff">{title}</text>\n')
        for i in range(rows):
            y = height - (i + 1) * cell_h
            for j in range(cols):
                v = shade[i, j]
                fh.write(f'<rect x="{j * cell_w:.2f}" y="{y:.2f}" width="{cell_w + 0.5:.2f}" '
                         f'height="{cell_h + 0.5:.2f}" fill="rgb({v},{v},{v})"/>\n')
        fh.write("</svg>\n")
