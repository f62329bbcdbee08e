"""CSV tables and a self-contained SVG learning curve for every experiment."""

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np
import pandas as pd

from .stats import AggregateCurve


WIDTH = 640
HEIGHT = 400
MARGIN = 56
TICKS = 5


def run_csv_path(directory: Path, index: int) -> Path:
    return Path(directory) / f"run_{index}.csv"


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    """Fixed column order, full float precision, ``\\n`` line endings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def read_frame(path: Path) -> pd.DataFrame:
    return pd.read_csv(path)


def _scale(values: np.ndarray, log: bool) -> np.ndarray:
    return np.log10(values) if log else values


def _fmt(value: float, log: bool) -> str:
    shown = 10.0 ** value if log else value
    return f"{shown:.3g}"


def render_svg(curve: AggregateCurve, title: str, log_x: bool = False, log_y: bool = False) -> str:
    keep = np.isfinite(curve.mean) & np.isfinite(curve.lower) & np.isfinite(curve.upper)
    if log_x:
        keep &= curve.k > 0
    if log_y:
        keep &= curve.lower > 0
    k = curve.k[keep].astype(float)
    xs = _scale(k, log_x)
    mean, lower, upper = (_scale(v[keep], log_y) for v in (curve.mean, curve.lower, curve.upper))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    if xs.size:
        x_lo, x_hi = float(xs.min()), float(xs.max())
        y_lo, y_hi = float(lower.min()), float(upper.max())
        if x_hi == x_lo:
            x_hi = x_lo + 1.0
        if y_hi == y_lo:
            y_lo, y_hi = y_lo - 0.5, y_hi + 0.5

        def px(x):
            return MARGIN + (np.asarray(x) - x_lo) / (x_hi - x_lo) * (WIDTH - 2 * MARGIN)

        def py(y):
            return HEIGHT - MARGIN - (np.asarray(y) - y_lo) / (y_hi - y_lo) * (HEIGHT - 2 * MARGIN)

        band = list(zip(px(xs), py(upper))) + list(zip(px(xs[::-1]), py(lower[::-1])))
        parts.append(
            '<polygon fill="#4c78a8" fill-opacity="0.25" stroke="none" points="'
            + " ".join(f"{a:.2f},{b:.2f}" for a, b in band) + '"/>'
        )
        parts.append(
            '<polyline fill="none" stroke="#4c78a8" stroke-width="1.5" points="'
            + " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px(xs), py(mean))) + '"/>'
        )
        bottom, left = HEIGHT - MARGIN, MARGIN
        parts.append(f'<line x1="{left}" y1="{bottom}" x2="{WIDTH - MARGIN}" y2="{bottom}" stroke="black"/>')
        parts.append(f'<line x1="{left}" y1="{MARGIN}" x2="{left}" y2="{bottom}" stroke="black"/>')
        for t in np.linspace(x_lo, x_hi, TICKS):
            x = float(px(t))
            parts.append(f'<line x1="{x:.2f}" y1="{bottom}" x2="{x:.2f}" y2="{bottom + 4}" stroke="black"/>')
            parts.append(f'<text x="{x:.2f}" y="{bottom + 16}" text-anchor="middle">{_fmt(t, log_x)}</text>')
        for t in np.linspace(y_lo, y_hi, TICKS):
            y = float(py(t))
            parts.append(f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
            parts.append(f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end">{_fmt(t, log_y)}</text>')
        parts.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle">iteration k</text>')
        parts.append(
            f'<text x="14" y="{HEIGHT / 2}" text-anchor="middle" '
            f'transform="rotate(-90 14 {HEIGHT / 2})">{escape(curve.metric)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(curve: AggregateCurve, path: Path, title: str, log_x: bool = False, log_y: bool = False) -> Path:
    path = Path(path)
    path.write_text(render_svg(curve, title, log_x=log_x, log_y=log_y))
    return path


def wants_log(values: np.ndarray) -> bool:
    finite = values[np.isfinite(values)]
    return finite.size > 1 and bool(np.all(finite > 0)) and math.log10(finite.max() / finite.min()) > 2
