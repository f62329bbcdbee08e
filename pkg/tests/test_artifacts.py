import numpy as np
import pandas as pd

from src.harness import AggregateCurve, read_frame, render_svg, run_csv_path, write_frame
from src.harness.artifacts import wants_log, write_svg


def _curve(k, mean, spread=0.1):
    mean = np.asarray(mean, dtype=float)
    return AggregateCurve(k=np.asarray(k), mean=mean, lower=mean - spread, upper=mean + spread, metric="w2 & drm")


def test_frame_roundtrip_keeps_precision(tmp_path):
    frame = pd.DataFrame({"k": [0, 500], "theta_0": [0.1, 1.0 / 3.0], "w2": [np.nan, 2.0 ** -40]})
    path = write_frame(frame, run_csv_path(tmp_path / "nested", 3))
    assert path.name == "run_3.csv"
    raw = path.read_bytes()
    assert b"\r\n" not in raw
    assert raw.splitlines()[0] == b"k,theta_0,w2"
    back = read_frame(path)
    assert back["theta_0"].iloc[1] == 1.0 / 3.0
    assert back["w2"].iloc[1] == 2.0 ** -40
    assert np.isnan(back["w2"].iloc[0])


def test_svg_has_band_and_line():
    svg = render_svg(_curve([0, 10, 20], [1.0, 0.6, 0.5]), "cvar <portfolio>")
    assert svg.startswith("<svg")
    assert svg.rstrip().endswith("</svg>")
    assert "<polygon" in svg and "<polyline" in svg
    assert "cvar &lt;portfolio&gt;" in svg
    assert "w2 &amp; drm" in svg


def test_log_axes_drop_non_positive_points():
    curve = _curve([0, 10, 100, 1000], [1.0, 0.1, 0.01, 0.001], spread=0.0)
    svg = render_svg(curve, "tracker", log_x=True, log_y=True)
    line = next(part for part in svg.splitlines() if part.startswith("<polyline"))
    assert line.count(",") == 3


def test_empty_curve_still_renders(tmp_path):
    curve = _curve([], [])
    path = write_svg(curve, tmp_path / "curve.svg", "nothing")
    assert "<polyline" not in path.read_text()


def test_wants_log():
    assert wants_log(np.array([1.0, 1e-4, np.nan]))
    assert not wants_log(np.array([1.0, 0.5]))
    assert not wants_log(np.array([1.0, -1.0, 1e-5]))
