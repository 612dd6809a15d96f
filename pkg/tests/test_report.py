import xml.etree.ElementTree as ET

import numpy as np
import pandas as pd

from disentbench.analysis import dendrogram
from disentbench.report import curve_svg, dendrogram_svg, heatmap_svg, render_report, scatter_grid_svg

NS = "{http://www.w3.org/2000/svg}"


def _parse(svg):
    return ET.fromstring(svg)


def _cells(root):
    return [r for r in root.iter(f"{NS}rect") if "cell" in r.get("class", "").split()]


def test_heatmap_cells_and_labels(rng):
    rows, cols = ["f0", "f1", "f2"], [f"c{i}" for i in range(5)]
    root = _parse(heatmap_svg(rng.random((3, 5)), rows, cols, "m"))
    assert len(_cells(root)) == 15
    text = {t.text for t in root.iter(f"{NS}text")}
    assert set(rows) | set(cols) <= text


def test_heatmap_missing_cell_is_hatched():
    v = np.array([[1.0, np.nan], [0.2, -0.5]])
    root = _parse(heatmap_svg(v, ["a", "b"], ["a", "b"], diverging=True, vmin=-1, vmax=1))
    missing = [r for r in _cells(root) if "missing" in r.get("class")]
    assert len(missing) == 1 and missing[0].get("fill") == "url(#hatch)"
    assert root.find(f".//{NS}pattern[@id='hatch']") is not None


def test_heatmap_is_deterministic(rng):
    v = rng.random((2, 3))
    assert heatmap_svg(v, ["a", "b"], ["x", "y", "z"]) == heatmap_svg(v, ["a", "b"], ["x", "y", "z"])


def test_dendrogram_worked_example_has_one_merge():
    dg = dendrogram(np.array([[0.9, 0.1], [0.2, 0.8]]))
    root = _parse(dendrogram_svg(dg.merges, ["f0", "f1"]))
    merges = [g for g in root.iter(f"{NS}g") if g.get("class") == "merge"]
    assert len(merges) == 1 and float(merges[0].get("data-threshold")) == 0.2


def test_curve_and_scatter_render(rng):
    curve = pd.DataFrame({"threshold": [0.1, 0.5, 0.9], "components": [1, 2, 0],
                          "factors_connected": [2, 2, 0]})
    assert _parse(curve_svg(curve, "c")).tag == f"{NS}svg"
    wide = pd.DataFrame(rng.random((10, 3)), columns=["a", "b", "c"])
    assert _parse(scatter_grid_svg(wide)).tag == f"{NS}svg"


def test_render_report_lists_missing_inputs(tmp_path):
    res = render_report(tmp_path)
    assert set(res["missing"]) == {"matrices", "scores.csv", "analyses"}
    assert res["written"] == []
