import xml.etree.ElementTree as ET

import numpy as np
import pytest

from lmkbench.plots import MIN_RADIUS, PlotError, PlotSpec, render_plot
from lmkbench.synthetic import random_face

NS = {"svg": "http://www.w3.org/2000/svg"}


def parse(svg):
    return ET.fromstring(svg)


def test_ced_two_series():
    spec = PlotSpec("ced", {"a": [1.0, 4.0, 12.0], "b": [2.0, 3.0]}, title="CED", threshold=10)
    root = parse(render_plot(spec))
    lines = root.findall(".//svg:polyline[@class='ced']", NS)
    assert [p.get("data-label") for p in lines] == ["a", "b"]
    assert root.find(".//svg:line[@class='threshold']", NS) is not None


def test_ced_curve_reaches_plot_edge():
    root = parse(render_plot(PlotSpec("ced", {"a": [20.0]}, width=400, height=300)))
    pts = root.find(".//svg:polyline", NS).get("points").split()
    assert len(pts) >= 2


def test_scatter_legend():
    rng = np.random.default_rng(0)
    series = {g: rng.normal(size=(5, 2)) for g in ("common", "turned", "occluded")}
    root = parse(render_plot(PlotSpec("scatter", series)))
    assert len(root.findall(".//svg:g[@class='legend-entry']", NS)) == 3
    assert sum(len(g.findall("svg:circle", NS)) for g in root.findall(".//svg:g[@class='group']", NS)) == 15


def test_landmark_face_only():
    root = parse(render_plot(PlotSpec("landmark_error", {"face": random_face(np.random.default_rng(0))})))
    marks = root.findall(".//svg:circle[@class='landmark']", NS)
    assert len(marks) == 68
    assert {float(m.get("r")) for m in marks} == {MIN_RADIUS}


def test_landmark_error_scales_markers():
    err = np.zeros(68)
    err[10] = 5.0
    root = parse(render_plot(PlotSpec("landmark_error", {"face": random_face(np.random.default_rng(1)),
                                                         "model": err})))
    radii = [float(m.get("r")) for m in root.findall(".//svg:circle[@class='landmark']", NS)]
    assert max(radii) == radii[10] > MIN_RADIUS


def test_escapes_labels():
    parse(render_plot(PlotSpec("ced", {"<a & b>": [1.0]}, title='"quoted" & <tagged>')))


@pytest.mark.parametrize("spec", [
    PlotSpec("ced", {}),
    PlotSpec("ced", {"a": []}),
    PlotSpec("scatter", {"a": np.empty((0, 2))}),
    PlotSpec("landmark_error", {"model": np.zeros(68)}),
    PlotSpec("pie", {"a": [1]}),
])
def test_invalid(spec):
    with pytest.raises(PlotError):
        render_plot(spec)
