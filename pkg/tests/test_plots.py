import xml.etree.ElementTree as ET

import numpy as np

from scf_ganlab.gan import EpochRecord, LossHistory
from scf_ganlab.metrics import roc_and_auc
from scf_ganlab.plots import line_chart, loss_curve_svg, roc_svg


def test_svg_is_well_formed_and_deterministic():
    hist = LossHistory("wasserstein", [EpochRecord(e, -0.1 * e, 0.1, -0.05 * e, 0.5, 0.1 * e)
                                       for e in range(1, 6)])
    svg = loss_curve_svg(hist)
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) == 2
    assert svg == loss_curve_svg(hist)


def test_roc_chart_escapes_labels():
    curve, _ = roc_and_auc([1, 0, 1, 0], [0.9, 0.8, 0.4, 0.3])
    svg = roc_svg({"A<B & C": curve})
    ET.fromstring(svg)
    assert "A&lt;B &amp; C" in svg


def test_flat_and_nonfinite_series():
    svg = line_chart({"flat": (np.arange(3), np.array([1.0, np.nan, 1.0]))})
    ET.fromstring(svg)
