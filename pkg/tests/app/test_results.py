import numpy as np

from app.models.results import check_out, node_out, plain, quantity_out
from utils.core.reports import CheckReport
from utils.learning.rules import Rule
from utils.learning.state import AbsorbingSet


def test_quantity_out_keeps_exact_fraction():
    q = quantity_out(166 / 3)
    assert q.rational == "166/3"
    assert q.decimal.startswith("55.333")
    assert quantity_out(15.0).model_dump() == {"decimal": "15", "rational": "15"}


def test_irrational_has_no_fraction():
    assert quantity_out(float(np.sqrt(2))).rational is None


def test_plain_converts_numpy():
    value = plain({"a": np.float64(1.5), "b": (np.int64(2), np.inf), 3: [np.bool_(True)]})
    assert value == {"a": 1.5, "b": [2, None], "3": [True]}
    assert type(value["a"]) is float


def test_check_out():
    report = CheckReport("radius_walras", True, details={"walrasian": np.float64(18.0)})
    out = check_out(report)
    assert out.passed
    assert out.details == {"walrasian": 18.0}


def test_node_out():
    assert node_out(AbsorbingSet(Rule.IM, 22.5)).label == "mon(22.5,IM)"
