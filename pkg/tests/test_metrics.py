import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vra.errors import DegenerateInput, DimensionMismatchError
from vra.metrics import MetricsReport, SetMetrics, final_score, plcc, rmse_metric, srcc

from oracles import average_ranks, naive_pearson, naive_rmse, naive_spearman

PER_SET = {
    "Eva": [(0.8305, 0.7919), (0.9158, 0.9119), (0.8726, 0.8285)],
    "ConvNext": [(0.7899, 0.7387), (0.9279, 0.9171), (0.8647, 0.8211)],
    "Ensemble": [(0.8091, 0.7633), (0.9287, 0.9197), (0.8746, 0.8318)],
}
PUBLISHED_FINAL = {"Eva": 0.8585, "ConvNext": 0.8432, "Ensemble": 0.8545}


@pytest.mark.parametrize("model", PUBLISHED_FINAL)
def test_final_score_reproduces_published(model):
    sets = [SetMetrics(p, s) for p, s in PER_SET[model]]
    assert abs(final_score(sets) - PUBLISHED_FINAL[model]) <= 5e-4


def test_video_count_weighting_does_not_reproduce_published():
    rows = PER_SET["Eva"]
    weighted = sum(n * (p + s) / 2 for n, (p, s) in zip((300, 280, 120), rows)) / 700
    assert abs(weighted - PUBLISHED_FINAL["Eva"]) > 4e-4


def test_final_score_trivial_and_empty():
    assert final_score([SetMetrics(1.0, 1.0)]) == 1.0
    with pytest.raises(ValueError):
        final_score([])


def test_plcc_examples():
    x = np.arange(10.0)
    assert plcc(x, 2 * x + 1) == 1.0
    assert plcc(x, -x) == -1.0
    with pytest.raises(DegenerateInput):
        plcc(np.ones(5), x[:5])
    with pytest.raises(DimensionMismatchError):
        plcc([1, 2], [1, 2, 3])


def test_srcc_examples():
    x = np.linspace(-2, 3, 11)
    assert srcc(x, x ** 3) == 1.0
    assert srcc([1, 2, 3], [3, 2, 1]) == -1.0
    assert average_ranks([1, 2, 2, 3]) == [1, 2.5, 2.5, 4]
    assert srcc([1, 2, 2, 3], [1, 2, 3, 4]) == pytest.approx(naive_pearson([1, 2.5, 2.5, 4], [1, 2, 3, 4]), abs=1e-15)
    with pytest.raises(DegenerateInput):
        srcc([2, 2, 2], [1, 2, 3])


def test_rmse_examples(rng):
    assert rmse_metric([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert rmse_metric([0, 0], [3, 4]) == pytest.approx(3.53553391, abs=1e-8)
    a, b = rng.normal(size=100), rng.normal(size=100)
    assert abs(rmse_metric(a, b) - naive_rmse(a, b)) < 1e-12
    with pytest.raises(DimensionMismatchError):
        rmse_metric([1.0], [1.0, 2.0])


def test_against_oracles_with_ties(rng):
    for _ in range(50):
        x = rng.integers(0, 6, size=15).astype(float)
        y = rng.normal(size=15)
        assert abs(srcc(x, y) - naive_spearman(x, y)) < 1e-12
        assert abs(plcc(x, y) - naive_pearson(x, y)) < 1e-12


@settings(max_examples=100)
@given(st.lists(st.integers(-50, 50), min_size=3, max_size=30), st.randoms(use_true_random=False))
def test_srcc_monotone_invariant(xs, rnd):
    x = np.array(xs, dtype=float)
    y = np.array([rnd.random() for _ in xs])
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return
    assert srcc(np.exp(x / 10.0), y) == pytest.approx(srcc(x, y), abs=1e-12)
    assert srcc(x ** 3, y) == pytest.approx(srcc(x, y), abs=1e-12)


@settings(max_examples=200)
@given(st.data())
def test_invariances(data):
    n = data.draw(st.integers(3, 30))
    x = np.array(data.draw(st.lists(st.floats(-100, 100), min_size=n, max_size=n)))
    y = np.array(data.draw(st.lists(st.floats(-100, 100), min_size=n, max_size=n)))
    if np.ptp(x) < 1e-3 or np.ptp(y) < 1e-3:
        return
    a = data.draw(st.floats(0.1, 10))
    c = data.draw(st.floats(-10, 10))
    r = plcc(x, y)
    assert abs(r) <= 1.0 and abs(srcc(x, y)) <= 1.0
    assert plcc(a * x + c, y) == pytest.approx(r, abs=1e-10)
    assert plcc(-a * x + c, y) == pytest.approx(-r, abs=1e-10)
    assert plcc(y, x) == pytest.approx(r, abs=1e-15)
    assert srcc(y, x) == pytest.approx(srcc(x, y), abs=1e-15)
    assert rmse_metric(x, y) == rmse_metric(y, x)


def test_report_fields():
    rep = MetricsReport([SetMetrics(0.9, 0.8, 0.3, 10, "a"), SetMetrics(0.7, 0.6, 0.4, 12, "b")])
    d = rep.to_dict()
    assert d["final_score"] == pytest.approx(0.75)
    assert set(d["sets"][0]) >= {"plcc", "srcc", "rmse"}
    assert "final_score 0.7500" in rep.to_text()
