import numpy as np
import pytest

from graphbc.experiments import ExperimentConfig, compute_metrics, l2rne, run_experiment, shipped_graph


def test_metrics_identities():
    truth = np.array([1.0, 2.0, 3.0])
    m = compute_metrics(truth, truth)
    assert m.l2rne == 0.0 and np.all(m.errors == 0)
    assert l2rne(truth, 2 * truth) == pytest.approx(100.0)
    with pytest.raises(ZeroDivisionError):
        l2rne(np.zeros(2), np.ones(2))
    with pytest.raises(ValueError, match="domain mismatch"):
        l2rne(truth, np.ones(2))


def test_metric_rows_exclude_runtime():
    m = compute_metrics(np.ones(2), np.array([1.0, 0.5]))
    m.runtime = {"data": 1.0}
    names = [k for k, _ in m.rows(["x", "y"])]
    assert names == ["L2RNE_percent", "max_abs_error", "abs_error[x]", "abs_error[y]"]


def test_config_validation():
    g = shipped_graph("p3")
    with pytest.raises(ValueError):
        ExperimentConfig(g, 1)
    with pytest.raises(ValueError):
        ExperimentConfig(g, 3, mode="other")
    assert ExperimentConfig(g, 3).control_tol == 1e-12
    assert ExperimentConfig(g, 3, mode="mc").control_tol == 5e-4


def test_small_monte_carlo_pipeline_populates_metrics():
    g = shipped_graph("eight")
    out = run_experiment(ExperimentConfig(g, 9, mode="mc", samples=20000, seed=1, tol=5e-4, tol_mode="absolute"))
    assert out.metrics.frne is not None and out.metrics.l2rne is not None
    assert out.exact is not None and out.data.meta["kind"] == "monte-carlo"


def test_unknown_shipped_graph():
    with pytest.raises(KeyError):
        shipped_graph("ten")
