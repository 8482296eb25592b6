import csv
import io
import json
import math
import os
import random
from pathlib import Path

import pytest

import excursion

SOURCE = Path(os.environ.get("EXCURSION_SOURCE_DIR", Path(__file__).resolve().parents[2]))


def small_config(name="gauss_interp", **overrides):
    config = json.loads((SOURCE / "configs" / f"{name}.json").read_text())
    config.update({"prediction_points": [30.04, 30.5], "replicates": 40, "max_learning_rows": 300})
    config["descent"]["iterations"] = 50
    config.update(overrides)
    return json.dumps(config)


def test_marginal_round_trip():
    for model in (
        excursion.MarginalModel.gaussian(0.5, 2.0),
        excursion.MarginalModel.cauchy(0.0, 1.0),
        excursion.MarginalModel.levy(1.0),
        excursion.MarginalModel.student_t(0.0, 1.0, 3.0),
        excursion.MarginalModel.alpha_stable_symmetric(1.5, 1.0),
    ):
        for p in (0.05, 0.5, 0.95):
            assert model.cdf(model.quantile(p)) == pytest.approx(p, abs=1e-8)
        assert model.pdf(model.quantile(0.5)) > 0
    assert excursion.MarginalModel.gaussian(0, 1).family == "Gaussian"


def test_invalid_parameters_raise():
    with pytest.raises(excursion.ExcursionError):
        excursion.MarginalModel.gaussian(0.0, -1.0)


def test_metric_and_gini():
    rng = random.Random(7)
    a = [rng.gauss(0, 1) for _ in range(20000)]
    b = [rng.gauss(0, 1) for _ in range(20000)]
    weight = excursion.MarginalModel.gaussian(0, 1)
    assert excursion.excursion_metric(a, b, weight) == pytest.approx(1 / 3, abs=0.02)
    assert excursion.excursion_metric(a, a, weight) == 0.0
    assert excursion.gini(a, b) == pytest.approx(1 / 3, abs=0.02)
    assert excursion.gaussian_gini(0.0) == pytest.approx(1 / 3, abs=1e-12)
    assert excursion.wasserstein2_to_uniform([0.0, 1.0]) == pytest.approx(1 / 12, abs=1e-12)


def test_simulation_and_kernel():
    path = excursion.simulate_gauss(0.0, 0.02, 500, 3)
    assert len(path) == 500 and all(math.isfinite(v) for v in path)
    assert path == excursion.simulate_gauss(0.0, 0.02, 500, 3)
    assert excursion.kernel_norm(excursion.default_kernel(1.0), 1.0) == pytest.approx(1.0, abs=1e-6)
    assert len(excursion.simulate_stable_ma(0.5, 0.0, 0.02, 200, 3)) == 200


def test_exact_weights():
    times = [29.9, 29.94, 29.98]
    weights = excursion.exact_excursion_weights(times, 30.5)
    assert len(weights) == 3
    far = excursion.exact_excursion_weights(times, 70.0)
    assert far == pytest.approx([0.0, 0.0, 1.0], abs=1e-6)
    assert excursion.simple_kriging_weights(times, 29.98) == pytest.approx([0.0, 0.0, 1.0], abs=1e-9)


def test_fit_and_evaluate():
    config = small_config()
    weights = list(csv.DictReader(io.StringIO(excursion.fit(config))))
    assert {row["method"] for row in weights} >= {"unconstrained", "penalized"}
    rows = list(csv.DictReader(io.StringIO(excursion.evaluate(config, threads=2))))
    assert rows
    metric_column = next(k for k in rows[0] if "metric" in k)
    for row in rows:
        assert 0.0 <= float(row[metric_column]) <= 0.5
    assert excursion.evaluate(config, threads=1) == excursion.evaluate(config, threads=2)


def test_bad_config_names_key():
    config = json.loads(small_config())
    config["colour"] = "blue"
    with pytest.raises(excursion.ConfigError, match="colour"):
        excursion.fit(json.dumps(config))
