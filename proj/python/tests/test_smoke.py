import json

import numpy as np
import pytest

import imbalkit


def linear_data(n=300, d=3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = (X @ np.arange(1, d + 1) + 0.3 * rng.normal(size=n) > 0).astype(int)
    return X, y


def test_metrics_and_stats():
    report = imbalkit.evaluate([0.1, 0.4, 0.6, 0.9], [0, 1, 0, 1])
    assert report["accuracy"] == 0.5
    assert report["auc"] == 0.75
    assert imbalkit.bonferroni_adjust(0.05, 14) == pytest.approx(0.05 / 14, abs=1e-18)
    r = imbalkit.paired_t_test([0.9, 0.85, 0.88, 0.91], [0.8, 0.81, 0.79, 0.83])
    assert r["cohens_d"] == pytest.approx(r["t"] / 2.0, rel=1e-12)
    with pytest.raises(imbalkit.NumericError):
        imbalkit.paired_t_test([0.9, 0.8], [0.9, 0.8])


def test_smote_balances():
    X, y = linear_data(200, 2)
    y[:] = 0
    y[:30] = 1
    Xs, ys = imbalkit.smote(X, y.tolist(), seed=3)
    assert Xs.shape == (340, 2)
    assert sum(ys) == 170


def test_model_fit_predict_round_trip():
    X, y = linear_data()
    model = imbalkit.Model.fit("random-forest", X, y.tolist(), {"n_estimators": 20}, seed=1)
    p = np.asarray(model.predict_proba(X))
    assert ((p >= 0.5) == (y == 1)).mean() > 0.95
    back = imbalkit.Model.from_json(json.loads(json.dumps(model.to_json())))
    assert back.predict_proba(X) == model.predict_proba(X)
    phi, base, pred = model.shapley(X[0].tolist(), X[:5])
    assert base + sum(phi) == pytest.approx(pred, abs=1e-9)


def test_bad_hyperparameter_is_config_error():
    X, y = linear_data(50)
    with pytest.raises(imbalkit.ConfigError):
        imbalkit.Model.fit("logistic", X, y.tolist(), {"C": -1})


def test_eda_command(tmp_path):
    csv, schema = imbalkit.synthetic_csv(rows=400, positives=62)
    (tmp_path / "data.csv").write_bytes(csv.encode())
    (tmp_path / "schema.json").write_text(json.dumps(schema))
    (tmp_path / "config.json").write_text(
        json.dumps({"dataset": "data.csv", "schema": "schema.json", "target": "abused", "models": ["nb"]})
    )
    result = imbalkit.eda(str(tmp_path / "config.json"), out=str(tmp_path / "out"))
    assert result["exit_code"] == 0
    assert "eda/associations.csv" in result["files"]
    manifest = json.loads((tmp_path / "out" / "run-manifest.json").read_text())
    assert manifest["commands"]["eda"]["status"] == "ok"
