import itertools
import math

import numpy as np
import pandas as pd
import pytest

from twsbench.core.errors import (
    DegenerateError,
    EmptySampleError,
    ManifestMismatchError,
    MissingCellError,
    ModelWithoutAttentionError,
    UntrainedModelError,
)
from twsbench.dataset.types import SplitSpec
from twsbench.evaluation import (
    best_counts,
    boxplot_stats,
    cdf_frame,
    coefficient_distribution,
    compute_metrics,
    empirical_cdf,
    evaluate_basins,
    mann_whitney_u,
    mean_attention,
    metric_matrix,
    occlusion_importance,
    pairwise_significance,
    rank_models,
    skill_difference,
    trend_estimate,
    trend_strata,
)
from twsbench.features import TaskSpec, assemble_supervised
from twsbench.models.classical import LinearModel, fit_ols
from twsbench.models.neural import TFTLiteModel


def _oracle(y_true, y_pred):
    n = len(y_true)
    mt = sum(y_true) / n
    mp = sum(y_pred) / n
    st = math.sqrt(sum((v - mt) ** 2 for v in y_true) / n)
    sp = math.sqrt(sum((v - mp) ** 2 for v in y_pred) / n)
    cov = sum((a - mt) * (b - mp) for a, b in zip(y_true, y_pred)) / n
    r = cov / (st * sp)
    return {
        "bias": sum(b - a for a, b in zip(y_true, y_pred)) / n,
        "rmse": math.sqrt(sum((b - a) ** 2 for a, b in zip(y_true, y_pred)) / n),
        "corr": r,
        "nse": 1 - sum((b - a) ** 2 for a, b in zip(y_true, y_pred)) / sum((a - mt) ** 2 for a in y_true),
        "kge": 1 - math.sqrt((r - 1) ** 2 + (sp / st - 1) ** 2 + (mp / mt - 1) ** 2),
    }


def test_perfect_prediction():
    y = np.array([3.0, 1.0, 4.0, 1.0, 5.0])
    m = compute_metrics(y, y)
    assert (m.bias, m.rmse, m.nse, m.median_loss) == (0.0, 0.0, 1.0, 0.0)
    assert m.corr == pytest.approx(1.0)
    assert m.kge == pytest.approx(1.0)


def test_mean_predictor():
    y = np.array([1.0, 2.0, 4.0, 8.0])
    m = compute_metrics(y, np.full(4, y.mean()))
    assert m.nse == 0.0
    assert math.isnan(m.corr) and not m.is_defined("corr")
    assert not m.is_defined("kge")


def test_worked_example():
    y_true, y_pred = [1.0, 2.0, 3.0, 4.0], [2.0, 2.0, 4.0, 4.0]
    m = compute_metrics(y_true, y_pred)
    oracle = _oracle(y_true, y_pred)
    assert m.bias == pytest.approx(0.5)
    assert m.rmse == pytest.approx(math.sqrt(0.5))
    # SSE 2 over SST 5
    assert m.nse == pytest.approx(0.6)
    assert m.corr == pytest.approx(oracle["corr"], abs=1e-12)
    assert m.kge == pytest.approx(oracle["kge"], abs=1e-12)
    assert m.median_loss == pytest.approx(0.5)


def test_metrics_match_oracle_on_random_pairs():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(3, 40))
        y_true = rng.normal(50.0, 20.0, size=n)
        y_pred = y_true + rng.normal(0.0, 10.0, size=n)
        m, oracle = compute_metrics(y_true, y_pred), _oracle(list(y_true), list(y_pred))
        for name, value in oracle.items():
            assert getattr(m, name) == pytest.approx(value, abs=1e-12, rel=1e-12), name


def test_metric_scale_behaviour():
    rng = np.random.default_rng(1)
    y_true = rng.normal(30.0, 5.0, size=50)
    y_pred = y_true + rng.normal(0.0, 2.0, size=50)
    base = compute_metrics(y_true, y_pred)

    scaled = compute_metrics(3.0 * y_true, 3.0 * y_pred)
    assert scaled.rmse == pytest.approx(3.0 * base.rmse)
    assert scaled.bias == pytest.approx(3.0 * base.bias)
    assert scaled.kge == pytest.approx(base.kge)

    shifted = compute_metrics(2.0 * y_true + 7.0, 2.0 * y_pred + 7.0)
    assert shifted.nse == pytest.approx(base.nse)
    assert shifted.corr == pytest.approx(base.corr)


def test_undefined_metrics_are_flagged():
    constant = compute_metrics([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])
    assert math.isnan(constant.nse) and not constant.is_defined("nse")

    centered = compute_metrics([-1.0, 0.0, 1.0], [-1.0, 0.5, 1.0])
    assert centered.is_defined("corr")
    assert not centered.is_defined("kge")

    with pytest.raises(EmptySampleError):
        compute_metrics([], [])


def test_evaluate_basins_long_table():
    ids = np.array(["B0002"] * 3 + ["B0001"] * 3)
    y_true = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 7.0])
    table = evaluate_basins(ids, y_true, y_true + 0.5, "Linear_single", "test", lead=2)
    assert list(table.columns) == ["basin_id", "model", "experiment", "lead", "metric", "value", "defined"]
    assert table["basin_id"].tolist()[:6] == ["B0001"] * 6
    assert len(table) == 12
    assert metric_matrix(table, "bias").loc["B0002", "Linear_single"] == pytest.approx(0.5)


def _brute_force_u(a, b):
    return sum(1.0 if x > y else 0.5 if x == y else 0.0 for x in a for y in b)


def _brute_force_p(a, b, alternative):
    pooled = list(a) + list(b)
    observed = _brute_force_u(a, b)
    us = []
    for picked in itertools.combinations(range(len(pooled)), len(a)):
        rest = [pooled[i] for i in range(len(pooled)) if i not in picked]
        us.append(_brute_force_u([pooled[i] for i in picked], rest))
    us = np.array(us)
    less, greater = np.mean(us <= observed), np.mean(us >= observed)
    return {"less": less, "greater": greater, "two-sided": min(1.0, 2 * min(less, greater))}[alternative]


def test_mwu_separated_samples():
    result = mann_whitney_u([1, 2, 3], [4, 5, 6], alternative="less", method="exact")
    assert result.U == 0.0
    assert result.p == pytest.approx(1.0 / 20.0)
    assert result.significant(0.1) and not result.significant(0.05)


def test_mwu_identical_samples():
    result = mann_whitney_u([1.0, 2.0, 3.0], [3.0, 2.0, 1.0], method="exact")
    assert result.p == 1.0


def test_mwu_exact_matches_labeling_enumeration():
    rng = np.random.default_rng(2)
    for _ in range(200):
        n, m = rng.integers(1, 7, size=2)
        a = rng.integers(0, 6, size=n).astype(float)
        b = rng.integers(0, 6, size=m).astype(float)
        alternative = ["less", "greater", "two-sided"][int(rng.integers(3))]
        result = mann_whitney_u(a, b, alternative, method="exact")
        assert result.U == _brute_force_u(a, b)
        assert result.p == pytest.approx(_brute_force_p(a, b, alternative), abs=1e-12)


@pytest.mark.parametrize("n, m", [(6, 6), (6, 8), (7, 7), (8, 6), (8, 8)])
def test_mwu_normal_approx_tracks_exact(n, m):
    rng = np.random.default_rng(n * 10 + m)
    for shift in (0.0, 0.5, 1.0, 2.0):
        a, b = rng.normal(size=n), rng.normal(shift, 1.0, size=m)
        for alternative in ("less", "greater", "two-sided"):
            exact = mann_whitney_u(a, b, alternative, method="exact")
            approx = mann_whitney_u(a, b, alternative, method="normal-approx")
            assert exact.U == approx.U
            assert abs(exact.p - approx.p) <= 0.03


def test_mwu_swap_symmetry():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=12), rng.normal(0.5, 1.0, size=15)
    forward, backward = mann_whitney_u(a, b), mann_whitney_u(b, a)
    assert forward.method == "normal-approx"
    assert forward.U + backward.U == pytest.approx(12 * 15)
    assert forward.p == pytest.approx(backward.p)


def test_mwu_needs_samples():
    with pytest.raises(EmptySampleError):
        mann_whitney_u([], [1.0])


def test_cdf_of_single_value():
    summary = empirical_cdf([4.2])
    assert summary.cdf_x.tolist() == [4.2]
    assert summary.cdf_p.tolist() == [1.0]


def test_boxplot_of_one_to_hundred():
    summary = boxplot_stats(np.arange(1, 101))
    assert summary.median == 50.5
    assert summary.q1 == 25.75
    assert summary.q3 == 75.25
    assert (summary.whisker_low, summary.whisker_high) == (1.0, 100.0)
    assert summary.outliers == []


def test_outlier_is_excluded_from_whiskers():
    summary = boxplot_stats(list(range(1, 11)) + [1e6])
    assert summary.whisker_high == 10.0
    assert summary.outliers == [1e6]


def test_trend_estimates():
    exact = trend_estimate(2.0 * np.arange(20) + 5.0)
    assert exact.slope == pytest.approx(2.0)
    assert exact.stderr == pytest.approx(0.0, abs=1e-12)

    flat = trend_estimate(np.full(10, 3.0))
    assert flat.slope == 0.0 and flat.direction == "none"

    with pytest.raises(DegenerateError):
        trend_estimate([1.0, 2.0])


def test_trend_strata(make_series):
    t = np.arange(216, dtype=float)
    noise = np.random.default_rng(4).normal(size=216)
    series = [
        make_series("B0001", target=-2.0 * t + noise),
        make_series("B0002", target=0.5 * t + noise),
        make_series("B0003", target=noise),
    ]
    strata = trend_strata(series)
    assert strata["B0001"] == "negative"
    assert strata["B0002"] == "positive"


def _table(values):
    rows = []
    for (basin_id, model), value in values.items():
        rows.append(
            {"basin_id": basin_id, "model": model, "experiment": "x", "metric": "nse",
             "value": value, "defined": not math.isnan(value)}
        )
    return pd.DataFrame(rows)


def test_rank_models_orientation_and_ties():
    table = _table({
        ("B0001", "LSTM"): 0.8, ("B0001", "Linear_single"): 0.8, ("B0001", "TFT-lite"): 0.1,
        ("B0002", "LSTM"): float("nan"), ("B0002", "Linear_single"): 0.2, ("B0002", "TFT-lite"): 0.3,
    })
    rankings = rank_models(table, "nse")
    first, second = rankings.iloc[0], rankings.iloc[1]
    assert (first["best"], first["second"]) == ("LSTM", "Linear_single")
    assert (second["best"], second["second"]) == ("TFT-lite", "Linear_single")


def test_rank_models_matches_sort_oracle():
    rng = np.random.default_rng(5)
    models = ["A", "B", "C"]
    values = {(f"B{i:04d}", m): float(rng.normal()) for i in range(20) for m in models}
    rankings = rank_models(_table(values), "nse")
    for row in rankings.itertuples(index=False):
        ordered = sorted(models, key=lambda m: -values[(row.basin_id, m)])
        assert [row.best, row.second] == ordered[:2]


def test_rank_models_requires_every_cell():
    table = _table({("B0001", "A"): 0.1, ("B0001", "B"): 0.2, ("B0002", "A"): 0.3})
    with pytest.raises(MissingCellError):
        rank_models(table, "nse")


def test_best_counts_per_stratum():
    table = _table({
        ("B0001", "A"): 0.9, ("B0001", "B"): 0.1,
        ("B0002", "A"): 0.9, ("B0002", "B"): 0.1,
        ("B0003", "A"): 0.1, ("B0003", "B"): 0.9,
    })
    counts = best_counts(rank_models(table), {"B0001": "negative", "B0002": "none", "B0003": "none"})
    none_a = counts[(counts["stratum"] == "none") & (counts["model"] == "A")].iloc[0]
    assert (none_a["best"], none_a["second"], none_a["n_basins"]) == (1, 1, 2)
    assert counts["best"].sum() == 3


def test_skill_difference_against_reference():
    table = _table({("B0001", "Linear_single"): 0.5, ("B0001", "LSTM"): 0.7, ("B0001", "TFT-lite"): 0.2})
    deltas = skill_difference(table)
    assert deltas.set_index("model")["delta"].to_dict() == pytest.approx({"LSTM": 0.2, "TFT-lite": -0.3})


def test_pairwise_significance_and_cdf():
    rng = np.random.default_rng(6)
    values = {(f"B{i:04d}", m): float(rng.normal()) for i in range(10) for m in ("A", "B", "C")}
    table = _table(values)
    significance = pairwise_significance(table, metrics=("nse",))
    assert significance[["model_a", "model_b"]].values.tolist() == [["A", "B"], ["A", "C"], ["B", "C"]]

    cdf = cdf_frame(table, "nse")
    assert cdf.groupby("model")["cdf"].max().tolist() == [1.0, 1.0, 1.0]


class _FlatPredictor:
    trained = True

    def __init__(self, model):
        self.model = model

    def predict_split(self, split):
        return self.model.predict(split.flat)[:, None]


def test_occlusion_of_input_free_model_is_zero(make_series):
    split = assemble_supervised([make_series()], TaskSpec.regression(6), SplitSpec.linear())["test"]
    report = occlusion_importance(_FlatPredictor(LinearModel(np.zeros(6 * 4 + 12), 1.0)), split, "zero")
    np.testing.assert_array_equal(report.importance, 0.0)
    assert [row["step"] for row in report.rows()] == [1, 2, 3, 4, 5, 6]


def test_occlusion_finds_last_step_driver(make_series):
    rng = np.random.default_rng(7)
    dynamic = rng.normal(size=(216, 4))
    target = np.concatenate([[0.0], 5.0 * dynamic[:-1, 0]]) + 0.01 * rng.normal(size=216)
    sset = assemble_supervised([make_series(dynamic=dynamic, target=target)], TaskSpec.regression(6), SplitSpec.linear())
    train = sset["train"]
    model = _FlatPredictor(fit_ols(train.flat, train.targets[:, 0]))

    report = occlusion_importance(model, sset["test"], "Linear_single")
    assert int(np.argmax(report.importance)) == 5


def test_mean_attention_requirements(make_series):
    split = assemble_supervised([make_series()], TaskSpec.regression(6), SplitSpec.neural())["test"]
    with pytest.raises(ModelWithoutAttentionError):
        mean_attention(_FlatPredictor(None), split)

    model = TFTLiteModel(hidden_size=4, nheads=2, seed=0)
    with pytest.raises(UntrainedModelError):
        mean_attention(model, split)

    model.trained = True
    model.params["attn.W_k"][...] = 0.0
    report = mean_attention(model, split, "TFT-lite")
    np.testing.assert_allclose(report.importance, 1.0 / 6.0)
    assert report.method == "attention"


def test_coefficient_distribution():
    names = ["a", "b"]
    basin_models = {
        f"B{i:04d}": LinearModel(np.array([1.0 + 0.1 * i, -1.0]), 0.0, feature_names=names) for i in range(5)
    }
    pooled = LinearModel(np.array([1.2, 3.0]), 0.0, feature_names=names)
    summaries = coefficient_distribution(basin_models, pooled)

    assert summaries[0].global_inside_iqr
    assert not summaries[1].global_inside_iqr
    assert summaries[1].summary.median == -1.0

    single = coefficient_distribution({"B0001": basin_models["B0000"]}, pooled)
    assert single[0].summary.q1 == single[0].summary.q3 == 1.0

    with pytest.raises(ManifestMismatchError):
        coefficient_distribution({"B0001": LinearModel(np.zeros(2), 0.0, feature_names=["x", "y"])}, pooled)
