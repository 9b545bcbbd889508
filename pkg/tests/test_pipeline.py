import numpy as np
import pytest

from speechmood.evaluation import build_fold_plans, run_experiment
from speechmood.nn import ConvPoolConfig, FfnnConfig, TrainConfig
from speechmood.pipeline import (
    default_grid,
    grid_from_dicts,
    load_model_dir,
    make_trainer,
    save_model_dir,
)

SUBJECTS = [f"S{i:02d}" for i in range(1, 13)]


def _vector_data(rng, dim=12):
    w = rng.standard_normal(dim) * 0.3
    data = {}
    for s in SUBJECTS:
        X = [rng.standard_normal(dim) + 2.0 for _ in range(8)]
        y = np.array([float(x @ w) for x in X])
        data[s] = (X, y)
    return data


def _sequence_data(rng, dim=6):
    data = {}
    for s in SUBJECTS:
        X = [rng.standard_normal((int(rng.integers(10, 16)), dim)) for _ in range(6)]
        y = np.array([float(x.mean()) for x in X])
        data[s] = (X, y)
    return data


class TestTrainerAdapters:
    def test_ffnn_through_full_experiment(self):
        # regression: test-fold prediction used to crash on list-of-vector input
        rng = np.random.default_rng(0)
        data = _vector_data(rng)
        plans = build_fold_plans(SUBJECTS, seed=1, n_runs=1)
        trainer = make_trainer(TrainConfig(max_epochs=2, batch_size=16, dtype="float32",
                                           learning_rate=1e-3))
        res = run_experiment(plans, [FfnnConfig(n_hidden_layers=1, width=8, n_inputs=12)],
                             data, trainer)
        assert int(np.sum(~np.isnan(res.metric_matrices["rmse"]))) == 6

    def test_convpool_through_experiment(self):
        rng = np.random.default_rng(1)
        data = _sequence_data(rng)
        plans = build_fold_plans(SUBJECTS, seed=2, n_runs=1)
        trainer = make_trainer(TrainConfig(max_epochs=1, batch_size=8, dtype="float32"))
        res = run_experiment(
            plans, [ConvPoolConfig(n_layers=1, channels=4, kernel_len=3, n_input_channels=6)],
            data, trainer)
        assert int(np.sum(~np.isnan(res.metric_matrices["rmse"]))) == 6

    def test_normalization_travels_with_model(self, tmp_path):
        rng = np.random.default_rng(2)
        trainer = make_trainer(TrainConfig(max_epochs=1, batch_size=8))
        X = [rng.standard_normal(5) * 3 + 7 for _ in range(20)]
        y = np.array([x[0] for x in X])
        model = trainer(FfnnConfig(n_hidden_layers=1, width=4, n_inputs=5),
                        X, y, X, y, seed=0)
        preds = model.predict(X)
        save_model_dir(model, tmp_path / "m")
        loaded = load_model_dir(tmp_path / "m")
        assert np.array_equal(loaded.predict(X), preds)
        assert np.allclose(loaded.stats.mean, model.stats.mean)

    def test_predict_accepts_list_and_matrix(self):
        rng = np.random.default_rng(3)
        trainer = make_trainer(TrainConfig(max_epochs=1, batch_size=8))
        X = [rng.standard_normal(4) for _ in range(12)]
        y = np.zeros(12)
        model = trainer(FfnnConfig(n_hidden_layers=1, width=4, n_inputs=4), X, y, X, y, seed=0)
        as_list = model.predict(X)
        as_matrix = model.predict(np.stack(X))
        assert np.array_equal(as_list, as_matrix)


class TestGrids:
    def test_default_grids_match_reference_sizes(self):
        assert len(default_grid("ffnn")) == 9
        assert len(default_grid("convpool")) == 8

    def test_grid_from_dicts(self):
        grid = grid_from_dicts("convpool", [{"n_layers": 2, "channels": 8, "kernel_len": 4}])
        assert isinstance(grid[0], ConvPoolConfig)
        with pytest.raises(ValueError):
            grid_from_dicts("nope", [{}])
