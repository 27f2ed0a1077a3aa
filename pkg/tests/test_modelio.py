import numpy as np
import pytest

from markov_cusum.errors import ConfigError, ModelFileError
from markov_cusum.estimation import EmpiricalMarkovEstimate, fit
from markov_cusum.markov_core import MarkovModel
from markov_cusum.modelio import (load_model, model_from_dict, read_path_file, save_model,
                                  write_path_file)


def test_model_round_trip(tmp_path, mu1):
    path = tmp_path / "m.yaml"
    save_model(mu1, path)
    back = load_model(path)
    assert isinstance(back, MarkovModel)
    assert np.array_equal(back.transitions, mu1.transitions)
    assert np.array_equal(back.initial_law, mu1.initial_law)


def test_order_two_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    m = MarkovModel(rng.dirichlet([1, 1, 1], size=9), order=2)
    save_model(m, tmp_path / "m.yaml")
    back = load_model(tmp_path / "m.yaml")
    assert back.order == 2 and np.array_equal(back.transitions, m.transitions)


def test_estimate_round_trip(tmp_path, mu0):
    est = fit(mu0.sample(1000, 1))
    save_model(est, tmp_path / "e.yaml")
    back = load_model(tmp_path / "e.yaml")
    assert isinstance(back, EmpiricalMarkovEstimate)
    assert back.n0 == 1000
    assert np.array_equal(back.transitions, est.transitions)
    assert np.array_equal(back.initial_law, est.initial_law)


def test_hand_written_file(tmp_path):
    (tmp_path / "m.yaml").write_text("alphabet_size: 2\nrows:\n  - [0.9, 0.1]\n  - [0.2, 0.8]\n")
    m = load_model(tmp_path / "m.yaml")
    assert np.allclose(m.stationary, [2 / 3, 1 / 3])


@pytest.mark.parametrize("text, match", [
    ("rows: [[1.0]]\n", "alphabet_size"),
    ("alphabet_size: 2\nrows: [[0.5, 0.5], [0.3, 0.6]]\n", "row 1"),
    ("alphabet_size: 3\nrows: [[0.5, 0.5], [0.5, 0.5]]\n", "3 columns"),
    ("alphabet_size: 2\nrows: [[a, b], [0.5, 0.5]]\n", "numbers"),
    ("- 1\n- 2\n", "mapping"),
    ("alphabet_size: [\n", "YAML"),
    ("alphabet_size: 2\nrows: [[1, 0], [0, 1]]\n", "NonErgodic"),
    ("alphabet_size: 2\nrows: [[1, 0], [0, 1]]\ncounts: {pairs: [[1, 0]]}\n", "counts"),
])
def test_bad_files(tmp_path, text, match):
    (tmp_path / "bad.yaml").write_text(text)
    with pytest.raises(ModelFileError, match=match):
        load_model(tmp_path / "bad.yaml")


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_model(tmp_path / "nope.yaml")


def test_model_from_dict():
    m = model_from_dict({"alphabet_size": 2, "rows": [[0.5, 0.5], [0.5, 0.5]]})
    assert m.order == 1


def test_path_files(tmp_path):
    x = np.array([0, 1, 1, 0, 2])
    write_path_file(x, tmp_path / "x.txt")
    assert np.array_equal(read_path_file(tmp_path / "x.txt"), x)
    with pytest.raises(ModelFileError):
        read_path_file(tmp_path / "x.txt", n_symbols=2)
    (tmp_path / "y.txt").write_text("0\nfoo\n")
    with pytest.raises(ModelFileError):
        read_path_file(tmp_path / "y.txt")
