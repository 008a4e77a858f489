import numpy as np
import pandas as pd
import pytest

from distvlp.engine import SeededRng
from distvlp.exceptions import StatisticsError
from distvlp.harness import HSD_COLUMNS, UNDEFINED, hsd_from_frame, residual_variance, tukey_hsd


def test_identical_systems_give_p_one_and_undefined_effect():
    row = np.linspace(0, 1, 20)
    (pair,) = tukey_hsd(np.stack([row, row]), 200, SeededRng(0))
    assert pair.p_value == 1.0
    assert pair.difference == 0.0
    # Per-item scores vary, so the residual is positive and the effect is zero.
    assert pair.effect_size == 0.0


def test_zero_residual_variance_is_undefined():
    scores = np.stack([np.full(10, 0.3), np.full(10, 0.7)])
    assert residual_variance(scores) == 0.0
    (pair,) = tukey_hsd(scores, 100, SeededRng(0))
    assert pair.effect_size is None
    assert pair.row()["effect"] == UNDEFINED


def test_constant_rows_with_inexact_means_stay_undefined():
    # 0.1 and 0.7 are not exact in binary; their means round away from the entries
    frame = pd.DataFrame({"a": np.full(10, 0.1), "b": np.full(10, 0.7), "c": np.full(10, 1.3)})
    table = hsd_from_frame(frame, trials=50, seed=0)
    assert (table["effect"] == UNDEFINED).all()


def test_separated_systems_are_significant(np_rng):
    base = np_rng.uniform(0, 0.5, size=30)
    scores = np.stack([base + 0.4 + np_rng.normal(0, 0.02, 30), base])
    (pair,) = tukey_hsd(scores, 1000, SeededRng(3))
    assert pair.p_value <= 0.01
    assert pair.effect_size > 0


def test_randomized_agrees_with_exhaustive(np_rng):
    scores = np_rng.normal(size=(2, 8))
    scores[0] += 0.3
    (exact,) = tukey_hsd(scores, 0, SeededRng(0), exhaustive=True)
    (approx,) = tukey_hsd(scores, 20000, SeededRng(1))
    assert approx.p_value == pytest.approx(exact.p_value, abs=0.02)


def test_exhaustive_limit():
    with pytest.raises(StatisticsError):
        tukey_hsd(np.zeros((3, 10)), 0, SeededRng(0), exhaustive=True)


def test_result_does_not_depend_on_workers(np_rng):
    scores = np_rng.normal(size=(4, 25))
    serial = tukey_hsd(scores, 1000, SeededRng(9), chunk_size=128)
    threaded = tukey_hsd(scores, 1000, SeededRng(9), chunk_size=128, workers=4)
    assert serial == threaded


def test_larger_gaps_never_get_larger_p_values(np_rng):
    scores = np_rng.normal(size=(4, 30)) + np.array([[0.0], [0.1], [0.3], [0.6]])
    pairs = sorted(tukey_hsd(scores, 2000, SeededRng(2)), key=lambda p: abs(p.difference))
    p_values = [p.p_value for p in pairs]
    assert p_values == sorted(p_values, reverse=True)


@pytest.mark.parametrize(
    "scores,kwargs",
    [
        (np.zeros((1, 5)), {}),
        (np.zeros((2, 1)), {}),
        (np.array([[0.0, np.nan], [1.0, 2.0]]), {}),
        (np.zeros((2, 5)), {"names": ["a"]}),
        (np.zeros(5), {}),
    ],
)
def test_invalid_tables(scores, kwargs):
    with pytest.raises(StatisticsError):
        tukey_hsd(scores, 10, SeededRng(0), **kwargs)


def test_invalid_trials():
    with pytest.raises(StatisticsError):
        tukey_hsd(np.zeros((2, 5)), 0, SeededRng(0))


def test_frame_interface_names_systems_by_column(np_rng):
    frame = pd.DataFrame(np_rng.normal(size=(12, 3)), columns=["base", "pde", "point"])
    table = hsd_from_frame(frame, trials=200, seed=4)
    assert list(table.columns) == HSD_COLUMNS
    assert list(zip(table.sysA, table.sysB)) == [("base", "pde"), ("base", "point"), ("pde", "point")]
    assert table.equals(hsd_from_frame(frame, trials=200, seed=4))
