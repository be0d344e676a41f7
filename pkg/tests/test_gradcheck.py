import numpy as np
import pytest

from app.services.gradcheck import ERROR_FLOOR, TOLERANCE, CheckResult, check_gradients, model_case, relative_error, run_gradcheck
from app.services.rng import STREAM_GRADCHECK, derive_generator

EXPECTED_CHECKS = [
    "conv2d_3x3",
    "conv2d_1x1",
    "conv_transpose2d",
    "maxpool2d",
    "relu",
    "clamp01",
    "concat_channels",
    "mse_loss",
    "model",
]


def test_every_op_and_the_model_pass():
    results = run_gradcheck(seed=0)
    assert [r.name for r in results] == EXPECTED_CHECKS
    for result in results:
        assert result.checked > 0
        assert result.passed, f"{result.name}: {result.max_relative_error:.3e}"


def test_other_seed_passes_too():
    assert all(result.passed for result in run_gradcheck(seed=7))


@pytest.mark.parametrize("seed", [0, 7])
def test_model_check_runs_off_the_relu_kinks(seed):
    rng = derive_generator(seed, STREAM_GRADCHECK)
    name, leaves, loss_fn = model_case(rng, seed)
    biases = [leaf for leaf in leaves if leaf.name.endswith(".bias")]
    assert biases and all(np.all(leaf.data > 0) for leaf in biases)
    result = check_gradients(name, leaves, loss_fn, rng)
    assert result.passed, f"{result.max_relative_error:.3e}"


def test_corrupted_gradients_are_caught():
    results = run_gradcheck(seed=0, corrupt=True)
    assert not any(result.passed for result in results)


def test_relative_error():
    assert relative_error(1.0, 1.0) == 0.0
    assert relative_error(1.0, 0.5) == pytest.approx(0.5 / 1.5)
    assert relative_error(0.0, 1e-9) == pytest.approx(1e-9 / ERROR_FLOOR)


def test_check_result_threshold():
    assert CheckResult(name="relu", max_relative_error=TOLERANCE, checked=3).passed
    assert not CheckResult(name="relu", max_relative_error=TOLERANCE * 2, checked=3).passed
