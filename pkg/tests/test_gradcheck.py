"""
梯度检查测试
"""
import numpy as np
import pytest

from engine import Tensor, default_dtype, relu
from engine.ops import ReLU
from main import EXIT_GRADCHECK, EXIT_OK, main
from services.gradcheck import check_function, relative_error, run_gradcheck


@pytest.fixture(scope="module")
def rows():
    return run_gradcheck(seed=0)


class TestGradcheck:

    def test_all_rows_pass(self, rows):
        failed = [r.to_dict() for r in rows if not r.passed]
        assert not failed

    def test_row_names(self, rows):
        names = {r.name for r in rows}
        assert {"conv2d", "conv3d", "fc", "gap", "avgpool", "sigmoid", "relu", "loss",
                "end_to_end", "end_to_end_2d"} <= names

    def test_tolerances(self, rows):
        by_name = {r.name: r for r in rows}
        assert by_name["conv3d"].tolerance == 1e-3
        assert by_name["end_to_end"].tolerance == 1e-2

    def test_relative_error_floor(self):
        assert relative_error(np.array([0.0]), np.array([1e-9])) < 1e-5

    def test_broken_backward_is_detected(self, monkeypatch):
        monkeypatch.setattr(ReLU, "backward", lambda self, grad: (grad * self.mask * 0.5,))
        with default_dtype(np.float64):
            x = Tensor(np.array([0.5, -0.3, 0.8]), requires_grad=True)
            assert check_function(relu, [x], np.random.default_rng(0)) > 0.1


class TestGradcheckCommand:

    def test_exit_code_ok(self, capsys):
        assert main(["gradcheck", "--seed", "1"]) == EXIT_OK
        assert "PASS" in capsys.readouterr().out

    def test_exit_code_on_failure(self, monkeypatch, capsys):
        monkeypatch.setattr(ReLU, "backward", lambda self, grad: (grad * self.mask * 0.5,))
        assert main(["gradcheck"]) == EXIT_GRADCHECK
        assert "FAIL" in capsys.readouterr().out
