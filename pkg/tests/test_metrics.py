"""
SROCC / PLCC / PSNR / 中位数汇总测试
"""
import math

import numpy as np
import pytest

from models.errors import MetricError, ShapeError
from models.manifest import ScorePolarity
from models.report import LogisticParams, RunMetrics
from services.evaluator import PsnrScorer
from tools.metric_tools import (
    aggregate_runs, fit_logistic, logistic4, median, mse_frames, plcc_after_logistic, psnr_video, srocc
)
from tools.video_tools import RawVideo


class TestSrocc:

    def test_identity(self):
        assert srocc(([1, 2, 3, 4, 5], [1, 2, 3, 4, 5])) == pytest.approx(1.0)

    def test_reversed(self):
        assert srocc(([5, 4, 3, 2, 1], [1, 2, 3, 4, 5])) == pytest.approx(-1.0)

    def test_one_swap(self):
        assert srocc(([1, 2, 3, 5, 4], [1, 2, 3, 4, 5])) == pytest.approx(0.9)

    def test_monotone_transform_invariant(self, rng):
        x = rng.normal(size=30)
        y = x + rng.normal(scale=0.5, size=30)
        assert srocc((np.exp(x), y)) == pytest.approx(srocc((x, y)))

    def test_constant_list(self):
        with pytest.raises(MetricError):
            srocc(([3, 3, 3, 3, 3], [1, 2, 3, 4, 5]))

    def test_length_mismatch(self):
        with pytest.raises(MetricError):
            srocc(([1, 2, 3], [1, 2, 3, 4]))


class TestPlcc:

    def test_recovers_generating_curve(self):
        x = np.linspace(0.0, 1.0, 40)
        truth = LogisticParams(beta1=90.0, beta2=10.0, beta3=0.5, beta4=0.1)
        y = truth.apply(x)
        plcc, fitted = plcc_after_logistic((x, y))
        assert plcc >= 0.999
        assert not fitted.fallback
        rmse = float(np.sqrt(np.mean((fitted.apply(x) - y) ** 2)))
        assert rmse <= 0.01 * (y.max() - y.min())

    def test_identity_data(self):
        x = np.linspace(1.0, 5.0, 25)
        plcc, _ = plcc_after_logistic((x, x))
        assert plcc >= 0.999

    def test_negated_data(self):
        x = np.linspace(1.0, 5.0, 25)
        plcc, _ = plcc_after_logistic((x, -x))
        assert abs(plcc) >= 0.999

    def test_positive_affine_input(self, rng):
        x = rng.uniform(0.0, 1.0, 40)
        y = logistic4(x, [80.0, 20.0, 0.4, 0.15]) + rng.normal(scale=2.0, size=40)
        base, _ = plcc_after_logistic((x, y))
        shifted, _ = plcc_after_logistic((3.0 * x + 7.0, y))
        assert shifted == pytest.approx(base, abs=1e-4)

    def test_too_few_samples(self):
        with pytest.raises(MetricError):
            plcc_after_logistic(([1, 2, 3, 4], [1, 2, 3, 4]))

    def test_constant_predictions(self):
        with pytest.raises(MetricError):
            fit_logistic(np.ones(6), np.arange(6.0))

    def test_evaluation_cap_falls_back_to_affine(self, rng):
        x = rng.uniform(0.0, 1.0, 40)
        y = logistic4(x, [80.0, 20.0, 0.4, 0.15]) + rng.normal(scale=2.0, size=40)
        fitted = fit_logistic(x, y, max_iter=1)
        assert fitted.fallback
        slope, intercept = np.polyfit(x, y, 1)
        np.testing.assert_allclose(fitted.apply(x), slope * x + intercept)


class TestPsnr:

    def test_identical_is_infinite(self, rng):
        video = RawVideo.from_array(rng.integers(0, 256, (3, 8, 8)))
        assert math.isinf(psnr_video(video, video))

    def test_constant_offset(self):
        ref = RawVideo.from_array(np.full((2, 4, 4), 100))
        dist = RawVideo.from_array(np.full((2, 4, 4), 102))
        assert psnr_video(ref, dist) == pytest.approx(10 * math.log10(255 ** 2 / 4))

    def test_matches_naive_mse(self, rng):
        ref = RawVideo.from_array(rng.integers(0, 256, (3, 6, 7)))
        dist = RawVideo.from_array(rng.integers(0, 256, (3, 6, 7)))
        naive = []
        for t in range(3):
            total = 0.0
            for r in range(6):
                for c in range(7):
                    total += (float(ref.luma[t, r, c]) - float(dist.luma[t, r, c])) ** 2
            naive.append(total / 42)
        np.testing.assert_allclose(mse_frames(ref, dist), naive, atol=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            psnr_video(RawVideo.from_array(np.zeros((2, 4, 4))), RawVideo.from_array(np.zeros((2, 4, 6))))

    def test_scorer_polarity_and_cap(self):
        ref = RawVideo.from_array(np.full((1, 4, 4), 100))
        dist = RawVideo.from_array(np.full((1, 4, 4), 102))
        higher = PsnrScorer(ScorePolarity.HIGHER_IS_BETTER)
        lower = PsnrScorer(ScorePolarity.LOWER_IS_BETTER)
        assert lower.score(ref, dist) == -higher.score(ref, dist)
        assert higher.score(ref, ref) == 100.0


class TestAggregate:

    @pytest.mark.parametrize("values, expected", [([0.1, 0.9, 0.5], 0.5), ([1, 2, 3, 4], 2.5), ([0.7], 0.7)])
    def test_median(self, values, expected):
        assert median(values) == pytest.approx(expected)

    def test_median_empty(self):
        with pytest.raises(MetricError):
            median([])

    def test_report(self):
        logistic = LogisticParams(beta1=1.0, beta2=0.0, beta3=0.0, beta4=1.0)
        runs = [RunMetrics(run=i, seed=i, n_test=10, plcc=p, srocc=s, logistic=logistic)
                for i, (p, s) in enumerate([(0.8, 0.7), (0.9, 0.95), (0.85, 0.9)])]
        report = aggregate_runs(runs)
        assert report.median_plcc == pytest.approx(0.85)
        assert report.median_srocc == pytest.approx(0.9)
        frame = report.to_frame()
        assert len(frame) == 4
        assert frame.iloc[-1]["run"] == "median"
        assert report.seeds == [0, 1, 2]
