"""Tests for the single-parameter toy analysis and the noisy-label sweep."""

import numpy as np
import pytest

from rankdistill.errors import InvalidCounts, LengthMismatch
from rankdistill.theory import (
    CANONICAL_TRAIN,
    NoisySimConfig,
    alpha_star,
    descend,
    find_minima,
    gradient_descent_fitter,
    noisy_label_simulation,
    prediction_mse,
    run_theorem1_demo,
    student_labels,
    toy_fitter,
    toy_loss,
    toy_predict,
)


class TestToyLoss:
    def test_value_at_left_teacher_minimum(self):
        # residuals at b = -1/6 are (1/3, 2/3, -1/3); half their squared sum
        # is 1/3
        assert toy_loss(-1.0 / 6.0, CANONICAL_TRAIN) == pytest.approx(
            1.0 / 3.0, abs=1e-12)

    def test_vanishing_term(self):
        # a point (x, 0) contributes nothing when b = x
        assert toy_loss(0.7, [(0.7, 0.0)]) == 0.0

    def test_empty_points(self):
        assert toy_loss(0.3, []) == 0.0

    def test_half_factor_present(self):
        # single point, residual 2: loss is 2, not 4
        assert toy_loss(0.0, [(1.0, 4.0)]) == pytest.approx(2.0)


class TestFindMinima:
    def test_teacher_minima(self):
        minima = find_minima(CANONICAL_TRAIN)
        assert len(minima) == 2
        assert minima[0] == pytest.approx(-1.0 / 6.0, abs=1e-6)
        assert minima[1] == pytest.approx(1.0 / 6.0, abs=1e-6)

    def test_student_minima(self):
        pts = [(-1.0, 11.0 / 6.0), (0.0, 2.0 / 3.0), (1.0, 13.0 / 6.0)]
        minima = find_minima(pts)
        assert len(minima) == 2
        assert minima[0] == pytest.approx(-1.0 / 6.0, abs=1e-6)
        assert minima[1] == pytest.approx(1.0 / 18.0, abs=1e-6)

    def test_zero_labels_single_symmetric_minimum(self):
        # loss reduces to 2*(3b^2 + 2); unique minimum at b = 0
        pts = [(-1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]
        minima = find_minima(pts)
        assert len(minima) == 1
        assert minima[0] == pytest.approx(0.0, abs=1e-6)

    def test_empty_points_no_minima(self):
        assert find_minima([]) == []

    def test_stationarity_conditions(self):
        # analytic conditions on the smooth segments: 12b - 2 = 0 for the
        # original labels and 12b - 2/3 = 0 for the blended ones
        teacher = find_minima(CANONICAL_TRAIN)
        assert any(abs(12 * b - 2.0) < 1.2e-5 for b in teacher)
        student_pts = [(-1.0, 11.0 / 6.0), (0.0, 2.0 / 3.0), (1.0, 13.0 / 6.0)]
        student = find_minima(student_pts)
        assert any(abs(12 * b - 2.0 / 3.0) < 1.2e-5 for b in student)


class TestDescend:
    def test_lands_in_local_basin(self):
        # from b0 = 0.5 the walk must reach +1/6, not the global picture
        assert descend(CANONICAL_TRAIN, 0.5) == pytest.approx(
            1.0 / 6.0, abs=1e-6)
        assert descend(CANONICAL_TRAIN, -0.5) == pytest.approx(
            -1.0 / 6.0, abs=1e-6)


class TestStudentLabels:
    def test_paper_blend(self):
        y = np.array([2.0, 1.0, 2.0])
        t = np.array([5.0 / 3.0, 1.0 / 3.0, 7.0 / 3.0])
        np.testing.assert_allclose(
            student_labels(y, t, 0.5), [11.0 / 6.0, 2.0 / 3.0, 13.0 / 6.0],
            atol=1e-15)

    def test_endpoints(self):
        y = np.array([1.0, 2.0])
        t = np.array([0.5, 0.25])
        np.testing.assert_array_equal(student_labels(y, t, 0.0), y)
        np.testing.assert_array_equal(student_labels(y, t, 1.0), t)

    def test_linear_interpolation(self):
        rng = np.random.default_rng(0)
        y = rng.uniform(size=5)
        t = rng.uniform(size=5)
        for a in (0.2, 0.5, 0.8):
            np.testing.assert_allclose(
                student_labels(y, t, a), (1 - a) * y + a * t, atol=0)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            student_labels([1.0], [1.0, 2.0], 0.5)


class TestTheoremDemo:
    def test_reproduces_worked_example(self):
        rep = run_theorem1_demo()
        assert rep.teacher_b == pytest.approx(-1.0 / 6.0, abs=1e-6)
        np.testing.assert_allclose(
            rep.teacher_scores, [5.0 / 3.0, 1.0 / 3.0, 7.0 / 3.0], atol=1e-6)
        np.testing.assert_allclose(
            rep.student_label_values, [11.0 / 6.0, 2.0 / 3.0, 13.0 / 6.0],
            atol=1e-6)
        assert rep.student_b == pytest.approx(1.0 / 18.0, abs=1e-6)
        assert rep.teacher_test_mse == pytest.approx(1.0 / 9.0, abs=1e-9)
        assert rep.student_test_mse == pytest.approx(1.0 / 81.0, abs=1e-9)

    def test_student_keeps_teacher_fixed_point(self):
        rep = run_theorem1_demo()
        assert any(abs(b - rep.teacher_b) < 1e-6 for b in rep.student_minima)
        assert rep.student_fixed_points

    def test_report_text_mentions_key_values(self):
        text = run_theorem1_demo().to_text()
        for token in ("-0.166667", "0.055556", "0.111111", "0.012346"):
            assert token in text

    def test_alpha_zero_student_is_teacher(self):
        rep = run_theorem1_demo(alpha=0.0)
        np.testing.assert_allclose(rep.student_label_values, [2.0, 1.0, 2.0],
                                   atol=0)
        assert sorted(np.round(rep.student_minima, 6)) == sorted(
            np.round(rep.teacher_minima, 6))


class TestAlphaStar:
    def test_values(self):
        assert alpha_star(100, 10) == pytest.approx(100 / 110)
        assert alpha_star(7, 0) == 1.0
        assert alpha_star(5, 5) == 0.5

    def test_invalid_counts(self):
        with pytest.raises(InvalidCounts):
            alpha_star(0, 0)
        with pytest.raises(InvalidCounts):
            alpha_star(5, 6)
        with pytest.raises(InvalidCounts):
            alpha_star(5, -1)


class TestNoisySimulation:
    def test_deterministic(self):
        cfg = NoisySimConfig(n=20, m=2, alphas=(0.0, 0.5, 1.0), trials=5,
                             rng_seed=3)
        a = noisy_label_simulation(cfg, fitter=toy_fitter)
        b = noisy_label_simulation(cfg, fitter=toy_fitter)
        assert a.mean_test_error == b.mean_test_error

    def test_no_corruption_keeps_alpha_zero_competitive(self):
        cfg = NoisySimConfig(n=30, m=0, alphas=(0.0, 0.25, 0.5, 0.75),
                             trials=8, rng_seed=1)
        fitter = gradient_descent_fitter(width=32, epochs=400)
        rep = noisy_label_simulation(cfg, fitter=fitter)
        best = min(rep.mean_test_error)
        assert rep.mean_test_error[0] <= best + 0.01

    def test_invalid_counts(self):
        with pytest.raises(InvalidCounts):
            noisy_label_simulation(NoisySimConfig(n=5, m=6), fitter=toy_fitter)
        with pytest.raises(InvalidCounts):
            noisy_label_simulation(NoisySimConfig(n=5, m=1, trials=0),
                                   fitter=toy_fitter)

    def test_csv_format(self):
        cfg = NoisySimConfig(n=10, m=1, alphas=(0.0, 1.0), trials=2, rng_seed=0)
        csv = noisy_label_simulation(cfg, fitter=toy_fitter).to_csv()
        lines = csv.strip().split("\n")
        assert lines[0] == "alpha,mean_test_error,std"
        assert len(lines) == 3


def test_toy_predict_shape_and_values():
    np.testing.assert_allclose(toy_predict(0.5, [-0.5, 0.5, 1.5]),
                               [2.0, 0.0, 2.0])


def test_prediction_mse_is_mean_over_points():
    assert prediction_mse(-1.0 / 6.0, [(0.0, 0.0), (0.5, 1.0)]) == pytest.approx(
        1.0 / 9.0, abs=1e-12)
