"""Regularized shape fitting against the closed-form ridge oracle."""
import numpy as np
import pytest

from duomotion.errors import InputError
from duomotion.pipeline import canonical_rest_pose, rest_robot_keypoints
from duomotion.shapefit import (
    ShapeFitConfig,
    fit_shape,
    keypoint_system,
    ridge_solution,
    shape_loss_gradient,
    shape_loss_terms,
)


def _ridge_oracle(a, b, lam, weights=None):
    """Weighted normal equations assembled independently, element by element."""
    k, _, nb = a.shape
    if weights is None:
        weights = np.ones(k)
    ata = np.zeros((nb, nb))
    atb = np.zeros(nb)
    for i in range(k):
        for c in range(3):
            row = a[i, c]
            ata += weights[i] * np.outer(row, row)
            atb += weights[i] * row * b[i, c]
    return np.linalg.solve(ata + lam * np.eye(nb), atb)


class TestClosedForm:
    def test_ridge_solution_matches_manual_normal_equations(self, template, robot, rng):
        a, b = keypoint_system(template, robot, rest_robot_keypoints(template, robot))
        for lam in (0.0, 1e-3, 0.0016, 0.1):
            np.testing.assert_allclose(ridge_solution(a, b, lam), _ridge_oracle(a, b, lam), atol=1e-9)
        w = rng.uniform(0.5, 2.0, a.shape[0])
        np.testing.assert_allclose(ridge_solution(a, b, 0.01, w), _ridge_oracle(a, b, 0.01, w), atol=1e-9)


class TestFitShape:
    def test_rest_joint_targets_give_zero_shape(self, template, robot):
        human_idx = [h for h, _ in robot.keypoint_map]
        targets = template.rest_joints()[human_idx]
        res = fit_shape(template, robot, targets, ShapeFitConfig(lam=0.0016))
        assert np.linalg.norm(res.beta_prime) <= 1e-6

    def test_huge_lambda_crushes_shape(self, template, robot):
        res = fit_shape(template, robot, rest_robot_keypoints(template, robot), ShapeFitConfig(lam=1e9))
        assert np.linalg.norm(res.beta_prime) <= 1e-4

    def test_matches_ridge_solution(self, template, robot):
        keys = rest_robot_keypoints(template, robot)
        a, b = keypoint_system(template, robot, keys)
        for lam in (0.0, 1e-3, 0.0016, 0.1):
            res = fit_shape(template, robot, keys, ShapeFitConfig(lam=lam))
            np.testing.assert_allclose(res.beta_prime, ridge_solution(a, b, lam), atol=1e-6)

    def test_loss_decomposition_identity(self, template, robot):
        res = fit_shape(template, robot, rest_robot_keypoints(template, robot), ShapeFitConfig(lam=0.0016))
        assert res.final_loss == pytest.approx(
            res.keypoint_loss + 0.0016 * float(res.beta_prime @ res.beta_prime), abs=1e-9
        )

    def test_monotone_regularization(self, template, robot):
        keys = rest_robot_keypoints(template, robot)
        norms = [
            np.linalg.norm(fit_shape(template, robot, keys, ShapeFitConfig(lam=lam)).beta_prime)
            for lam in (0.0, 1e-3, 1e-1, 10.0)
        ]
        assert all(n2 <= n1 + 1e-12 for n1, n2 in zip(norms, norms[1:]))

    def test_descent_history_non_increasing(self, template, robot):
        res = fit_shape(template, robot, rest_robot_keypoints(template, robot), ShapeFitConfig(lam=0.0016))
        hist = np.asarray(res.loss_history)
        assert np.all(np.diff(hist) <= 1e-15)

    def test_weighted_fit_matches_weighted_oracle(self, template, robot, rng):
        keys = rest_robot_keypoints(template, robot)
        a, b = keypoint_system(template, robot, keys)
        w = rng.uniform(0.5, 2.0, a.shape[0])
        res = fit_shape(template, robot, keys, ShapeFitConfig(lam=0.01, keypoint_weights=w))
        np.testing.assert_allclose(res.beta_prime, ridge_solution(a, b, 0.01, w), atol=1e-6)

    def test_negative_lambda_rejected(self):
        with pytest.raises(InputError):
            ShapeFitConfig(lam=-1.0)


class TestGradient:
    def test_analytic_gradient_matches_central_differences(self, template, robot, rng):
        a, b = keypoint_system(template, robot, rest_robot_keypoints(template, robot))
        w = np.ones(a.shape[0])
        h = 1e-5
        for _ in range(5):
            beta = rng.normal(0, 0.5, a.shape[2])
            grad = shape_loss_gradient(a, b, beta, 0.0016, w)
            for i in range(len(beta)):
                bp, bm = beta.copy(), beta.copy()
                bp[i] += h
                bm[i] -= h
                kp, rp, _ = shape_loss_terms(a, b, bp, 0.0016, w)
                km, rm, _ = shape_loss_terms(a, b, bm, 0.0016, w)
                fd = ((kp + rp) - (km + rm)) / (2 * h)
                assert grad[i] == pytest.approx(fd, rel=1e-4, abs=1e-8)

    def test_rest_pose_is_deterministic(self, robot):
        np.testing.assert_array_equal(canonical_rest_pose(robot), canonical_rest_pose(robot))
