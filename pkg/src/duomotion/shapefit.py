"""Regularized shape fitting of the body template to a robot morphology.

Minimizes the weighted squared keypoint mismatch between regressed rest
joints and robot rest keypoints, plus an L2 penalty on the shape
coefficients.  Damped gradient descent with backtracking line search.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .body import BodyTemplate, RobotModel
from .errors import DivergedError, InputError

ARMIJO_C = 1e-4
DEFAULT_LAMBDA = 0.0016


@dataclass(frozen=True)
class ShapeFitConfig:
    lam: float = DEFAULT_LAMBDA
    max_iters: int = 500
    step_tolerance: float = 1e-10
    keypoint_weights: np.ndarray | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise InputError("lambda must be >= 0")
        if self.max_iters < 1:
            raise InputError("max_iters must be >= 1")
        if self.step_tolerance <= 0:
            raise InputError("step_tolerance must be > 0")


@dataclass(frozen=True)
class ShapeFitResult:
    beta_prime: np.ndarray
    final_loss: float
    keypoint_loss: float
    reg_loss: float
    iterations: int
    converged: bool
    loss_history: tuple = field(default_factory=tuple, repr=False)


def keypoint_system(template: BodyTemplate, robot: RobotModel, rest_robot_keypoints: np.ndarray):
    """Linear system behind the keypoint loss.

    Rest joints are affine in beta: joints(beta) = j0 + A beta with
    A[k] = (regressor @ blendshapes)[human_k].  Returns (A (K,3,B),
    b (K,3)) so the residual is A beta - b.
    """
    rest_robot_keypoints = np.asarray(rest_robot_keypoints, dtype=float)
    if not robot.keypoint_map:
        raise InputError("keypoint_map is empty")
    if rest_robot_keypoints.shape != (len(robot.keypoint_map), 3):
        raise InputError("rest_robot_keypoints must be (K, 3)")
    human_idx = np.array([h for h, _ in robot.keypoint_map])
    # (J,3,B) regressed blendshape sensitivity
    sens = np.einsum("jv,vcb->jcb", template.joint_regressor, template.blendshapes)
    a = sens[human_idx]
    b = rest_robot_keypoints - template.rest_joints()[human_idx]
    return a, b


def shape_loss_terms(a: np.ndarray, b: np.ndarray, beta: np.ndarray, lam: float, weights: np.ndarray):
    resid = np.einsum("kcb,b->kc", a, beta) - b
    key = float(np.sum(weights * np.einsum("kc,kc->k", resid, resid)))
    reg = lam * float(beta @ beta)
    return key, reg, resid


def shape_loss_gradient(a: np.ndarray, b: np.ndarray, beta: np.ndarray, lam: float, weights: np.ndarray):
    _, _, resid = shape_loss_terms(a, b, beta, lam, weights)
    grad_key = 2.0 * np.einsum("k,kcb,kc->b", weights, a, resid)
    return grad_key + 2.0 * lam * beta


def ridge_solution(a: np.ndarray, b: np.ndarray, lam: float, weights: np.ndarray | None = None) -> np.ndarray:
    """Closed-form minimizer of the (weighted) keypoint + L2 objective."""
    nb = a.shape[2]
    if weights is None:
        weights = np.ones(a.shape[0])
    a2 = a.reshape(-1, nb)
    aw = (a * weights[:, None, None]).reshape(-1, nb)
    ata = a2.T @ aw
    atb = a2.T @ (b * weights[:, None]).reshape(-1)
    return np.linalg.solve(ata + lam * np.eye(nb), atb)


def fit_shape(
    template: BodyTemplate,
    robot: RobotModel,
    rest_robot_keypoints: np.ndarray,
    config: ShapeFitConfig = ShapeFitConfig(),
) -> ShapeFitResult:
    """Fit shape coefficients so regressed joints meet the robot keypoints."""
    a, b = keypoint_system(template, robot, rest_robot_keypoints)
    k = a.shape[0]
    weights = (
        np.ones(k) if config.keypoint_weights is None else np.asarray(config.keypoint_weights, dtype=float)
    )
    if weights.shape != (k,):
        raise InputError("keypoint_weights must match the keypoint count")

    beta = np.zeros(template.num_shapes)
    key, reg, _ = shape_loss_terms(a, b, beta, config.lam, weights)
    loss = key + reg
    history = [loss]
    step = 1.0
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        grad = shape_loss_gradient(a, b, beta, config.lam, weights)
        gnorm2 = float(grad @ grad)
        if gnorm2 == 0.0:
            converged = True
            break
        # backtracking halving with Armijo condition
        accepted = False
        while step > 1e-16:
            cand = beta - step * grad
            ck, cr, _ = shape_loss_terms(a, b, cand, config.lam, weights)
            cl = ck + cr
            if not np.isfinite(cl):
                raise DivergedError("non-finite loss during shape fit", iteration=it)
            if cl <= loss - ARMIJO_C * step * gnorm2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        move = step * np.sqrt(gnorm2)
        beta = cand
        key, reg, loss = ck, cr, cl
        history.append(loss)
        step *= 1.5
        if move < config.step_tolerance:
            converged = True
            break

    return ShapeFitResult(
        beta_prime=beta,
        final_loss=key + reg,
        keypoint_loss=key,
        reg_loss=reg,
        iterations=it,
        converged=converged,
        loss_history=tuple(history),
    )
