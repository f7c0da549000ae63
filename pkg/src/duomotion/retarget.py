"""Keypoint retargeting to the robot, velocity derivation, contact masks.

Each frame solves a damped Gauss-Newton least-squares problem matching
robot link positions to human keypoints, warm-started from the previous
frame.  Angular/linear velocities come from backward differences; contact
masks project colliding faces onto robot links through body-part labels.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .body import BodyTemplate, RobotModel, forward_kinematics, link_positions, link_positions_batch
from .contacts import ContactSet
from .errors import ConfigError, InputError
from .rotations import relative_rotvec

GN_ITERS = 100
GN_H = 1e-6


@dataclass(frozen=True)
class RobotReferenceMotion:
    """Retargeted per-frame robot reference: pose, velocities, contacts."""

    theta_hat: np.ndarray     # (T, DOF)
    root_t: np.ndarray        # (T, 3)
    root_r: np.ndarray        # (T, 3) axis-angle
    p_hat: np.ndarray         # (T, L, 3)
    quat_hat: np.ndarray      # (T, L, 4)
    omega_hat: np.ndarray     # (T, L, 3)
    v_hat: np.ndarray         # (T, L, 3)
    contact_mask: np.ndarray  # (T, L) binary
    dt: float

    def __post_init__(self):
        mask = np.asarray(self.contact_mask)
        if not np.isin(mask, (0, 1)).all():
            raise InputError("contact mask must be binary")

    @property
    def num_frames(self) -> int:
        return self.theta_hat.shape[0]


def retarget_frame(
    robot: RobotModel,
    human_keypoints: np.ndarray,
    prev_solution: np.ndarray,
) -> tuple:
    """Solve one frame of keypoint IK.

    prev_solution packs [root_t, root_r, q]; the same packing is returned
    along with a diverged flag (True means the previous solution was kept).
    """
    human_keypoints = np.asarray(human_keypoints, dtype=float)
    k = len(robot.keypoint_map)
    if human_keypoints.shape != (k, 3):
        raise InputError(f"human_keypoints must be ({k}, 3)")
    dof = robot.num_dof
    n = 6 + dof
    x = np.asarray(prev_solution, dtype=float).copy()
    if x.shape != (n,):
        raise InputError(f"prev_solution must be ({n},)")
    links = np.array([r for _, r in robot.keypoint_map])
    lo, hi = robot.joint_limits[:, 0], robot.joint_limits[:, 1]

    def clampx(v):
        v = v.copy()
        v[6:] = np.clip(v[6:], lo, hi)
        return v

    def residual(v):
        pos = link_positions(robot, v[6:], (v[:3], v[3:6]))
        return (pos[links] - human_keypoints).ravel()

    x = clampx(x)
    r = residual(x)
    cost = float(r @ r)
    if not np.isfinite(cost):
        return np.asarray(prev_solution, dtype=float), True
    mu = 1e-6
    for _ in range(GN_ITERS):
        perturbed = np.repeat(x[None, :], 2 * n, axis=0)
        perturbed[:n, :] += GN_H * np.eye(n)
        perturbed[n:, :] -= GN_H * np.eye(n)
        batch_pos = link_positions_batch(robot, perturbed)[:, links, :].reshape(2 * n, -1)
        jac = ((batch_pos[:n] - batch_pos[n:]) / (2 * GN_H)).T
        jtj = jac.T @ jac
        jtr = jac.T @ r
        improved = False
        for _ in range(8):
            try:
                delta = np.linalg.solve(jtj + mu * np.eye(n), -jtr)
            except np.linalg.LinAlgError:
                mu *= 10
                continue
            cand = clampx(x + delta)
            rc = residual(cand)
            cc = float(rc @ rc)
            if not np.isfinite(cc):
                return np.asarray(prev_solution, dtype=float), True
            if cc < cost:
                x, r, cost = cand, rc, cc
                mu = max(mu * 0.3, 1e-12)
                improved = True
                break
            mu *= 10
        if not improved or cost < 1e-20:
            break
    return x, False


def retarget_sequence(robot: RobotModel, keypoints_seq: np.ndarray, dt: float) -> tuple:
    """Sequentially retarget all frames; returns (solutions (T,6+DOF), flags)."""
    keypoints_seq = np.asarray(keypoints_seq, dtype=float)
    t_total = keypoints_seq.shape[0]
    n = 6 + robot.num_dof
    solutions = np.zeros((t_total, n))
    flags = np.zeros(t_total, dtype=bool)
    prev = np.zeros(n)
    # seed root translation with the first-frame keypoint centroid shift
    prev[:3] = keypoints_seq[0].mean(axis=0) - np.array(
        [forward_kinematics(robot, np.zeros(robot.num_dof), (np.zeros(3), np.zeros(3)))[0][r] for _, r in robot.keypoint_map]
    ).mean(axis=0)
    for t in range(t_total):
        sol, diverged = retarget_frame(robot, keypoints_seq[t], prev)
        solutions[t] = sol
        flags[t] = diverged
        prev = sol
    return solutions, flags


def derive_velocities(p_hat: np.ndarray, quat_hat: np.ndarray, dt: float) -> tuple:
    """Backward-difference linear and angular link velocities.

    Frame 0 copies frame 1.  A single-frame sequence yields zeros (with a
    warning).
    """
    p_hat = np.asarray(p_hat, dtype=float)
    quat_hat = np.asarray(quat_hat, dtype=float)
    t_total, n_links = p_hat.shape[0], p_hat.shape[1]
    v = np.zeros_like(p_hat)
    omega = np.zeros((t_total, n_links, 3))
    if t_total < 2:
        warnings.warn("velocity derivation needs at least 2 frames; returning zeros")
        return omega, v
    v[1:] = (p_hat[1:] - p_hat[:-1]) / dt
    for t in range(1, t_total):
        for l in range(n_links):
            omega[t, l] = relative_rotvec(quat_hat[t - 1, l], quat_hat[t, l]) / dt
    v[0] = v[1]
    omega[0] = omega[1]
    return omega, v


def face_part_labels(template: BodyTemplate, robot: RobotModel) -> np.ndarray:
    """Majority body-part label per face."""
    vert_labels = robot.part_labels[template.faces]  # (F, 3)
    out = np.empty(template.faces.shape[0], dtype=np.int64)
    for i, row in enumerate(vert_labels):
        vals, counts = np.unique(row, return_counts=True)
        out[i] = vals[np.argmax(counts)]
    return out


def project_contact_mask(contacts: ContactSet, template: BodyTemplate, robot: RobotModel) -> np.ndarray:
    """One-hot per-link contact masks for both agents, shape (T, L, 2)."""
    labels = face_part_labels(template, robot)
    t_total = contacts.num_frames
    mask = np.zeros((t_total, robot.num_links, 2), dtype=np.int64)
    for t, frame_pairs in enumerate(contacts.per_frame):
        for pair in frame_pairs:
            for agent, face in ((0, pair.face_a), (1, pair.face_b)):
                part = int(labels[face])
                if part not in robot.part_to_link:
                    raise ConfigError(f"body part {part} has no robot link mapping")
                mask[t, robot.part_to_link[part], agent] = 1
    return mask


def build_reference_motion(
    robot: RobotModel,
    solutions: np.ndarray,
    contact_mask: np.ndarray,
    dt: float,
) -> RobotReferenceMotion:
    """Assemble the full reference tuple from per-frame IK solutions."""
    solutions = np.asarray(solutions, dtype=float)
    t_total = solutions.shape[0]
    n_links = robot.num_links
    p_hat = np.empty((t_total, n_links, 3))
    quat_hat = np.empty((t_total, n_links, 4))
    for t in range(t_total):
        pos, quat, _ = forward_kinematics(robot, solutions[t, 6:], (solutions[t, :3], solutions[t, 3:6]))
        p_hat[t] = pos
        quat_hat[t] = quat
    omega, v = derive_velocities(p_hat, quat_hat, dt)
    return RobotReferenceMotion(
        theta_hat=solutions[:, 6:],
        root_t=solutions[:, :3],
        root_r=solutions[:, 3:6],
        p_hat=p_hat,
        quat_hat=quat_hat,
        omega_hat=omega,
        v_hat=v,
        contact_mask=np.asarray(contact_mask),
        dt=dt,
    )
