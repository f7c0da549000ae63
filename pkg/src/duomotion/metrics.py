"""Tracking and interaction evaluation metrics.

Positions are meters internally; outputs are millimeters to match the
usual reporting convention.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, UndefinedMetricError
from .rotations import geodesic_angle

MM = 1000.0


@dataclass(frozen=True)
class SuccessConfig:
    height_threshold: float = 0.3       # meters
    orientation_threshold: float = 0.8  # radians
    anchor_link: int = 0

    def __post_init__(self):
        if self.height_threshold <= 0 or self.orientation_threshold <= 0:
            raise InputError("thresholds must be positive")


@dataclass(frozen=True)
class MetricReport:
    success: float
    e_gmpjpe: float       # mm
    e_mpjpe: float        # mm
    e_acc: float          # mm/frame^2
    e_vel: float          # mm/frame
    contact_f1: float


def mpjpe(pred: np.ndarray, ref: np.ndarray, root_relative: bool = False, anchor_link: int = 0) -> float:
    """Mean per-joint position error in mm; optionally root-relative."""
    pred = np.asarray(pred, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if pred.shape != ref.shape or pred.ndim != 3:
        raise InputError("pred and ref must both be (T, L, 3)")
    if root_relative:
        pred = pred - pred[:, anchor_link : anchor_link + 1]
        ref = ref - ref[:, anchor_link : anchor_link + 1]
    return float(np.linalg.norm(pred - ref, axis=-1).mean() * MM)


def acc_error(pred: np.ndarray, ref: np.ndarray, dt: float | None = None) -> float:
    """Mean second-difference discrepancy in mm/frame^2."""
    pred = np.asarray(pred, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if pred.shape != ref.shape:
        raise InputError("shape mismatch")
    if pred.shape[0] < 3:
        raise UndefinedMetricError("acceleration error needs T >= 3")
    acc_p = pred[2:] - 2 * pred[1:-1] + pred[:-2]
    acc_r = ref[2:] - 2 * ref[1:-1] + ref[:-2]
    return float(np.linalg.norm(acc_p - acc_r, axis=-1).mean() * MM)


def vel_error(pred_root: np.ndarray, ref_root: np.ndarray) -> float:
    """Mean root first-difference discrepancy in mm/frame."""
    pred_root = np.asarray(pred_root, dtype=float)
    ref_root = np.asarray(ref_root, dtype=float)
    if pred_root.shape != ref_root.shape or pred_root.ndim != 2:
        raise InputError("roots must both be (T, 3)")
    if pred_root.shape[0] < 2:
        raise UndefinedMetricError("velocity error needs T >= 2")
    dv = np.diff(pred_root, axis=0) - np.diff(ref_root, axis=0)
    return float(np.linalg.norm(dv, axis=-1).mean() * MM)


def success(
    pred_pos: np.ndarray,
    ref_pos: np.ndarray,
    pred_quat: np.ndarray,
    ref_quat: np.ndarray,
    config: SuccessConfig = SuccessConfig(),
) -> int:
    """1 iff anchor height and orientation stay within thresholds (inclusive)."""
    pred_pos = np.asarray(pred_pos, dtype=float)
    ref_pos = np.asarray(ref_pos, dtype=float)
    a = config.anchor_link
    dh = np.abs(pred_pos[:, a, 2] - ref_pos[:, a, 2])
    if (dh > config.height_threshold).any():
        return 0
    for t in range(pred_pos.shape[0]):
        if geodesic_angle(pred_quat[t, a], ref_quat[t, a]) > config.orientation_threshold:
            return 0
    return 1


def contact_f1(pred_mask: np.ndarray, ref_mask: np.ndarray) -> float:
    """F1 over flattened binary masks; both all-zero counts as perfect."""
    pred_mask = np.asarray(pred_mask)
    ref_mask = np.asarray(ref_mask)
    if pred_mask.shape != ref_mask.shape:
        raise InputError("mask shape mismatch")
    if not (np.isin(pred_mask, (0, 1)).all() and np.isin(ref_mask, (0, 1)).all()):
        raise InputError("masks must be binary")
    p = pred_mask.ravel().astype(bool)
    r = ref_mask.ravel().astype(bool)
    tp = int((p & r).sum())
    fp = int((p & ~r).sum())
    fn = int((~p & r).sum())
    if tp + fp + fn == 0:
        return 1.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def evaluate(
    pred_pos: np.ndarray,
    ref_pos: np.ndarray,
    pred_quat: np.ndarray,
    ref_quat: np.ndarray,
    pred_mask: np.ndarray,
    ref_mask: np.ndarray,
    success_config: SuccessConfig = SuccessConfig(),
) -> MetricReport:
    """Full per-episode report for one agent."""
    a = success_config.anchor_link
    return MetricReport(
        success=float(success(pred_pos, ref_pos, pred_quat, ref_quat, success_config)),
        e_gmpjpe=mpjpe(pred_pos, ref_pos, root_relative=False),
        e_mpjpe=mpjpe(pred_pos, ref_pos, root_relative=True, anchor_link=a),
        e_acc=acc_error(pred_pos, ref_pos),
        e_vel=vel_error(pred_pos[:, a], ref_pos[:, a]),
        contact_f1=contact_f1(pred_mask, ref_mask),
    )
