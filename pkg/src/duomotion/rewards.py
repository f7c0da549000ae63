"""Interaction, contact, and tracking reward terms.

All functions are pure and per-frame; sequence aggregation belongs to the
caller.  The interaction reward compares cross-agent keypoint offset
tensors against the reference through a softmax-weighted symmetric
relative discrepancy.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

NORM_FLOOR = 1e-9  # clamp for degenerate offset norms


@dataclass(frozen=True)
class RewardConfig:
    sigma_iw: float = 0.2      # meters, softmax temperature
    sigma_int: float = 2.0     # unitless scale on the weighted discrepancy
    f_min: float = 5.0         # newtons
    f_max: float = 200.0       # newtons
    kappa: float = 0.1         # 1/newtons
    tau: float = 10.0          # newtons
    r_max: float = 1.0
    w_pen: float = 1.0         # weight of the penalty inside r_contact
    sigma_goal_pos: float = 0.5
    sigma_goal_vel: float = 1.0
    upper_body_keypoints: tuple = field(default_factory=tuple)  # per-agent index sets

    def __post_init__(self):
        if not (0 < self.f_min <= self.f_max):
            raise InputError("need 0 < f_min <= f_max")
        if self.kappa <= 0 or self.tau <= 0 or self.r_max <= 0:
            raise InputError("kappa, tau, r_max must be positive")
        if self.sigma_iw <= 0 or self.sigma_int <= 0:
            raise InputError("sigma_iw and sigma_int must be positive")


@dataclass(frozen=True)
class RolloutFrame:
    """One frame of measured state for both agents."""

    keypoints: np.ndarray         # (2, U, 3) simulated upper-body keypoints
    ref_keypoints: np.ndarray     # (2, U, 3)
    contact_forces: np.ndarray    # (2, L_nf) newtons, non-feet links
    ref_contact_mask: np.ndarray  # (2, L_nf) binary

    def __post_init__(self):
        kp = np.asarray(self.keypoints, dtype=float)
        rkp = np.asarray(self.ref_keypoints, dtype=float)
        cf = np.asarray(self.contact_forces, dtype=float)
        cm = np.asarray(self.ref_contact_mask)
        object.__setattr__(self, "keypoints", kp)
        object.__setattr__(self, "ref_keypoints", rkp)
        object.__setattr__(self, "contact_forces", cf)
        object.__setattr__(self, "ref_contact_mask", cm)
        if kp.shape != rkp.shape or kp.ndim != 3 or kp.shape[0] != 2:
            raise InputError("keypoints and ref_keypoints must be (2, U, 3)")
        if cf.shape != cm.shape or cf.ndim != 2 or cf.shape[0] != 2:
            raise InputError("contact_forces and ref_contact_mask must be (2, L_nf)")
        if (cf < 0).any():
            raise InputError("contact forces must be non-negative")
        if not np.isin(cm, (0, 1)).all():
            raise InputError("ref_contact_mask must be binary")


@dataclass(frozen=True)
class RewardBreakdown:
    r_int: float
    r_con: float
    p_con: float
    r_goal: float
    total: float


def pairwise_offsets(frame: RolloutFrame) -> tuple:
    """Cross-agent offset tensors Delta[u, v] = p1[u] - p2[v]."""
    sim = frame.keypoints[0][:, None, :] - frame.keypoints[1][None, :, :]
    ref = frame.ref_keypoints[0][:, None, :] - frame.ref_keypoints[1][None, :, :]
    return sim, ref


def interaction_weights(ref_offsets: np.ndarray, sigma_iw: float) -> np.ndarray:
    """Softmax importance over pairs: closer reference pairs weigh more."""
    ref_offsets = np.asarray(ref_offsets, dtype=float)
    if ref_offsets.size == 0:
        raise InputError("need at least one keypoint pair")
    d = np.linalg.norm(ref_offsets, axis=-1)
    # subtract the min distance before exponentiating: softmax is invariant
    # to the shift and this avoids underflow
    z = np.exp(-(d - d.min()) / sigma_iw)
    return z / z.sum()


def interaction_discrepancy(sim_offset: np.ndarray, ref_offset: np.ndarray) -> float:
    """Symmetric relative discrepancy between one sim/ref offset pair."""
    sim_offset = np.asarray(sim_offset, dtype=float)
    ref_offset = np.asarray(ref_offset, dtype=float)
    num = np.linalg.norm(sim_offset - ref_offset)
    ns = max(np.linalg.norm(sim_offset), NORM_FLOOR)
    nr = max(np.linalg.norm(ref_offset), NORM_FLOOR)
    return float(0.5 * num / ns + 0.5 * num / nr)


def _discrepancy_tensor(sim: np.ndarray, ref: np.ndarray) -> np.ndarray:
    num = np.linalg.norm(sim - ref, axis=-1)
    ns = np.maximum(np.linalg.norm(sim, axis=-1), NORM_FLOOR)
    nr = np.maximum(np.linalg.norm(ref, axis=-1), NORM_FLOOR)
    return 0.5 * num / ns + 0.5 * num / nr


def interaction_reward(frame: RolloutFrame, config: RewardConfig) -> float:
    """Shared interaction reward in (0, 1]; 1 iff sim offsets match ref."""
    sim, ref = pairwise_offsets(frame)
    w = interaction_weights(ref, config.sigma_iw)
    e = _discrepancy_tensor(sim, ref)
    return float(np.exp(-config.sigma_int * np.sum(w * e)))


def expected_contact_reward(force: float, mask: int, config: RewardConfig) -> float:
    """Banded reward for contacts the reference asked for."""
    if force < 0:
        raise InputError("force must be >= 0")
    if mask == 0:
        return 0.0
    if config.f_min <= force <= config.f_max:
        return config.r_max
    if force < config.f_min:
        return config.r_max / (1.0 + np.exp(config.kappa * (config.f_min - force)))
    return config.r_max / (1.0 + np.exp(config.kappa * (force - config.f_max)))


def unexpected_contact_penalty(force: float, mask: int, config: RewardConfig) -> float:
    """Sigmoidal penalty for forces where the reference expects none."""
    if force < 0:
        raise InputError("force must be >= 0")
    if mask == 1:
        return 0.0
    return float(1.0 / (1.0 + np.exp(-config.kappa * (force - config.tau))))


def aggregate_contact(frame: RolloutFrame, config: RewardConfig) -> tuple:
    """Sum expected rewards and unexpected penalties over agents and links."""
    r_con = 0.0
    p_con = 0.0
    forces = frame.contact_forces
    masks = frame.ref_contact_mask
    for i in range(2):
        for b in range(forces.shape[1]):
            r_con += expected_contact_reward(float(forces[i, b]), int(masks[i, b]), config)
            p_con += unexpected_contact_penalty(float(forces[i, b]), int(masks[i, b]), config)
    return r_con, p_con


def tracking_rewards(frame: RolloutFrame, config: RewardConfig, sim_vel=None, ref_vel=None) -> tuple:
    """Exponential tracking terms (r_goal, r_vel) from keypoint errors."""
    pos_err = np.linalg.norm(frame.keypoints - frame.ref_keypoints)
    r_goal = float(np.exp(-(pos_err**2) / config.sigma_goal_pos**2))
    if sim_vel is None or ref_vel is None:
        return r_goal, r_goal
    vel_err = np.linalg.norm(np.asarray(sim_vel) - np.asarray(ref_vel))
    r_vel = float(np.exp(-(vel_err**2) / config.sigma_goal_vel**2))
    return r_goal, r_vel


def contact_term(r_con: float, p_con: float, config: RewardConfig) -> float:
    """r_contact as reward minus weighted penalty."""
    return r_con - config.w_pen * p_con


def frame_breakdown(frame: RolloutFrame, config: RewardConfig, sim_vel=None, ref_vel=None) -> RewardBreakdown:
    """All per-frame reward terms with unit scales for the total."""
    r_int = interaction_reward(frame, config)
    r_con, p_con = aggregate_contact(frame, config)
    r_goal, _ = tracking_rewards(frame, config, sim_vel, ref_vel)
    total = r_goal + r_int + contact_term(r_con, p_con, config)
    return RewardBreakdown(r_int=r_int, r_con=r_con, p_con=p_con, r_goal=r_goal, total=total)


@dataclass(frozen=True)
class ObservationSchema:
    """Component sizes of the policy observation, fixed concatenation order."""

    self_state: int
    ref_targets: int
    other_state: int
    own_mask: int
    partner_mask: int
    measured_contact: int

    @property
    def total(self) -> int:
        return (
            self.self_state
            + self.ref_targets
            + self.other_state
            + self.own_mask
            + self.partner_mask
            + self.measured_contact
        )


def build_observation(
    schema: ObservationSchema,
    agent: int,
    self_state: np.ndarray,
    other_state: np.ndarray,
    ref_targets: np.ndarray,
    masks: tuple,
    measured_contact: np.ndarray,
) -> np.ndarray:
    """Concatenate observation components in the documented fixed order.

    Order: [self_state | ref_targets | other_state | own mask | partner
    mask | measured contact]; masks is (mask_agent0, mask_agent1) and the
    agent index selects which is "own".
    """
    if agent not in (0, 1):
        raise InputError("agent must be 0 or 1")
    own = np.asarray(masks[agent], dtype=float).ravel()
    partner = np.asarray(masks[1 - agent], dtype=float).ravel()
    parts = [
        (np.asarray(self_state, dtype=float).ravel(), schema.self_state, "self_state"),
        (np.asarray(ref_targets, dtype=float).ravel(), schema.ref_targets, "ref_targets"),
        (np.asarray(other_state, dtype=float).ravel(), schema.other_state, "other_state"),
        (own, schema.own_mask, "own_mask"),
        (partner, schema.partner_mask, "partner_mask"),
        (np.asarray(measured_contact, dtype=float).ravel(), schema.measured_contact, "measured_contact"),
    ]
    for arr, size, name in parts:
        if arr.size != size:
            raise InputError(f"observation component {name} has size {arr.size}, expected {size}")
    return np.concatenate([arr for arr, _, _ in parts])
