"""Online curriculum between tracking and interaction reward scales.

Tracking proficiency is the mean velocity-tracking reward normalized by
its own current scale; once proficient, tracking scales shrink by the
piecewise gain while interaction scales grow by its inverse, keeping each
tracking-interaction scale product constant.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .rewards import RewardBreakdown, RewardConfig, contact_term

log = logging.getLogger(__name__)

SCALE_FLOOR = 1e-4
SCALE_CEIL = 1e4

TRACKING = "tracking"
INTERACTION = "interaction"

DEFAULT_TERMS = {
    "goal": TRACKING,
    "vel": TRACKING,
    "interaction": INTERACTION,
    "contact": INTERACTION,
}


@dataclass(frozen=True)
class CurriculumState:
    scales: dict = field(default_factory=lambda: {k: 1.0 for k in DEFAULT_TERMS})
    term_class: dict = field(default_factory=lambda: dict(DEFAULT_TERMS))
    gamma_vel_key: str = "vel"

    def __post_init__(self):
        object.__setattr__(self, "scales", dict(self.scales))
        object.__setattr__(self, "term_class", dict(self.term_class))
        for name, gamma in self.scales.items():
            if gamma <= 0:
                raise InputError(f"scale {name!r} must be positive")
            if name not in self.term_class:
                raise InputError(f"term {name!r} has no class")
        for name, cls in self.term_class.items():
            if cls not in (TRACKING, INTERACTION):
                raise InputError(f"term {name!r} has unknown class {cls!r}")
        if self.term_class.get(self.gamma_vel_key) != TRACKING:
            raise InputError("gamma_vel_key must name a tracking term")


def proficiency(mean_vel_reward: float, state: CurriculumState) -> float:
    """Velocity-tracking proficiency s = mean(r_vel) / gamma_vel."""
    return float(mean_vel_reward) / state.scales[state.gamma_vel_key]


def gain(s: float) -> float:
    """Piecewise gain: 1 below proficiency 1, else 1/sqrt(s)."""
    if s < 0:
        raise InputError("proficiency must be >= 0")
    if s < 1.0:
        return 1.0
    return 1.0 / float(np.sqrt(s))


def update_scales(state: CurriculumState, s: float) -> CurriculumState:
    """One curriculum step; returns a new state (inputs untouched)."""
    alpha = gain(s)
    if alpha == 1.0:
        return CurriculumState(
            scales=state.scales, term_class=state.term_class, gamma_vel_key=state.gamma_vel_key
        )
    new_scales = {}
    for name, gamma in state.scales.items():
        factor = alpha if state.term_class[name] == TRACKING else 1.0 / alpha
        val = gamma * factor
        clipped = min(max(val, SCALE_FLOOR), SCALE_CEIL)
        if clipped != val:
            log.warning("curriculum scale %r clamped from %g to %g", name, val, clipped)
        new_scales[name] = clipped
    return CurriculumState(scales=new_scales, term_class=state.term_class, gamma_vel_key=state.gamma_vel_key)


def total_reward(
    breakdown: RewardBreakdown,
    state: CurriculumState,
    config: RewardConfig = RewardConfig(),
) -> float:
    """Scale-weighted total: goal, interaction, and net contact terms."""
    for v in (breakdown.r_goal, breakdown.r_int, breakdown.r_con, breakdown.p_con):
        if not np.isfinite(v):
            raise InputError("non-finite reward breakdown")
    return (
        state.scales["goal"] * breakdown.r_goal
        + state.scales["interaction"] * breakdown.r_int
        + state.scales["contact"] * contact_term(breakdown.r_con, breakdown.p_con, config)
    )
