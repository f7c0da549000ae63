"""End-to-end orchestration of the retargeting + reward pipeline.

Stages run sequentially and persist their artifacts as they complete, so
a failing stage leaves partial outputs plus the stage name behind.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .body import HumanMotion, forward_kinematics, joint_positions, pose_sequence
from .contacts import ContactSet, detect_posed_sequence, detect_sequence
from .errors import NoContactError, StageError
from .fixtures import (
    FixtureSpec,
    build_humanoid_template,
    build_robot_model,
    generate_fixture,
    robot_rest_pose,
)
from .metrics import contact_f1
from .retarget import build_reference_motion, project_contact_mask, retarget_sequence
from .rootopt import (
    RootOffset,
    apply_root_offset,
    centroid_objective,
    contact_centroids,
    mean_centroid_gap,
    optimize_root_offset,
)
from .serialize import (
    load_body_template,
    load_human_motion,
    load_robot_model,
    save_body_template,
    save_contact_set,
    save_human_motion,
    save_reference_motion,
    save_robot_model,
    save_root_offset,
    write_json,
)
from .shapefit import ShapeFitConfig, fit_shape

MANIFEST_FORMAT = "duomotion-run/1"


@dataclass(frozen=True)
class PipelineConfig:
    out_dir: str
    scenario: str | None = "handshake"
    frames: int = 24
    noise: float = 0.0
    template_path: str | None = None
    robot_path: str | None = None
    motion_a_path: str | None = None
    motion_b_path: str | None = None
    epsilon: float = 0.0
    redetect_epsilon: float | None = None
    lam: float = 0.0016
    root_mode: str = "full"
    composition: str = "rotational"
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "frames": self.frames,
            "noise": self.noise,
            "epsilon": self.epsilon,
            "redetect_epsilon": self.redetect_epsilon,
            "lambda": self.lam,
            "root_mode": self.root_mode,
            "composition": self.composition,
            "seed": self.seed,
        }


def canonical_rest_pose(robot) -> np.ndarray:
    """Robot rest angles used for shape fitting; falls back to zeros."""
    try:
        return robot_rest_pose(robot)
    except KeyError:
        return np.zeros(robot.num_dof)


def rest_robot_keypoints(template, robot) -> np.ndarray:
    """Robot keypoints at the canonical rest pose, pelvis on the template root."""
    root_t = template.rest_joints()[0]
    pos, _, _ = forward_kinematics(robot, canonical_rest_pose(robot), (root_t, np.zeros(3)))
    return pos[[r for _, r in robot.keypoint_map]]


def human_keypoint_sequence(template, robot, meshes) -> np.ndarray:
    """Per-frame human keypoints for the retarget IK, shape (T, K, 3)."""
    human_idx = [h for h, _ in robot.keypoint_map]
    return np.array([joint_positions(template, m)[human_idx] for m in meshes])


def run_pipeline(config: PipelineConfig) -> dict:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    timings: list = []
    result: dict = {}

    def stage(name):
        def deco(fn):
            t0 = time.perf_counter()
            try:
                fn()
            except Exception as exc:  # noqa: BLE001 - stage boundary
                raise StageError(name, str(exc)) from exc
            timings.append((name, time.perf_counter() - t0))

        return deco

    state: dict = {}

    @stage("load")
    def _load():
        state["template"] = (
            load_body_template(config.template_path) if config.template_path else build_humanoid_template()
        )
        state["robot"] = (
            load_robot_model(config.robot_path) if config.robot_path else build_robot_model(state["template"])
        )
        if config.motion_a_path and config.motion_b_path:
            state["motion_a"] = load_human_motion(config.motion_a_path)
            state["motion_b"] = load_human_motion(config.motion_b_path)
        else:
            spec = FixtureSpec(scenario=config.scenario, frames=config.frames, noise=config.noise)
            state["motion_a"], state["motion_b"] = generate_fixture(spec, seed=config.seed)
        save_body_template(out / "template.json", state["template"])
        save_robot_model(out / "robot.json", state["robot"])
        save_human_motion(out / "motion_a.json", state["motion_a"])
        save_human_motion(out / "motion_b.json", state["motion_b"])

    @stage("detect")
    def _detect():
        contacts = detect_sequence(state["template"], state["motion_a"], state["motion_b"], config.epsilon)
        state["contacts"] = contacts
        save_contact_set(out / "contacts.jsonl", contacts)
        result["contacts_total"] = contacts.total_pairs()

    @stage("shape")
    def _shape():
        template, robot = state["template"], state["robot"]
        fit = fit_shape(template, robot, rest_robot_keypoints(template, robot), ShapeFitConfig(lam=config.lam))
        state["beta_prime"] = fit.beta_prime
        write_json(
            out / "beta.json",
            {
                "beta_prime": fit.beta_prime,
                "final_loss": fit.final_loss,
                "keypoint_loss": fit.keypoint_loss,
                "reg_loss": fit.reg_loss,
                "iterations": fit.iterations,
                "converged": fit.converged,
            },
        )

    @stage("rootopt")
    def _rootopt():
        template = state["template"]
        motion_a, motion_b = state["motion_a"], state["motion_b"]
        beta_prime = state["beta_prime"]
        pairs = contact_centroids(template, beta_prime, motion_a, motion_b, state["contacts"])
        state["pairs"] = pairs
        pivots = template.rest_joints(beta_prime)[0] + motion_a.root_translation
        state["pivots"] = pivots
        if not pairs:
            offset = RootOffset(delta_p=np.zeros(3), delta_theta=np.zeros(3))
            initial = final = 0.0
        else:
            offset = optimize_root_offset(pairs, pivots, mode=config.root_mode)
            zero = RootOffset(delta_p=np.zeros(3), delta_theta=np.zeros(3))
            initial = centroid_objective(pairs, pivots, zero)
            final = centroid_objective(pairs, pivots, offset)
        state["offset"] = offset
        save_root_offset(out / "offset.json", offset, initial, final)

    @stage("retarget")
    def _retarget():
        template, robot = state["template"], state["robot"]
        beta_prime = state["beta_prime"]
        motion_a2 = apply_root_offset(state["motion_a"], state["offset"], composition=config.composition)
        state["motion_a2"] = motion_a2
        meshes_a = pose_sequence(template, motion_a2, beta_override=beta_prime)
        meshes_b = pose_sequence(template, state["motion_b"], beta_override=beta_prime)
        state["meshes_a2"] = meshes_a
        state["meshes_b"] = meshes_b
        masks = project_contact_mask(state["contacts"], template, robot)
        dt = motion_a2.dt
        for tag, meshes, mask in (("a", meshes_a, masks[:, :, 0]), ("b", meshes_b, masks[:, :, 1])):
            keypoints = human_keypoint_sequence(template, robot, meshes)
            solutions, flags = retarget_sequence(robot, keypoints, dt)
            ref = build_reference_motion(robot, solutions, mask, dt)
            save_reference_motion(out / f"ref{tag.upper()}.json", ref)
            result[f"retarget_{tag}_diverged_frames"] = int(flags.sum())
        state["ref_masks"] = masks

    @stage("report")
    def _report():
        template, robot = state["template"], state["robot"]
        beta_prime = state["beta_prime"]
        eps = config.epsilon if config.redetect_epsilon is None else config.redetect_epsilon
        meshes_a_pre = pose_sequence(template, state["motion_a"], beta_override=beta_prime)
        meshes_b = state["meshes_b"]
        pre = detect_posed_sequence(meshes_a_pre, meshes_b, eps)
        post = detect_posed_sequence(state["meshes_a2"], meshes_b, eps)
        ref_mask = state["ref_masks"]
        gap_pre = gap_post = 0.0
        if state["pairs"]:
            gap_pre = mean_centroid_gap(state["pairs"])
            moved = apply_root_offset(state["motion_a"], state["offset"], composition=config.composition)
            pairs_post = contact_centroids(template, beta_prime, moved, state["motion_b"], state["contacts"])
            gap_post = mean_centroid_gap(pairs_post)
        f1_pre = f1_post = 1.0
        if ref_mask.any():
            mask_pre = project_contact_mask(pre, template, robot)
            mask_post = project_contact_mask(post, template, robot)
            f1_pre = contact_f1(mask_pre.ravel(), ref_mask.ravel())
            f1_post = contact_f1(mask_post.ravel(), ref_mask.ravel())
        result.update(
            {
                "mean_gap_pre": gap_pre,
                "mean_gap_post": gap_post,
                "gap_reduction": gap_pre - gap_post,
                "f1_pre": f1_pre,
                "f1_post": f1_post,
                "offset": {
                    "delta_p": state["offset"].delta_p.tolist(),
                    "delta_theta": state["offset"].delta_theta.tolist(),
                },
            }
        )
        write_json(out / "report.json", result)
        lines = ["t,contacts_pre,contacts_post"]
        for t in range(pre.num_frames):
            lines.append(f"{t},{len(pre.per_frame[t])},{len(post.per_frame[t])}")
        (out / "report.csv").write_text("\n".join(lines) + "\n")

    write_json(
        out / "manifest.json",
        {
            "format": MANIFEST_FORMAT,
            "version": __version__,
            "seed": config.seed,
            "config": config.as_dict(),
            "stages": [name for name, _ in timings],
        },
    )
    # wall times are inherently nondeterministic, kept out of the canonical
    # artifact set
    (out / "timings.csv").write_text(
        "stage,seconds\n" + "\n".join(f"{n},{s:.6f}" for n, s in timings) + "\n"
    )
    return result
