"""Batch command line interface.

Exit codes: 0 success, 2 invalid input, 3 stage failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .body import forward_kinematics
from .contacts import detect_sequence
from .curriculum import CurriculumState, gain, proficiency, update_scales
from .errors import DuomotionError, InputError, StageError
from .fixtures import (
    FixtureSpec,
    build_humanoid_template,
    build_robot_model,
    generate_fixture,
)
from .metrics import SuccessConfig, evaluate
from .pipeline import PipelineConfig, rest_robot_keypoints, run_pipeline
from .rewards import RewardConfig, RolloutFrame, frame_breakdown
from .rootopt import (
    RootOffset,
    centroid_objective,
    contact_centroids,
    optimize_root_offset,
)
from .serialize import (
    load_body_template,
    load_contact_set,
    load_human_motion,
    load_reference_motion,
    load_robot_model,
    save_body_template,
    save_contact_set,
    save_human_motion,
    save_robot_model,
    save_root_offset,
    write_json,
)
from .shapefit import ShapeFitConfig, fit_shape

log = logging.getLogger("duomotion")


def _load_toml(path) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _cmd_gen_fixture(args) -> int:
    spec = FixtureSpec(scenario=args.scenario, frames=args.frames, noise=args.noise)
    motion_a, motion_b = generate_fixture(spec, seed=args.seed)
    save_human_motion(args.out_a, motion_a)
    save_human_motion(args.out_b, motion_b)
    if args.emit_assets:
        assets = Path(args.emit_assets)
        assets.mkdir(parents=True, exist_ok=True)
        template = build_humanoid_template()
        save_body_template(assets / "template.json", template)
        save_robot_model(assets / "robot.json", build_robot_model(template))
    return 0


def _cmd_detect_contacts(args) -> int:
    template = load_body_template(args.template)
    motion_a = load_human_motion(args.motion_a)
    motion_b = load_human_motion(args.motion_b)
    contacts = detect_sequence(template, motion_a, motion_b, args.epsilon)
    save_contact_set(args.out, contacts)
    log.info("detected %d contact pairs over %d frames", contacts.total_pairs(), contacts.num_frames)
    return 0


def _cmd_fit_shape(args) -> int:
    template = load_body_template(args.template)
    robot = load_robot_model(args.robot)
    if args.rest_pose:
        q = np.array(json.loads(Path(args.rest_pose).read_text()), dtype=float)
    else:
        from .pipeline import canonical_rest_pose

        q = canonical_rest_pose(robot)
    root_t = template.rest_joints()[0]
    pos, _, _ = forward_kinematics(robot, q, (root_t, np.zeros(3)))
    keypoints = pos[[r for _, r in robot.keypoint_map]]
    fit = fit_shape(template, robot, keypoints, ShapeFitConfig(lam=args.lam))
    write_json(
        args.out,
        {
            "beta_prime": fit.beta_prime,
            "final_loss": fit.final_loss,
            "keypoint_loss": fit.keypoint_loss,
            "reg_loss": fit.reg_loss,
            "iterations": fit.iterations,
            "converged": fit.converged,
        },
    )
    return 0


def _cmd_optimize_root(args) -> int:
    template = load_body_template(args.template)
    motion_a = load_human_motion(args.motion_a)
    motion_b = load_human_motion(args.motion_b)
    beta_prime = np.array(json.loads(Path(args.beta).read_text())["beta_prime"], dtype=float)
    contacts = load_contact_set(args.contacts, epsilon=args.epsilon)
    pairs = contact_centroids(template, beta_prime, motion_a, motion_b, contacts)
    pivots = template.rest_joints(beta_prime)[0] + motion_a.root_translation
    offset = optimize_root_offset(pairs, pivots, mode=args.mode)
    zero = RootOffset(delta_p=np.zeros(3), delta_theta=np.zeros(3))
    save_root_offset(
        args.out,
        offset,
        centroid_objective(pairs, pivots, zero),
        centroid_objective(pairs, pivots, offset),
    )
    return 0


def _cmd_retarget(args) -> int:
    config = PipelineConfig(
        out_dir=args.out_dir,
        template_path=args.template,
        robot_path=args.robot,
        motion_a_path=args.motion_a,
        motion_b_path=args.motion_b,
        epsilon=args.epsilon,
        lam=args.lam,
        seed=args.seed,
    )
    run_pipeline(config)
    return 0


def _reward_config(doc: dict) -> RewardConfig:
    known = {f for f in RewardConfig.__dataclass_fields__}
    bad = set(doc) - known
    if bad:
        raise InputError(f"unknown reward config keys: {sorted(bad)}")
    return RewardConfig(**doc)


def _cmd_rewards(args) -> int:
    config = _reward_config(_load_toml(args.config))
    lines = ["t,r_int,r_con,p_con,r_goal,total"]
    with open(args.rollout) as fh:
        for t, line in enumerate(fh):
            if not line.strip():
                continue
            rec = json.loads(line)
            frame = RolloutFrame(
                keypoints=np.array(rec["keypoints"], dtype=float),
                ref_keypoints=np.array(rec["ref_keypoints"], dtype=float),
                contact_forces=np.array(rec["contact_forces"], dtype=float),
                ref_contact_mask=np.array(rec["ref_contact_mask"]),
            )
            b = frame_breakdown(frame, config)
            lines.append(
                f"{t},{b.r_int:.17g},{b.r_con:.17g},{b.p_con:.17g},{b.r_goal:.17g},{b.total:.17g}"
            )
    Path(args.out).write_text("\n".join(lines) + "\n")
    return 0


def _cmd_curriculum_sim(args) -> int:
    doc = _load_toml(args.config)
    state = CurriculumState(**doc) if doc else CurriculumState()
    terms = sorted(state.scales)
    lines = ["step,s,alpha," + ",".join(f"gamma_{t}" for t in terms)]
    with open(args.proficiency_trace) as fh:
        step = 0
        for line in fh:
            token = line.strip().split(",")[0]
            if not token or token.lower() in ("mean_vel_reward", "s"):
                continue
            mean_vel = float(token)
            s = proficiency(mean_vel, state)
            state = update_scales(state, s)
            vals = ",".join(f"{state.scales[t]:.17g}" for t in terms)
            lines.append(f"{step},{s:.17g},{gain(s):.17g},{vals}")
            step += 1
    Path(args.out).write_text("\n".join(lines) + "\n")
    return 0


def _cmd_eval(args) -> int:
    robot = load_robot_model(args.robot)
    doc = _load_toml(args.config)
    success_config = SuccessConfig(**doc) if doc else SuccessConfig()
    pred_paths = args.pred.split(",")
    ref_paths = args.ref.split(",")
    if len(pred_paths) != len(ref_paths):
        raise InputError("--pred and --ref must list the same number of files")
    reports = []
    curves = ["agent,t,gmpjpe_mm"]
    for agent, (pp, rp) in enumerate(zip(pred_paths, ref_paths)):
        pred = load_reference_motion(pp, robot)
        ref = load_reference_motion(rp, robot)
        rep = evaluate(
            pred.p_hat, ref.p_hat, pred.quat_hat, ref.quat_hat,
            pred.contact_mask, ref.contact_mask, success_config,
        )
        reports.append(rep)
        per_frame = np.linalg.norm(pred.p_hat - ref.p_hat, axis=-1).mean(axis=1) * 1000.0
        curves.extend(f"{agent},{t},{v:.17g}" for t, v in enumerate(per_frame))
    mean = {
        "success": sum(r.success for r in reports) / len(reports),
        "e_gmpjpe": sum(r.e_gmpjpe for r in reports) / len(reports),
        "e_mpjpe": sum(r.e_mpjpe for r in reports) / len(reports),
        "e_acc": sum(r.e_acc for r in reports) / len(reports),
        "e_vel": sum(r.e_vel for r in reports) / len(reports),
        "contact_f1": sum(r.contact_f1 for r in reports) / len(reports),
    }
    write_json(args.out, {"per_agent": [vars(r) for r in reports], "mean": mean})
    if args.plot_data:
        Path(args.plot_data).write_text("\n".join(curves) + "\n")
    return 0


def _cmd_run(args) -> int:
    doc = _load_toml(args.config)
    doc.setdefault("out_dir", args.out_dir)
    doc.setdefault("seed", args.seed)
    if args.scenario:
        doc["scenario"] = args.scenario
    known = {f for f in PipelineConfig.__dataclass_fields__}
    bad = set(doc) - known
    if bad:
        raise InputError(f"unknown pipeline config keys: {sorted(bad)}")
    if doc.get("out_dir") is None:
        raise InputError("--out-dir (or out_dir in the config) is required")
    result = run_pipeline(PipelineConfig(**doc))
    log.info("pipeline done: %s", result)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="duomotion")
    parser.add_argument("--log-level", default="INFO")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-fixture", help="generate a synthetic two-agent motion pair")
    p.add_argument("--scenario", default="handshake")
    p.add_argument("--frames", type=int, default=30)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-a", required=True)
    p.add_argument("--out-b", required=True)
    p.add_argument("--emit-assets", default=None, help="also write template/robot JSON here")
    p.set_defaults(func=_cmd_gen_fixture)

    p = sub.add_parser("detect-contacts", help="per-frame mesh collision detection")
    p.add_argument("--template", required=True)
    p.add_argument("--motion-a", required=True)
    p.add_argument("--motion-b", required=True)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_detect_contacts)

    p = sub.add_parser("fit-shape", help="regularized shape fit to the robot")
    p.add_argument("--template", required=True)
    p.add_argument("--robot", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0016)
    p.add_argument("--rest-pose", default=None, help="JSON array of rest joint angles")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit_shape)

    p = sub.add_parser("optimize-root", help="contact-aware root offset")
    p.add_argument("--contacts", required=True)
    p.add_argument("--template", required=True)
    p.add_argument("--motion-a", required=True)
    p.add_argument("--motion-b", required=True)
    p.add_argument("--beta", required=True)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--mode", choices=["translation_only", "full"], default="full")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_optimize_root)

    p = sub.add_parser("retarget", help="full retarget stage (detect through references)")
    p.add_argument("--template", default=None)
    p.add_argument("--robot", default=None)
    p.add_argument("--motion-a", default=None)
    p.add_argument("--motion-b", default=None)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0016)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_retarget)

    p = sub.add_parser("rewards", help="per-frame reward breakdown over a rollout")
    p.add_argument("--rollout", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_rewards)

    p = sub.add_parser("curriculum-sim", help="replay a proficiency trace")
    p.add_argument("--proficiency-trace", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_curriculum_sim)

    p = sub.add_parser("eval", help="tracking/contact metrics between rollouts and references")
    p.add_argument("--pred", required=True, help="comma-separated reference-motion JSON files")
    p.add_argument("--ref", required=True)
    p.add_argument("--robot", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--plot-data", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("run", help="run the whole pipeline")
    p.add_argument("--config", default=None)
    p.add_argument("--scenario", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=_cmd_run)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.INFO))
    try:
        return args.func(args)
    except StageError as exc:
        log.error("%s", exc)
        return 3
    except (DuomotionError, FileNotFoundError, json.JSONDecodeError, TypeError, ValueError) as exc:
        log.error("invalid input: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
