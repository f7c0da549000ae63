"""Canonical file IO for every artifact the pipeline emits.

JSON is serialized with sorted keys, 17-significant-digit floats, and a
trailing newline so reruns are byte-identical.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .body import BodyTemplate, HumanMotion, RobotLink, RobotModel, forward_kinematics
from .contacts import ContactPair, ContactSet
from .errors import InputError
from .retarget import RobotReferenceMotion, derive_velocities
from .rootopt import RootOffset

BODY_FORMAT = "harmanoid-body/1"


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        f = float(value)
        if not np.isfinite(f):
            raise InputError("cannot serialize non-finite number")
        return f"{f:.17g}"
    if isinstance(value, str):
        return json.dumps(value)
    if value is None:
        return "null"
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_fmt(v) for v in value) + "]"
    if isinstance(value, dict):
        items = sorted(value.items(), key=lambda kv: kv[0])
        return "{" + ",".join(json.dumps(str(k)) + ":" + _fmt(v) for k, v in items) + "}"
    raise InputError(f"cannot serialize value of type {type(value).__name__}")


def canonical_dumps(obj) -> str:
    return _fmt(obj) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(canonical_dumps(obj))


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from exc


# -- body template ----------------------------------------------------------

def save_body_template(path, template: BodyTemplate) -> None:
    write_json(
        path,
        {
            "format": BODY_FORMAT,
            "vertices": template.vertices,
            "faces": template.faces,
            "blendshapes": template.blendshapes,
            "skin_weights": template.skin_weights,
            "joint_regressor": template.joint_regressor,
            "parents": template.parents,
        },
    )


def load_body_template(path) -> BodyTemplate:
    doc = read_json(path)
    if doc.get("format") != BODY_FORMAT:
        raise InputError(f"unsupported body template format: {doc.get('format')!r}")
    return BodyTemplate(
        vertices=np.array(doc["vertices"], dtype=float),
        faces=np.array(doc["faces"], dtype=np.int64),
        blendshapes=np.array(doc["blendshapes"], dtype=float),
        skin_weights=np.array(doc["skin_weights"], dtype=float),
        joint_regressor=np.array(doc["joint_regressor"], dtype=float),
        parents=np.array(doc["parents"], dtype=np.int64),
    )


# -- human motion -----------------------------------------------------------

def save_human_motion(path, motion: HumanMotion) -> None:
    write_json(
        path,
        {
            "beta": motion.beta,
            "dt": motion.dt,
            "theta": motion.theta,
            "root_t": motion.root_translation,
            "root_r": motion.root_rotation,
        },
    )


def load_human_motion(path) -> HumanMotion:
    doc = read_json(path)
    return HumanMotion(
        beta=np.array(doc["beta"], dtype=float),
        theta=np.array(doc["theta"], dtype=float),
        root_translation=np.array(doc["root_t"], dtype=float),
        root_rotation=np.array(doc["root_r"], dtype=float),
        dt=float(doc["dt"]),
    )


# -- robot model ------------------------------------------------------------

def save_robot_model(path, robot: RobotModel) -> None:
    write_json(
        path,
        {
            "links": [
                {
                    "name": l.name,
                    "parent": l.parent,
                    "offset": l.offset,
                    "axis": l.axis if l.axis is not None else None,
                }
                for l in robot.links
            ],
            "joint_limits": robot.joint_limits,
            "keypoint_map": [list(pair) for pair in robot.keypoint_map],
            "part_labels": robot.part_labels,
            "part_to_link": {str(k): v for k, v in robot.part_to_link.items()},
        },
    )


def load_robot_model(path) -> RobotModel:
    doc = read_json(path)
    links = tuple(
        RobotLink(
            name=l["name"],
            parent=int(l["parent"]),
            offset=np.array(l["offset"], dtype=float),
            axis=None if l["axis"] is None else np.array(l["axis"], dtype=float),
        )
        for l in doc["links"]
    )
    return RobotModel(
        links=links,
        joint_limits=np.array(doc["joint_limits"], dtype=float),
        keypoint_map=tuple((int(h), int(r)) for h, r in doc["keypoint_map"]),
        part_labels=np.array(doc["part_labels"], dtype=np.int64),
        part_to_link={int(k): int(v) for k, v in doc["part_to_link"].items()},
    )


# -- contact set (JSON lines) -----------------------------------------------

def save_contact_set(path, contacts: ContactSet) -> None:
    lines = []
    for t, frame_pairs in enumerate(contacts.per_frame):
        rec = {"t": t, "pairs": [[p.face_a, p.face_b, p.distance] for p in frame_pairs]}
        lines.append(_fmt(rec))
    Path(path).write_text("\n".join(lines) + "\n")


def load_contact_set(path, epsilon: float) -> ContactSet:
    per_frame = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec["t"] != len(per_frame):
            raise InputError("contact records out of order")
        per_frame.append(
            [ContactPair(int(fa), int(fb), float(d)) for fa, fb, d in rec["pairs"]]
        )
    return ContactSet(per_frame=per_frame, epsilon=epsilon)


# -- root offset ------------------------------------------------------------

def save_root_offset(path, offset: RootOffset, initial_objective: float, final_objective: float) -> None:
    write_json(
        path,
        {
            "delta_p": offset.delta_p,
            "delta_theta": offset.delta_theta,
            "initial_objective": initial_objective,
            "final_objective": final_objective,
        },
    )


def load_root_offset(path) -> RootOffset:
    doc = read_json(path)
    return RootOffset(
        delta_p=np.array(doc["delta_p"], dtype=float),
        delta_theta=np.array(doc["delta_theta"], dtype=float),
    )


# -- robot reference motion -------------------------------------------------

def save_reference_motion(path, ref: RobotReferenceMotion) -> None:
    write_json(
        path,
        {
            "dt": ref.dt,
            "theta_hat": ref.theta_hat,
            "root": {"t": ref.root_t, "r": ref.root_r},
            "contact_mask": ref.contact_mask,
        },
    )


def load_reference_motion(path, robot: RobotModel) -> RobotReferenceMotion:
    """Reload a reference motion; velocities are regenerated through FK."""
    doc = read_json(path)
    theta_hat = np.array(doc["theta_hat"], dtype=float)
    root_t = np.array(doc["root"]["t"], dtype=float)
    root_r = np.array(doc["root"]["r"], dtype=float)
    dt = float(doc["dt"])
    t_total = theta_hat.shape[0]
    p_hat = np.empty((t_total, robot.num_links, 3))
    quat_hat = np.empty((t_total, robot.num_links, 4))
    for t in range(t_total):
        pos, quat, _ = forward_kinematics(robot, theta_hat[t], (root_t[t], root_r[t]))
        p_hat[t] = pos
        quat_hat[t] = quat
    omega, v = derive_velocities(p_hat, quat_hat, dt)
    return RobotReferenceMotion(
        theta_hat=theta_hat,
        root_t=root_t,
        root_r=root_r,
        p_hat=p_hat,
        quat_hat=quat_hat,
        omega_hat=omega,
        v_hat=v,
        contact_mask=np.array(doc["contact_mask"], dtype=np.int64),
        dt=dt,
    )


def save_obj(path, vertices: np.ndarray, faces: np.ndarray) -> None:
    """Emit a mesh as OBJ for external viewing."""
    lines = [f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}" for v in np.asarray(vertices)]
    lines += [f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}" for f in np.asarray(faces)]
    Path(path).write_text("\n".join(lines) + "\n")
