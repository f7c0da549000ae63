"""Parametric skinned body model and generic robot kinematic chain.

The body side is a template mesh deformed by linear shape blendshapes and
posed with linear blend skinning over an axis-angle joint tree.  The robot
side is an ordered link tree with one optional revolute joint per link,
used for retargeting targets and metric evaluation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .rotations import aa_to_matrix, matrix_to_aa


@dataclass(frozen=True)
class BodyTemplate:
    """Rest-pose mesh plus the linear maps that animate it.

    vertices: (V, 3) meters.
    faces: (F, 3) vertex indices.
    blendshapes: (V, 3, B) meters per unit shape coefficient.
    skin_weights: (V, J), rows sum to 1.
    joint_regressor: (J, V), joints = regressor @ vertices.
    parents: (J,), parent joint index, -1 for the single root.
    """

    vertices: np.ndarray
    faces: np.ndarray
    blendshapes: np.ndarray
    skin_weights: np.ndarray
    joint_regressor: np.ndarray
    parents: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        f = np.asarray(self.faces, dtype=np.int64)
        bs = np.asarray(self.blendshapes, dtype=float)
        w = np.asarray(self.skin_weights, dtype=float)
        jr = np.asarray(self.joint_regressor, dtype=float)
        par = np.asarray(self.parents, dtype=np.int64)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        object.__setattr__(self, "blendshapes", bs)
        object.__setattr__(self, "skin_weights", w)
        object.__setattr__(self, "joint_regressor", jr)
        object.__setattr__(self, "parents", par)
        V = v.shape[0]
        J = par.shape[0]
        if v.ndim != 2 or v.shape[1] != 3:
            raise InputError("vertices must be (V, 3)")
        if f.ndim != 2 or f.shape[1] != 3:
            raise InputError("faces must be (F, 3)")
        if f.size and (f.min() < 0 or f.max() >= V):
            raise InputError("face index out of range")
        if bs.shape[:2] != (V, 3) or bs.ndim != 3 or bs.shape[2] < 1:
            raise InputError("blendshapes must be (V, 3, B) with B >= 1")
        if w.shape != (V, J):
            raise InputError("skin_weights must be (V, J)")
        if not np.allclose(w.sum(axis=1), 1.0, atol=1e-6):
            raise InputError("skin weight rows must sum to 1")
        if jr.shape != (J, V):
            raise InputError("joint_regressor must be (J, V)")
        if J < 2:
            raise InputError("need at least 2 joints")
        roots = np.nonzero(par < 0)[0]
        if len(roots) != 1 or roots[0] != 0:
            raise InputError("exactly one root joint expected at index 0")
        if np.any(par[1:] >= np.arange(1, J)):
            raise InputError("parents must precede children (acyclic ordering)")

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_joints(self) -> int:
        return self.parents.shape[0]

    @property
    def num_shapes(self) -> int:
        return self.blendshapes.shape[2]

    def shaped_vertices(self, beta: np.ndarray) -> np.ndarray:
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (self.num_shapes,):
            raise InputError(f"beta must have shape ({self.num_shapes},)")
        return self.vertices + self.blendshapes @ beta

    def rest_joints(self, beta: np.ndarray | None = None) -> np.ndarray:
        verts = self.vertices if beta is None else self.shaped_vertices(beta)
        return self.joint_regressor @ verts


@dataclass(frozen=True)
class HumanMotion:
    """Shape coefficients plus a per-frame axis-angle pose track."""

    beta: np.ndarray          # (B,)
    theta: np.ndarray         # (T, J_body, 3) radians
    root_translation: np.ndarray  # (T, 3) meters
    root_rotation: np.ndarray     # (T, 3) axis-angle
    dt: float

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        theta = np.asarray(self.theta, dtype=float)
        rt = np.asarray(self.root_translation, dtype=float)
        rr = np.asarray(self.root_rotation, dtype=float)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "root_translation", rt)
        object.__setattr__(self, "root_rotation", rr)
        if theta.ndim != 3 or theta.shape[2] != 3:
            raise InputError("theta must be (T, J_body, 3)")
        T = theta.shape[0]
        if T < 1:
            raise InputError("need at least one frame")
        if rt.shape != (T, 3) or rr.shape != (T, 3):
            raise InputError("root tracks must be (T, 3)")
        if self.dt <= 0:
            raise InputError("dt must be positive")
        if not (np.isfinite(theta).all() and np.isfinite(rt).all() and np.isfinite(rr).all()):
            raise InputError("non-finite motion data")

    @property
    def num_frames(self) -> int:
        return self.theta.shape[0]


@dataclass(frozen=True)
class PosedMesh:
    vertices: np.ndarray  # (V, 3)
    faces: np.ndarray     # shared topology

    def __post_init__(self):
        if not np.isfinite(self.vertices).all():
            raise InputError("posed mesh has non-finite coordinates")


@dataclass(frozen=True)
class RobotLink:
    """One link of the robot tree.

    axis is the revolute joint axis in the parent frame; None means the
    link is rigidly attached (no DOF).  The root link has parent -1 and no
    axis; its pose comes from the free root pose.
    """

    name: str
    parent: int
    offset: np.ndarray  # (3,) in parent frame
    axis: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float))
        if self.axis is not None:
            ax = np.asarray(self.axis, dtype=float)
            n = np.linalg.norm(ax)
            if n == 0:
                raise InputError(f"link {self.name}: zero joint axis")
            object.__setattr__(self, "axis", ax / n)


@dataclass(frozen=True)
class RobotModel:
    """Link tree, per-DOF limits, and body-part correspondence tables."""

    links: tuple
    joint_limits: np.ndarray           # (DOF, 2) radians
    keypoint_map: tuple                # ((human_joint, robot_link), ...)
    part_labels: np.ndarray            # (V,) part index per template vertex
    part_to_link: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "joint_limits", np.asarray(self.joint_limits, dtype=float))
        object.__setattr__(self, "keypoint_map", tuple((int(h), int(r)) for h, r in self.keypoint_map))
        object.__setattr__(self, "part_labels", np.asarray(self.part_labels, dtype=np.int64))
        object.__setattr__(self, "part_to_link", dict(self.part_to_link))
        if self.links[0].parent != -1 or self.links[0].axis is not None:
            raise InputError("link 0 must be the free root")
        for i, link in enumerate(self.links[1:], start=1):
            if not (0 <= link.parent < i):
                raise InputError(f"link {link.name}: parent must precede it")
        dof = sum(1 for l in self.links if l.axis is not None)
        if self.joint_limits.shape != (dof, 2):
            raise InputError("joint_limits must be (DOF, 2)")
        L = len(self.links)
        for h, r in self.keypoint_map:
            if not 0 <= r < L:
                raise InputError(f"keypoint_map robot link {r} out of range")

    @property
    def num_links(self) -> int:
        return len(self.links)

    @property
    def num_dof(self) -> int:
        return self.joint_limits.shape[0]

    def dof_index(self) -> list:
        """Per-link DOF index, -1 for root/fixed links."""
        out = []
        k = 0
        for link in self.links:
            if link.axis is None:
                out.append(-1)
            else:
                out.append(k)
                k += 1
        return out


def pose_body(
    template: BodyTemplate,
    beta: np.ndarray,
    theta_frame: np.ndarray,
    root_t: np.ndarray,
    root_r: np.ndarray,
) -> PosedMesh:
    """Shape, pose, and globally place the template mesh.

    Linear blend skinning over joint transforms from forward kinematics;
    the root rotation pivots at the rest root joint, then root_t is added.
    """
    theta_frame = np.asarray(theta_frame, dtype=float)
    root_t = np.asarray(root_t, dtype=float)
    root_r = np.asarray(root_r, dtype=float)
    J = template.num_joints
    if theta_frame.shape != (J - 1, 3):
        raise InputError(f"theta_frame must be ({J - 1}, 3)")
    if root_t.shape != (3,) or root_r.shape != (3,):
        raise InputError("root pose components must be (3,)")

    shaped = template.shaped_vertices(beta)
    rest = template.joint_regressor @ shaped

    local = np.empty((J, 3, 3))
    local[0] = aa_to_matrix(root_r)
    if J > 1:
        local[1:] = aa_to_matrix(theta_frame)

    g_rot = np.empty((J, 3, 3))
    g_pos = np.empty((J, 3))
    g_rot[0] = local[0]
    g_pos[0] = rest[0]
    for j in range(1, J):
        p = template.parents[j]
        g_rot[j] = g_rot[p] @ local[j]
        g_pos[j] = g_pos[p] + g_rot[p] @ (rest[j] - rest[p])

    # v' = sum_j w_j (G_j (v - rest_j) + pos_j) + root_t
    posed = np.zeros_like(shaped)
    w = template.skin_weights
    for j in range(J):
        col = w[:, j]
        if not col.any():
            continue
        posed += col[:, None] * ((shaped - rest[j]) @ g_rot[j].T + g_pos[j])
    posed = posed + root_t
    return PosedMesh(vertices=posed, faces=template.faces)


def pose_sequence(template: BodyTemplate, motion: HumanMotion, beta_override: np.ndarray | None = None) -> list:
    """Pose every frame of a motion; optionally substitute the shape."""
    beta = motion.beta if beta_override is None else np.asarray(beta_override, dtype=float)
    return [
        pose_body(template, beta, motion.theta[t], motion.root_translation[t], motion.root_rotation[t])
        for t in range(motion.num_frames)
    ]


def joint_positions(template: BodyTemplate, posed: PosedMesh) -> np.ndarray:
    """Regress joint locations from a posed mesh."""
    if posed.vertices.shape[0] != template.num_vertices:
        raise InputError("posed mesh does not match template")
    return template.joint_regressor @ posed.vertices


def root_joint_position(template: BodyTemplate, beta: np.ndarray, root_t: np.ndarray) -> np.ndarray:
    """World position of the root joint for a posed body.

    The root rotation pivots at the rest root joint, so the world root is
    simply rest_root(beta) + root_t.
    """
    return template.rest_joints(beta)[0] + np.asarray(root_t, dtype=float)


def _rodrigues(axis: np.ndarray, angle: float) -> np.ndarray:
    # unit axis assumed; cheaper than a scipy round-trip in the IK loop
    x, y, z = axis
    c = np.cos(angle)
    s = np.sin(angle)
    t = 1.0 - c
    return np.array(
        [
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ]
    )


def forward_kinematics(
    robot: RobotModel,
    joint_angles: np.ndarray,
    root_pose: tuple,
) -> tuple:
    """Positions and orientations of every link.

    Returns (positions (L, 3), quaternions (L, 4) scalar-last, clamped)
    where clamped reports whether any input angle was outside its limits.
    Out-of-limit angles are clamped, not rejected.
    """
    q = np.asarray(joint_angles, dtype=float)
    if q.shape != (robot.num_dof,):
        raise InputError(f"joint_angles must be ({robot.num_dof},)")
    root_t = np.asarray(root_pose[0], dtype=float)
    root_r = np.asarray(root_pose[1], dtype=float)
    lo, hi = robot.joint_limits[:, 0], robot.joint_limits[:, 1]
    clamped_q = np.clip(q, lo, hi)
    was_clamped = bool(np.any(clamped_q != q))

    L = robot.num_links
    pos = np.empty((L, 3))
    rot = np.empty((L, 3, 3))
    pos[0] = root_t
    rot[0] = aa_to_matrix(root_r)
    dof_idx = robot.dof_index()
    for i in range(1, L):
        link = robot.links[i]
        p = link.parent
        pos[i] = pos[p] + rot[p] @ link.offset
        if link.axis is None:
            rot[i] = rot[p]
        else:
            ang = clamped_q[dof_idx[i]]
            rot[i] = rot[p] @ _rodrigues(link.axis, ang)
    quats = _matrices_to_quats(rot)
    return pos, quats, was_clamped


def _matrices_to_quats(mats: np.ndarray) -> np.ndarray:
    from scipy.spatial.transform import Rotation

    return Rotation.from_matrix(mats).as_quat()


def link_positions(robot: RobotModel, joint_angles: np.ndarray, root_pose: tuple) -> np.ndarray:
    """Positions-only FK fast path for optimizer inner loops (clamps too)."""
    q = np.clip(np.asarray(joint_angles, dtype=float), robot.joint_limits[:, 0], robot.joint_limits[:, 1])
    L = robot.num_links
    pos = np.empty((L, 3))
    rot = np.empty((L, 3, 3))
    pos[0] = np.asarray(root_pose[0], dtype=float)
    rot[0] = aa_to_matrix(np.asarray(root_pose[1], dtype=float))
    dof_idx = robot.dof_index()
    for i in range(1, L):
        link = robot.links[i]
        p = link.parent
        pos[i] = pos[p] + rot[p] @ link.offset
        rot[i] = rot[p] if link.axis is None else rot[p] @ _rodrigues(link.axis, q[dof_idx[i]])
    return pos


def link_positions_batch(robot: RobotModel, packed: np.ndarray) -> np.ndarray:
    """Positions-only FK for a batch of packed [root_t, root_r, q] vectors.

    packed has shape (N, 6 + DOF); returns (N, L, 3).  Matches
    link_positions frame by frame, including joint-limit clamping.
    """
    from scipy.spatial.transform import Rotation

    packed = np.asarray(packed, dtype=float)
    n = packed.shape[0]
    q = np.clip(packed[:, 6:], robot.joint_limits[:, 0], robot.joint_limits[:, 1])
    L = robot.num_links
    pos = np.empty((n, L, 3))
    rot = np.empty((n, L, 3, 3))
    pos[:, 0] = packed[:, :3]
    rot[:, 0] = Rotation.from_rotvec(packed[:, 3:6]).as_matrix()
    dof_idx = robot.dof_index()
    for i in range(1, L):
        link = robot.links[i]
        p = link.parent
        pos[:, i] = pos[:, p] + rot[:, p] @ link.offset
        if link.axis is None:
            rot[:, i] = rot[:, p]
        else:
            ang = q[:, dof_idx[i]]
            rot[:, i] = rot[:, p] @ _rodrigues_batch(link.axis, ang)
    return pos


def _rodrigues_batch(axis: np.ndarray, angles: np.ndarray) -> np.ndarray:
    x, y, z = axis
    c = np.cos(angles)
    s = np.sin(angles)
    t = 1.0 - c
    out = np.empty((angles.size, 3, 3))
    out[:, 0, 0] = t * x * x + c
    out[:, 0, 1] = t * x * y - s * z
    out[:, 0, 2] = t * x * z + s * y
    out[:, 1, 0] = t * x * y + s * z
    out[:, 1, 1] = t * y * y + c
    out[:, 1, 2] = t * y * z - s * x
    out[:, 2, 0] = t * x * z - s * y
    out[:, 2, 1] = t * y * z + s * x
    out[:, 2, 2] = t * z * z + c
    return out


def rest_link_positions(robot: RobotModel) -> np.ndarray:
    """Link positions at zero angles and identity root."""
    pos, _, _ = forward_kinematics(robot, np.zeros(robot.num_dof), (np.zeros(3), np.zeros(3)))
    return pos
