"""Synthetic fixtures: low-poly humanoid, robot description, scenarios.

Everything here is procedurally generated and deterministic, standing in
for licensed body-model assets and motion-capture data so the whole test
suite is self-contained.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .body import BodyTemplate, HumanMotion, PosedMesh, RobotLink, RobotModel
from .errors import InputError

# joint indices of the synthetic humanoid
PELVIS, SPINE, CHEST, NECK, HEAD = 0, 1, 2, 3, 4
L_SHOULDER, L_ELBOW, L_WRIST = 5, 6, 7
R_SHOULDER, R_ELBOW, R_WRIST = 8, 9, 10
L_HIP, L_KNEE, L_ANKLE = 11, 12, 13
R_HIP, R_KNEE, R_ANKLE = 14, 15, 16
NUM_JOINTS = 17

_JOINT_POS = {
    PELVIS: (0.0, 0.0, 0.9),
    SPINE: (0.0, 0.0, 1.05),
    CHEST: (0.0, 0.0, 1.25),
    NECK: (0.0, 0.0, 1.45),
    HEAD: (0.0, 0.0, 1.6),
    L_SHOULDER: (0.0, 0.2, 1.4),
    L_ELBOW: (0.0, 0.45, 1.4),
    L_WRIST: (0.0, 0.7, 1.4),
    R_SHOULDER: (0.0, -0.2, 1.4),
    R_ELBOW: (0.0, -0.45, 1.4),
    R_WRIST: (0.0, -0.7, 1.4),
    L_HIP: (0.0, 0.1, 0.85),
    L_KNEE: (0.0, 0.1, 0.45),
    L_ANKLE: (0.0, 0.1, 0.05),
    R_HIP: (0.0, -0.1, 0.85),
    R_KNEE: (0.0, -0.1, 0.45),
    R_ANKLE: (0.0, -0.1, 0.05),
}

_PARENTS = np.array([-1, 0, 1, 2, 3, 2, 5, 6, 2, 8, 9, 0, 11, 12, 0, 14, 15])

# bones: (proximal joint, distal joint, half width); skinned to the proximal joint
_BONES = [
    (PELVIS, SPINE, 0.11),
    (SPINE, CHEST, 0.12),
    (CHEST, NECK, 0.06),
    (NECK, HEAD, 0.05),
    (CHEST, L_SHOULDER, 0.05),
    (L_SHOULDER, L_ELBOW, 0.055),
    (L_ELBOW, L_WRIST, 0.05),
    (CHEST, R_SHOULDER, 0.05),
    (R_SHOULDER, R_ELBOW, 0.055),
    (R_ELBOW, R_WRIST, 0.05),
    (PELVIS, L_HIP, 0.06),
    (L_HIP, L_KNEE, 0.07),
    (L_KNEE, L_ANKLE, 0.06),
    (PELVIS, R_HIP, 0.06),
    (R_HIP, R_KNEE, 0.07),
    (R_KNEE, R_ANKLE, 0.06),
]

# extremity boxes: (anchor joint, direction, length, half width); skinned to the anchor
_EXTREMITIES = [
    (HEAD, (0.0, 0.0, 1.0), 0.16, 0.09),
    (L_WRIST, (0.0, 1.0, 0.0), 0.15, 0.06),
    (R_WRIST, (0.0, -1.0, 0.0), 0.15, 0.06),
    (L_ANKLE, (0.3, 0.0, -0.8), 0.12, 0.05),
    (R_ANKLE, (0.3, 0.0, -0.8), 0.12, 0.05),
]

_BOX_FACES = np.array(
    [
        (0, 1, 5), (0, 5, 4), (1, 2, 6), (1, 6, 5),
        (2, 3, 7), (2, 7, 6), (3, 0, 4), (3, 4, 7),
        (0, 2, 1), (0, 3, 2), (4, 5, 6), (4, 6, 7),
    ]
)


def _perpendiculars(axis: np.ndarray) -> tuple:
    ref = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    n1 = np.cross(axis, ref)
    n1 /= np.linalg.norm(n1)
    n2 = np.cross(axis, n1)
    return n1, n2


def _segment_box(a: np.ndarray, b: np.ndarray, hw: float) -> np.ndarray:
    axis = b - a
    axis = axis / np.linalg.norm(axis)
    n1, n2 = _perpendiculars(axis)
    ring = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
    return np.array(
        [a + hw * (s1 * n1 + s2 * n2) for s1, s2 in ring]
        + [b + hw * (s1 * n1 + s2 * n2) for s1, s2 in ring]
    )


def build_humanoid_template() -> BodyTemplate:
    """Low-poly box humanoid in a T-pose, z-up, facing +x."""
    joints = np.array([_JOINT_POS[j] for j in range(NUM_JOINTS)])
    verts = []
    faces = []
    weight_joint = []
    distal_ring = {}  # distal joint -> 4 vertex indices at its box end

    def add_box(corners: np.ndarray, joint: int, distal_of: int | None):
        start = sum(len(v) for v in verts)
        verts.append(corners)
        faces.append(_BOX_FACES + start)
        weight_joint.extend([joint] * 8)
        if distal_of is not None:
            distal_ring[distal_of] = [start + 4, start + 5, start + 6, start + 7]
        return start

    proximal_ring = {}
    for p, c, hw in _BONES:
        start = add_box(_segment_box(joints[p], joints[c], hw), p, c)
        proximal_ring[c] = [start, start + 1, start + 2, start + 3]
    for j, direction, length, hw in _EXTREMITIES:
        d = np.asarray(direction, dtype=float)
        d /= np.linalg.norm(d)
        add_box(_segment_box(joints[j], joints[j] + length * d, hw), j, None)

    vertices = np.concatenate(verts)
    face_arr = np.concatenate(faces)
    nv = vertices.shape[0]

    weights = np.zeros((nv, NUM_JOINTS))
    weights[np.arange(nv), weight_joint] = 1.0

    regressor = np.zeros((NUM_JOINTS, nv))
    # root from the proximal ring of the pelvis->spine bone; the box rings
    # are centered on the joints so their mean is the joint exactly
    root_box = proximal_ring[SPINE]
    regressor[PELVIS, root_box] = 0.25
    for c, idx in distal_ring.items():
        regressor[c, idx] = 0.25

    # blendshape 0: uniform scale about the pelvis joint
    bs0 = 0.1 * (vertices - joints[PELVIS])
    # blendshape 1: arm stretch along +-y beyond the shoulders
    bs1 = np.zeros_like(vertices)
    y = vertices[:, 1]
    bs1[:, 1] = np.where(y > 0.2, 0.3 * (y - 0.2), np.where(y < -0.2, 0.3 * (y + 0.2), 0.0))
    blendshapes = np.stack([bs0, bs1], axis=2)

    return BodyTemplate(
        vertices=vertices,
        faces=face_arr,
        blendshapes=blendshapes,
        skin_weights=weights,
        joint_regressor=regressor,
        parents=_PARENTS,
    )


# -- robot -------------------------------------------------------------------

_X = np.array([1.0, 0.0, 0.0])
_Y = np.array([0.0, 1.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])


def build_robot_model(template: BodyTemplate) -> RobotModel:
    """19-DOF humanoid link tree with proportions unlike the human fixture."""
    links = [RobotLink("pelvis", -1, np.zeros(3))]

    def leg(side: str, sign: float, parent: int):
        links.append(RobotLink(f"{side}_hip_yaw", parent, np.array([0.0, sign * 0.09, -0.05]), _Z))
        links.append(RobotLink(f"{side}_hip_roll", len(links) - 1, np.zeros(3), _X))
        links.append(RobotLink(f"{side}_hip_pitch", len(links) - 1, np.zeros(3), _Y))
        links.append(RobotLink(f"{side}_knee", len(links) - 1, np.array([0.0, 0.0, -0.35]), _Y))
        links.append(RobotLink(f"{side}_ankle", len(links) - 1, np.array([0.0, 0.0, -0.35]), _Y))

    leg("left", 1.0, 0)
    leg("right", -1.0, 0)
    links.append(RobotLink("torso", 0, np.array([0.0, 0.0, 0.12]), _Z))
    torso = len(links) - 1

    def arm(side: str, sign: float):
        links.append(RobotLink(f"{side}_shoulder_pitch", torso, np.array([0.0, sign * 0.17, 0.33]), _Y))
        links.append(RobotLink(f"{side}_shoulder_roll", len(links) - 1, np.zeros(3), _X))
        links.append(RobotLink(f"{side}_shoulder_yaw", len(links) - 1, np.zeros(3), _Z))
        links.append(RobotLink(f"{side}_elbow", len(links) - 1, np.array([0.0, 0.0, -0.2]), _Y))
        links.append(RobotLink(f"{side}_wrist", len(links) - 1, np.array([0.0, 0.0, -0.19]), None))

    arm("left", 1.0)
    arm("right", -1.0)
    links.append(RobotLink("head", torso, np.array([0.0, 0.0, 0.55]), None))

    dof = sum(1 for l in links if l.axis is not None)
    limits = np.tile(np.array([-3.0, 3.0]), (dof, 1))

    keypoint_map = (
        (PELVIS, 0),
        (HEAD, 22),
        (L_SHOULDER, 12), (L_ELBOW, 15), (L_WRIST, 16),
        (R_SHOULDER, 17), (R_ELBOW, 20), (R_WRIST, 21),
        (L_HIP, 3), (L_KNEE, 4), (L_ANKLE, 5),
        (R_HIP, 8), (R_KNEE, 9), (R_ANKLE, 10),
    )
    part_labels = np.argmax(template.skin_weights, axis=1)
    part_to_link = {
        PELVIS: 0, SPINE: 11, CHEST: 11, NECK: 22, HEAD: 22,
        L_SHOULDER: 14, L_ELBOW: 15, L_WRIST: 16,
        R_SHOULDER: 19, R_ELBOW: 20, R_WRIST: 21,
        L_HIP: 3, L_KNEE: 4, L_ANKLE: 5,
        R_HIP: 8, R_KNEE: 9, R_ANKLE: 10,
    }
    return RobotModel(
        links=tuple(links),
        joint_limits=limits,
        keypoint_map=keypoint_map,
        part_labels=part_labels,
        part_to_link=part_to_link,
    )


def robot_rest_pose(robot: RobotModel) -> np.ndarray:
    """Canonical rest angles: arms lifted sideways to mirror the T-pose."""
    q = np.zeros(robot.num_dof)
    dof_idx = robot.dof_index()
    names = {l.name: i for i, l in enumerate(robot.links)}
    q[dof_idx[names["left_shoulder_roll"]]] = np.pi / 2
    q[dof_idx[names["right_shoulder_roll"]]] = -np.pi / 2
    return q


# -- scenario motions --------------------------------------------------------

SCENARIOS = ("handshake", "shoulder_to_shoulder", "linked_arms", "hug", "separated")


@dataclass(frozen=True)
class FixtureSpec:
    scenario: str
    frames: int = 30
    noise: float = 0.0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise InputError(f"unknown scenario {self.scenario!r}")
        if self.frames < 2:
            raise InputError("need at least 2 frames")
        if self.noise < 0:
            raise InputError("noise must be >= 0")


_ARM_DOWN_L = (-np.pi / 2, 0.0, 0.0)
_ARM_DOWN_R = (np.pi / 2, 0.0, 0.0)
_DT = 1.0 / 30.0


def _approach_profile(frames: int, far: float, close: float) -> np.ndarray:
    """far outside the middle third, close inside, 2-frame linear ramps."""
    t1 = frames // 3
    t2 = (2 * frames) // 3
    d = np.full(frames, far)
    for t in range(frames):
        if t1 <= t <= t2:
            d[t] = close
        elif t1 - 2 <= t < t1:
            frac = (t - (t1 - 2)) / 2.0
            d[t] = far + frac * (close - far)
        elif t2 < t <= t2 + 2:
            frac = (t - t2) / 2.0
            d[t] = close + frac * (far - close)
    return d


def generate_fixture(spec: FixtureSpec, seed: int = 0) -> tuple:
    """Deterministic two-agent motions with the scenario's contact pattern."""
    rng = np.random.default_rng(seed)
    frames = spec.frames
    n_body = NUM_JOINTS - 1

    theta_a = np.zeros((frames, n_body, 3))
    theta_b = np.zeros((frames, n_body, 3))
    root_ta = np.zeros((frames, 3))
    root_tb = np.zeros((frames, 3))
    root_ra = np.zeros((frames, 3))
    root_rb = np.zeros((frames, 3))

    def arms_down(theta):
        theta[:, L_SHOULDER - 1] = _ARM_DOWN_L
        theta[:, R_SHOULDER - 1] = _ARM_DOWN_R

    if spec.scenario == "handshake":
        arms_down(theta_a)
        arms_down(theta_b)
        # right arms forward with a slight inward aim so the hands meet
        theta_a[:, R_SHOULDER - 1] = (0.0, 0.0, np.pi / 2 + 0.42)
        theta_b[:, R_SHOULDER - 1] = (0.0, 0.0, np.pi / 2 + 0.42)
        root_rb[:, 2] = np.pi  # agent B faces agent A
        root_tb[:, 0] = _approach_profile(frames, 5.0, 1.05)
    elif spec.scenario == "hug":
        theta_a[:, L_SHOULDER - 1] = (0.0, 0.0, -np.pi / 2)
        theta_a[:, R_SHOULDER - 1] = (0.0, 0.0, np.pi / 2)
        theta_b[:, L_SHOULDER - 1] = (0.0, 0.0, -np.pi / 2)
        theta_b[:, R_SHOULDER - 1] = (0.0, 0.0, np.pi / 2)
        root_rb[:, 2] = np.pi
        root_tb[:, 0] = _approach_profile(frames, 5.0, 0.7)
    elif spec.scenario == "shoulder_to_shoulder":
        arms_down(theta_a)
        arms_down(theta_b)
        root_tb[:, 1] = _approach_profile(frames, 5.0, 0.46)
    elif spec.scenario == "linked_arms":
        # A's left and B's right arm stay out (T-pose); the others hang
        theta_a[:, R_SHOULDER - 1] = _ARM_DOWN_R
        theta_b[:, L_SHOULDER - 1] = _ARM_DOWN_L
        root_tb[:, 1] = _approach_profile(frames, 5.0, 1.45)
    else:  # separated
        arms_down(theta_a)
        arms_down(theta_b)
        root_tb[:, 0] = 5.0

    if spec.noise > 0:
        theta_a = theta_a + rng.normal(0.0, spec.noise, theta_a.shape)
        theta_b = theta_b + rng.normal(0.0, spec.noise, theta_b.shape)

    beta = np.zeros(2)
    motion_a = HumanMotion(beta=beta, theta=theta_a, root_translation=root_ta, root_rotation=root_ra, dt=_DT)
    motion_b = HumanMotion(beta=beta, theta=theta_b, root_translation=root_tb, root_rotation=root_rb, dt=_DT)
    return motion_a, motion_b


def random_triangle_soup(rng: np.random.Generator, n_faces: int, center, spread: float = 0.5, size: float = 0.1) -> PosedMesh:
    """A cloud of random triangles, for collision-oracle stress tests."""
    centers = np.asarray(center, dtype=float) + rng.uniform(-spread, spread, (n_faces, 3))
    offsets = rng.uniform(-size, size, (n_faces, 3, 3))
    verts = (centers[:, None, :] + offsets).reshape(-1, 3)
    faces = np.arange(3 * n_faces).reshape(-1, 3)
    return PosedMesh(vertices=verts, faces=faces)
