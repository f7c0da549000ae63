"""Mesh-mesh contact detection between two posed bodies.

A median-split AABB tree prunes face pairs; surviving candidates go
through the exact triangle-triangle distance.  The brute-force path keeps
the same filter semantics and exists as the correctness oracle.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .body import BodyTemplate, HumanMotion, PosedMesh, pose_sequence
from .errors import InputError
from .trigeom import aabb_pair_distance, tri_tri_distance_batch

LEAF_SIZE = 4


@dataclass(frozen=True)
class ContactPair:
    face_a: int
    face_b: int
    distance: float


@dataclass(frozen=True)
class ContactSet:
    """Per-frame colliding face pairs for a two-body sequence."""

    per_frame: tuple          # tuple over t of tuple[ContactPair]
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "per_frame", tuple(tuple(fr) for fr in self.per_frame))

    @property
    def num_frames(self) -> int:
        return len(self.per_frame)

    def total_pairs(self) -> int:
        return sum(len(fr) for fr in self.per_frame)


@dataclass
class _Node:
    lo: np.ndarray
    hi: np.ndarray
    left: int = -1
    right: int = -1
    faces: np.ndarray | None = None  # leaf face indices


@dataclass
class Bvh:
    nodes: list
    degenerate_faces: list = field(default_factory=list)
    triangles: np.ndarray | None = None  # (F, 3, 3)


def _face_triangles(mesh: PosedMesh) -> np.ndarray:
    return mesh.vertices[mesh.faces]


def build_bvh(mesh: PosedMesh) -> Bvh:
    """Median-split AABB tree over face centroids, leaf size 4."""
    tris = _face_triangles(mesh)
    if tris.shape[0] < 1:
        raise InputError("mesh has no faces")
    lo = tris.min(axis=1)
    hi = tris.max(axis=1)
    centroids = tris.mean(axis=1)

    areas = 0.5 * np.linalg.norm(
        np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]), axis=1
    )
    degenerate = np.nonzero(areas == 0.0)[0].tolist()

    nodes: list = []

    def rec(idx: np.ndarray) -> int:
        node_lo = lo[idx].min(axis=0)
        node_hi = hi[idx].max(axis=0)
        me = len(nodes)
        nodes.append(_Node(lo=node_lo, hi=node_hi))
        if len(idx) <= LEAF_SIZE:
            nodes[me].faces = np.sort(idx)
            return me
        axis = int(np.argmax(node_hi - node_lo))
        order = idx[np.argsort(centroids[idx, axis], kind="stable")]
        half = len(order) // 2
        nodes[me].left = rec(order[:half])
        nodes[me].right = rec(order[half:])
        return me

    rec(np.arange(tris.shape[0]))
    return Bvh(nodes=nodes, degenerate_faces=degenerate, triangles=tris)


def bvh_all_faces(bvh: Bvh) -> np.ndarray:
    """Every face index reachable by full traversal (test hook)."""
    out = []
    stack = [0]
    while stack:
        n = bvh.nodes[stack.pop()]
        if n.faces is not None:
            out.append(n.faces)
        else:
            stack.extend([n.left, n.right])
    return np.sort(np.concatenate(out))


def face_distance(tri_a: np.ndarray, tri_b: np.ndarray) -> float:
    """Exact minimum distance between two triangles; 0 iff they touch."""
    tri_a = np.asarray(tri_a, dtype=float).reshape(1, 3, 3)
    tri_b = np.asarray(tri_b, dtype=float).reshape(1, 3, 3)
    return float(tri_tri_distance_batch(tri_a, tri_b)[0])


def _pairs_from_candidates(tris_a, tris_b, ia, ib, epsilon) -> list:
    if len(ia) == 0:
        return []
    d = tri_tri_distance_batch(tris_a[ia], tris_b[ib])
    keep = d <= epsilon
    ia, ib, d = ia[keep], ib[keep], d[keep]
    order = np.lexsort((ib, ia))
    return [ContactPair(int(ia[k]), int(ib[k]), float(d[k])) for k in order]


def collision_pairs(mesh_a: PosedMesh, mesh_b: PosedMesh, epsilon: float = 0.0) -> list:
    """All face pairs within epsilon, ordered by (face_a, face_b)."""
    if epsilon < 0:
        raise InputError("epsilon must be >= 0")
    bvh_a = build_bvh(mesh_a)
    bvh_b = build_bvh(mesh_b)
    cand_a: list = []
    cand_b: list = []
    stack = [(0, 0)]
    while stack:
        na, nb = stack.pop()
        a = bvh_a.nodes[na]
        b = bvh_b.nodes[nb]
        if aabb_pair_distance(a.lo, a.hi, b.lo, b.hi) > epsilon:
            continue
        a_leaf = a.faces is not None
        b_leaf = b.faces is not None
        if a_leaf and b_leaf:
            ga, gb = np.meshgrid(a.faces, b.faces, indexing="ij")
            cand_a.append(ga.ravel())
            cand_b.append(gb.ravel())
        elif a_leaf or (not b_leaf and (b.hi - b.lo).max() > (a.hi - a.lo).max()):
            stack.append((na, b.left))
            stack.append((na, b.right))
        else:
            stack.append((a.left, nb))
            stack.append((a.right, nb))
    if not cand_a:
        return []
    ia = np.concatenate(cand_a)
    ib = np.concatenate(cand_b)
    return _pairs_from_candidates(bvh_a.triangles, bvh_b.triangles, ia, ib, epsilon)


def brute_force_pairs(mesh_a: PosedMesh, mesh_b: PosedMesh, epsilon: float = 0.0) -> list:
    """All-pairs filtering without any tree; oracle for collision_pairs.

    A per-face AABB distance lower bound skips pairs that cannot be within
    epsilon; this keeps the result exact.
    """
    if epsilon < 0:
        raise InputError("epsilon must be >= 0")
    tris_a = _face_triangles(mesh_a)
    tris_b = _face_triangles(mesh_b)
    lo_a, hi_a = tris_a.min(axis=1), tris_a.max(axis=1)
    lo_b, hi_b = tris_b.min(axis=1), tris_b.max(axis=1)
    fa = tris_a.shape[0]
    out_a: list = []
    out_b: list = []
    chunk = max(1, int(2e6) // max(1, tris_b.shape[0]))
    for start in range(0, fa, chunk):
        end = min(fa, start + chunk)
        d = aabb_pair_distance(
            lo_a[start:end, None, :], hi_a[start:end, None, :], lo_b[None, :, :], hi_b[None, :, :]
        )
        ia, ib = np.nonzero(d <= epsilon)
        out_a.append(ia + start)
        out_b.append(ib)
    ia = np.concatenate(out_a)
    ib = np.concatenate(out_b)
    return _pairs_from_candidates(tris_a, tris_b, ia, ib, epsilon)


def detect_posed_sequence(meshes_a: list, meshes_b: list, epsilon: float = 0.0) -> ContactSet:
    """Per-frame collision pairs for two already-posed sequences."""
    if len(meshes_a) != len(meshes_b):
        raise InputError("sequences must have equal length")
    per_frame = [collision_pairs(ma, mb, epsilon) for ma, mb in zip(meshes_a, meshes_b)]
    return ContactSet(per_frame=per_frame, epsilon=epsilon)


def detect_sequence(
    template: BodyTemplate,
    motion_a: HumanMotion,
    motion_b: HumanMotion,
    epsilon: float = 0.0,
) -> ContactSet:
    """Contact sets for every frame of a synchronized motion pair."""
    if motion_a.num_frames != motion_b.num_frames:
        raise InputError("motions must have equal frame counts")
    if motion_a.dt != motion_b.dt:
        raise InputError("motions must share dt")
    meshes_a = pose_sequence(template, motion_a)
    meshes_b = pose_sequence(template, motion_b)
    return detect_posed_sequence(meshes_a, meshes_b, epsilon)
