"""Contact-aware root pose optimization.

A single translation/rotation offset for agent 1 is chosen to minimize
the summed squared gap between corresponding contact-face centroids over
the sequence.  Translation-only mode has a closed form; full mode runs
multi-start gradient descent with numerical gradients.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .body import BodyTemplate, HumanMotion, pose_sequence
from .contacts import ContactSet
from .errors import InputError, NoContactError
from .rotations import aa_to_matrix, compose_aa

GRAD_H = 1e-6
MAX_ITERS = 1000


@dataclass(frozen=True)
class RootOffset:
    delta_p: np.ndarray      # (3,) meters
    delta_theta: np.ndarray  # (3,) axis-angle

    def __post_init__(self):
        dp = np.asarray(self.delta_p, dtype=float)
        dth = np.asarray(self.delta_theta, dtype=float)
        object.__setattr__(self, "delta_p", dp)
        object.__setattr__(self, "delta_theta", dth)
        if not (np.isfinite(dp).all() and np.isfinite(dth).all()):
            raise InputError("non-finite root offset")
        if np.linalg.norm(dth) >= np.pi:
            raise InputError("rotation offset must stay inside the principal ball")


@dataclass(frozen=True)
class CentroidPair:
    frame: int
    c_a: np.ndarray  # (3,)
    c_b: np.ndarray  # (3,)


def contact_centroids(
    template: BodyTemplate,
    beta_prime: np.ndarray,
    motion_a: HumanMotion,
    motion_b: HumanMotion,
    contacts: ContactSet,
) -> list:
    """Contact-face centroids on the reshaped meshes, one pair per contact."""
    if contacts.num_frames != motion_a.num_frames:
        raise InputError("contact set does not match sequence length")
    frames_with_contact = [t for t in range(contacts.num_frames) if contacts.per_frame[t]]
    if not frames_with_contact:
        return []
    meshes_a = pose_sequence(template, motion_a, beta_override=beta_prime)
    meshes_b = pose_sequence(template, motion_b, beta_override=beta_prime)
    out = []
    faces = template.faces
    for t in frames_with_contact:
        va = meshes_a[t].vertices
        vb = meshes_b[t].vertices
        for pair in contacts.per_frame[t]:
            c_a = va[faces[pair.face_a]].mean(axis=0)
            c_b = vb[faces[pair.face_b]].mean(axis=0)
            out.append(CentroidPair(frame=t, c_a=c_a, c_b=c_b))
    return out


def _stack(pairs: list, root_pivot_per_frame: np.ndarray):
    c_a = np.array([p.c_a for p in pairs])
    c_b = np.array([p.c_b for p in pairs])
    piv = np.asarray(root_pivot_per_frame, dtype=float)[[p.frame for p in pairs]]
    return c_a, c_b, piv


def centroid_objective(pairs: list, root_pivot_per_frame: np.ndarray, offset: RootOffset) -> float:
    """Sum of squared centroid gaps after moving agent 1 by the offset."""
    c_a, c_b, piv = _stack(pairs, root_pivot_per_frame)
    return _objective(np.concatenate([offset.delta_p, offset.delta_theta]), c_a, c_b, piv)


def mean_centroid_gap(pairs: list) -> float:
    if not pairs:
        return 0.0
    c_a = np.array([p.c_a for p in pairs])
    c_b = np.array([p.c_b for p in pairs])
    return float(np.linalg.norm(c_a - c_b, axis=1).mean())


def _objective(x: np.ndarray, c_a, c_b, piv) -> float:
    rot = aa_to_matrix(x[3:6])
    moved = (c_a - piv) @ rot.T + piv + x[:3]
    diff = moved - c_b
    return float(np.sum(diff * diff))


def _num_grad(x, c_a, c_b, piv) -> np.ndarray:
    g = np.empty(6)
    for i in range(6):
        xp = x.copy()
        xm = x.copy()
        xp[i] += GRAD_H
        xm[i] -= GRAD_H
        g[i] = (_objective(xp, c_a, c_b, piv) - _objective(xm, c_a, c_b, piv)) / (2 * GRAD_H)
    return g


def optimize_root_offset(
    pairs: list,
    root_pivot_per_frame: np.ndarray,
    mode: str = "full",
) -> RootOffset:
    """Best constant root offset for agent 1 over the whole clip."""
    if not pairs:
        raise NoContactError("no contact pairs; root offset is undefined")
    if mode not in ("translation_only", "full"):
        raise InputError(f"unknown mode {mode!r}")
    c_a, c_b, piv = _stack(pairs, root_pivot_per_frame)

    if mode == "translation_only":
        delta_p = (c_b - c_a).mean(axis=0)
        return RootOffset(delta_p=delta_p, delta_theta=np.zeros(3))

    # full: multi-start descent over (delta_p, delta_theta); translation is
    # re-seeded in closed form for each rotation seed
    seeds = [np.zeros(3)]
    for axis in np.eye(3):
        seeds.append(0.25 * axis)
        seeds.append(-0.25 * axis)
    seeds.append(0.25 * np.ones(3) / np.sqrt(3.0))

    best_x = np.zeros(6)
    best_f = _objective(best_x, c_a, c_b, piv)
    iters_per_seed = max(1, MAX_ITERS // len(seeds))
    for dth in seeds:
        rot = aa_to_matrix(dth)
        dp = (c_b - ((c_a - piv) @ rot.T + piv)).mean(axis=0)
        x = np.concatenate([dp, dth])
        f = _objective(x, c_a, c_b, piv)
        step = 1e-2
        for _ in range(iters_per_seed):
            g = _num_grad(x, c_a, c_b, piv)
            gn = np.linalg.norm(g)
            if gn < 1e-14:
                break
            accepted = False
            while step > 1e-14:
                cand = x - step * g
                fc = _objective(cand, c_a, c_b, piv)
                if fc < f:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
            x, f = cand, fc
            step *= 1.5
        if f < best_f and np.linalg.norm(x[3:6]) < np.pi:
            best_x, best_f = x, f
    return RootOffset(delta_p=best_x[:3], delta_theta=best_x[3:6])


def apply_root_offset(motion: HumanMotion, offset: RootOffset, composition: str = "rotational") -> HumanMotion:
    """Shift a motion's root track by a constant offset.

    additive adds the offset components per frame; rotational composes the
    rotation properly, pivoting at the per-frame world root joint (which
    reduces to adding delta_p to the translation track).
    """
    if composition == "additive":
        return HumanMotion(
            beta=motion.beta,
            theta=motion.theta,
            root_translation=motion.root_translation + offset.delta_p,
            root_rotation=motion.root_rotation + offset.delta_theta,
            dt=motion.dt,
        )
    if composition == "rotational":
        new_rr = np.array([compose_aa(offset.delta_theta, rr) for rr in motion.root_rotation])
        return HumanMotion(
            beta=motion.beta,
            theta=motion.theta,
            root_translation=motion.root_translation + offset.delta_p,
            root_rotation=new_rr,
            dt=motion.dt,
        )
    raise InputError(f"unknown composition {composition!r}")
