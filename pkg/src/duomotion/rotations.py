"""Axis-angle / quaternion / matrix conversions.

Axis-angle (rotation vector) is the storage convention throughout the
package; composition happens through matrices or quaternions.  Quaternions
follow scipy's scalar-last (x, y, z, w) layout.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation


def aa_to_matrix(aa: np.ndarray) -> np.ndarray:
    """Rotation vector(s) -> rotation matrix/matrices."""
    aa = np.asarray(aa, dtype=float)
    return Rotation.from_rotvec(aa.reshape(-1, 3)).as_matrix().reshape(aa.shape[:-1] + (3, 3))


def matrix_to_aa(mat: np.ndarray) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    return Rotation.from_matrix(mat.reshape(-1, 3, 3)).as_rotvec().reshape(mat.shape[:-2] + (3,))


def aa_to_quat(aa: np.ndarray) -> np.ndarray:
    aa = np.asarray(aa, dtype=float)
    return Rotation.from_rotvec(aa.reshape(-1, 3)).as_quat().reshape(aa.shape[:-1] + (4,))


def quat_to_aa(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return Rotation.from_quat(q.reshape(-1, 4)).as_rotvec().reshape(q.shape[:-1] + (3,))


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return Rotation.from_quat(q.reshape(-1, 4)).as_matrix().reshape(q.shape[:-1] + (3, 3))


def quat_multiply(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Hamilton product q1 * q2 in scalar-last layout."""
    r = Rotation.from_quat(np.asarray(q1, dtype=float)) * Rotation.from_quat(np.asarray(q2, dtype=float))
    return r.as_quat()


def compose_aa(aa_outer: np.ndarray, aa_inner: np.ndarray) -> np.ndarray:
    """Rotation vector of R(aa_outer) @ R(aa_inner)."""
    r = Rotation.from_rotvec(np.asarray(aa_outer, dtype=float)) * Rotation.from_rotvec(
        np.asarray(aa_inner, dtype=float)
    )
    return r.as_rotvec()


def geodesic_angle(q1: np.ndarray, q2: np.ndarray) -> float:
    """Angle of the relative rotation between two quaternions, in radians."""
    r = Rotation.from_quat(np.asarray(q1, dtype=float)).inv() * Rotation.from_quat(np.asarray(q2, dtype=float))
    return float(np.linalg.norm(r.as_rotvec()))


def relative_rotvec(q_prev: np.ndarray, q_next: np.ndarray) -> np.ndarray:
    """Rotation vector of R_prev^T R_next (body-frame increment)."""
    r = Rotation.from_quat(np.asarray(q_prev, dtype=float)).inv() * Rotation.from_quat(
        np.asarray(q_next, dtype=float)
    )
    return r.as_rotvec()
