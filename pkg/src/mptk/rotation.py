"""Small 3D rotation helpers shared by the sphere and camera prompt builders."""

from __future__ import annotations

import numpy as np

__all__ = ["rotation_about_axis", "rotation_between", "is_rotation_matrix", "AmbiguousRotationError"]


class AmbiguousRotationError(ValueError):
    """Raised when a rotation between antipodal directions is requested."""


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix for a given axis (any nonzero 3-vector)."""
    axis = np.asarray(axis, dtype=np.float64)
    norm = np.linalg.norm(axis)
    if norm == 0:
        raise ValueError("rotation axis must be nonzero")
    x, y, z = axis / norm
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def rotation_between(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rotation taking unit direction a onto unit direction b.

    The axis is a x b and the angle is the angle between the two directions,
    which pins the rotation uniquely except for antipodal inputs.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    cross = np.cross(a, b)
    dot = float(np.dot(a, b))
    if 1.0 + dot < 1e-9:
        raise AmbiguousRotationError(
            "antipodal directions admit infinitely many rotations"
        )
    sin = float(np.linalg.norm(cross))
    if sin < 1e-12:
        return np.eye(3)
    return rotation_about_axis(cross, np.arctan2(sin, dot))


def is_rotation_matrix(mat: np.ndarray, tol: float = 1e-6) -> bool:
    """True if mat is orthonormal with determinant +1 within tol."""
    mat = np.asarray(mat, dtype=np.float64)
    if mat.shape != (3, 3) or not np.isfinite(mat).all():
        return False
    if not np.allclose(mat @ mat.T, np.eye(3), atol=tol):
        return False
    return abs(np.linalg.det(mat) - 1.0) <= tol
