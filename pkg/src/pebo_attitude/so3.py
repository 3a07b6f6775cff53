"""Small-matrix algebra on SO(3).

Rotations are plain ``(3, 3)`` float arrays and vectors are ``(3,)`` arrays.
:func:`as_rotation` is the checked constructor; integrator hot loops work on
raw arrays and call :func:`project_so3` periodically to remove drift.

Euler angles follow the intrinsic Z-Y-X (yaw, pitch, roll) convention::

    R = Rz(yaw) @ Ry(pitch) @ Rx(roll)
"""

from __future__ import annotations

import math

import numpy as np

ROTATION_TOL = 1e-9
RUNTIME_TOL = 1e-6

_SMALL_ANGLE = 1e-8


def skew(a) -> np.ndarray:
    """Return the cross-product matrix ``a_x`` such that ``a_x @ b == a x b``."""
    a = np.asarray(a, dtype=float)
    return np.array(
        [
            [0.0, -a[2], a[1]],
            [a[2], 0.0, -a[0]],
            [-a[1], a[0], 0.0],
        ]
    )


def vex(S, tol: float = ROTATION_TOL) -> np.ndarray:
    """Inverse of :func:`skew`.

    Raises
    ------
    ValueError
        If ``S`` is not skew-symmetric within ``tol`` (Frobenius norm of
        ``S + S.T``).
    """
    S = np.asarray(S, dtype=float)
    if np.linalg.norm(S + S.T) > tol:
        raise ValueError("not skew-symmetric")
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def skew_part(A) -> np.ndarray:
    """``(A - A.T) / 2``."""
    A = np.asarray(A, dtype=float)
    return 0.5 * (A - A.T)


def cross3(a, b) -> tuple[float, float, float]:
    # np.cross costs ~20 us on 3-vectors; the observer loops call this per step.
    a0, a1, a2 = a
    b0, b1, b2 = b
    return (a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0)


class NumericalError(RuntimeError):
    """Non-finite value encountered during a simulation."""


def _rodrigues_coeffs(theta2: float) -> tuple[float, float]:
    if not theta2 < math.inf:  # also catches NaN
        raise NumericalError(f"non-finite rotation angle (theta^2 = {theta2})")
    if theta2 < _SMALL_ANGLE * _SMALL_ANGLE:
        return 1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0
    theta = math.sqrt(theta2)
    return math.sin(theta) / theta, (1.0 - math.cos(theta)) / theta2


def exp_xyz(x: float, y: float, z: float) -> np.ndarray:
    """Rodrigues formula from scalar components (unchecked fast path)."""
    s, c = _rodrigues_coeffs(x * x + y * y + z * z)
    return np.array(
        [
            [1.0 - c * (y * y + z * z), -s * z + c * x * y, s * y + c * x * z],
            [s * z + c * x * y, 1.0 - c * (x * x + z * z), -s * x + c * y * z],
            [-s * y + c * x * z, s * x + c * y * z, 1.0 - c * (x * x + y * y)],
        ]
    )


def exp_so3(a) -> np.ndarray:
    """Exponential map ``so(3) -> SO(3)`` of the rotation vector ``a``.

    Uses ``I + sin|a|/|a| a_x + (1 - cos|a|)/|a|^2 a_x^2``, switching to the
    second-order Taylor expansion of both coefficients for ``|a| < 1e-8``.
    """
    a = np.asarray(a, dtype=float)
    return exp_xyz(float(a[0]), float(a[1]), float(a[2]))


def exp_so3_batch(a) -> np.ndarray:
    """Vectorised :func:`exp_so3` over an ``(N, 3)`` array."""
    a = np.asarray(a, dtype=float)
    x, y, z = a[:, 0], a[:, 1], a[:, 2]
    theta2 = x * x + y * y + z * z
    theta = np.sqrt(theta2)
    small = theta < _SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    s = np.where(small, 1.0 - theta2 / 6.0, np.sin(safe) / safe)
    c = np.where(small, 0.5 - theta2 / 24.0, (1.0 - np.cos(safe)) / (safe * safe))
    out = np.empty((a.shape[0], 3, 3))
    out[:, 0, 0] = 1.0 - c * (y * y + z * z)
    out[:, 0, 1] = -s * z + c * x * y
    out[:, 0, 2] = s * y + c * x * z
    out[:, 1, 0] = s * z + c * x * y
    out[:, 1, 1] = 1.0 - c * (x * x + z * z)
    out[:, 1, 2] = -s * x + c * y * z
    out[:, 2, 0] = -s * y + c * x * z
    out[:, 2, 1] = s * x + c * y * z
    out[:, 2, 2] = 1.0 - c * (x * x + y * y)
    return out


def orthogonality_error(R) -> float:
    """Frobenius norm of ``R.T @ R - I``."""
    R = np.asarray(R, dtype=float)
    return float(np.linalg.norm(R.T @ R - np.eye(3)))


def is_rotation(R, tol: float = ROTATION_TOL) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return orthogonality_error(R) <= tol and abs(np.linalg.det(R) - 1.0) <= tol


def as_rotation(M, tol: float = ROTATION_TOL) -> np.ndarray:
    """Validate ``M`` as a rotation matrix and return it as a float array."""
    R = np.array(M, dtype=float)
    if R.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise ValueError("not a rotation: non-finite entries")
    if not is_rotation(R, tol):
        raise ValueError(
            "not a rotation: |R^T R - I| = %.3g, det = %.12g"
            % (orthogonality_error(R), np.linalg.det(R))
        )
    return R


def as_unit_vector(v, tol: float = ROTATION_TOL) -> np.ndarray:
    v = np.array(v, dtype=float)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise ValueError(f"expected a finite 3-vector, got {v!r}")
    if abs(np.linalg.norm(v) - 1.0) > tol:
        raise ValueError(f"not a unit vector: |v| = {np.linalg.norm(v)!r}")
    return v


def dist_to_identity(R) -> float:
    """Normalised distance ``sqrt(tr(I - R) / 4)`` in ``[0, 1]``."""
    R = np.asarray(R, dtype=float)
    return math.sqrt(max(0.0, (3.0 - float(np.trace(R))) / 4.0))


def rotation_angle(R) -> float:
    """Geodesic angle (rad) of ``R`` from the identity."""
    c = 0.5 * (float(np.trace(R)) - 1.0)
    w = vex(skew_part(R), tol=np.inf)
    return math.atan2(float(np.linalg.norm(w)), c)


def angle_between(R1, R2) -> float:
    """Geodesic distance (rad) between two rotations."""
    return rotation_angle(np.asarray(R1).T @ np.asarray(R2))


def project_so3(M) -> np.ndarray:
    """Nearest rotation to ``M`` in Frobenius norm.

    Polar factor via SVD with the determinant correction applied to the
    smallest singular direction.
    """
    M = np.asarray(M, dtype=float)
    U, s, Vt = np.linalg.svd(M)
    if not np.all(np.isfinite(s)) or s[-1] <= 1e-10 * max(s[0], 1e-300):
        raise ValueError("degenerate projection")
    d = 1.0 if np.linalg.det(U @ Vt) > 0 else -1.0
    return U @ np.diag([1.0, 1.0, d]) @ Vt


def rotation_from_euler(yaw: float, pitch: float, roll: float) -> np.ndarray:
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def is_gimbal_lock(R, tol: float = 1e-9) -> bool:
    """True when pitch is within ``tol`` of +/- pi/2 and yaw/roll are coupled."""
    return abs(abs(float(np.asarray(R)[2, 0])) - 1.0) <= tol


def euler_zyx(R) -> tuple[float, float, float]:
    """Return ``(yaw, pitch, roll)`` in radians.

    At gimbal lock only ``yaw + roll`` (or ``yaw - roll``) is defined; the
    whole combination is reported in ``yaw`` with ``roll = 0``. Use
    :func:`is_gimbal_lock` to detect that case.
    """
    R = np.asarray(R, dtype=float)
    r20 = min(1.0, max(-1.0, float(R[2, 0])))
    pitch = -math.asin(r20)
    if is_gimbal_lock(R):
        # R[0,1], R[1,1] carry yaw -/+ roll once cos(pitch) = 0
        yaw = math.atan2(-float(R[0, 1]), float(R[1, 1]))
        return yaw, pitch, 0.0
    yaw = math.atan2(float(R[1, 0]), float(R[0, 0]))
    roll = math.atan2(float(R[2, 1]), float(R[2, 2]))
    return yaw, pitch, roll


def euler_zyx_batch(R) -> np.ndarray:
    """Vectorised :func:`euler_zyx` for ``(N, 3, 3)`` input; returns ``(N, 3)``."""
    R = np.asarray(R, dtype=float)
    pitch = -np.arcsin(np.clip(R[:, 2, 0], -1.0, 1.0))
    yaw = np.arctan2(R[:, 1, 0], R[:, 0, 0])
    roll = np.arctan2(R[:, 2, 1], R[:, 2, 2])
    lock = np.abs(np.abs(R[:, 2, 0]) - 1.0) <= 1e-9
    if np.any(lock):
        yaw = np.where(lock, np.arctan2(-R[:, 0, 1], R[:, 1, 1]), yaw)
        roll = np.where(lock, 0.0, roll)
    return np.stack([yaw, pitch, roll], axis=1)


def wrap_angle(a):
    """Wrap angles to ``(-pi, pi]``."""
    return np.pi - np.mod(np.pi - np.asarray(a, dtype=float), 2.0 * np.pi)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform rotation from a normalised Gaussian quaternion."""
    q = rng.standard_normal(4)
    w, x, y, z = q / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)
