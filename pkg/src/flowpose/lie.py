"""SO(3)/SE(3) numerics: exp/log maps, geodesics, distances, averaging.

Rotations are plain 3x3 numpy arrays (orthonormal, det +1); rigid poses pair a
rotation with a translation in meters. Angles are radians everywhere in this
module; degrees appear only at CLI/report boundaries.

Numerical policy: the exp/log maps switch to Taylor branches below
SMALL_ANGLE (second order, error < 1e-24 there) and the log map switches to
largest-diagonal axis extraction within NEAR_PI of a half turn, where the
standard sine formula degenerates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence

SMALL_ANGLE = 1e-8
NEAR_PI = 1e-6


def skew(v: np.ndarray) -> np.ndarray:
    """Hat operator: 3-vector to skew-symmetric matrix."""
    v = np.asarray(v, dtype=float)
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def unskew(m: np.ndarray) -> np.ndarray:
    """Vee operator: skew-symmetric matrix to 3-vector."""
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def so3_exp(omega: np.ndarray) -> np.ndarray:
    """Exponential map so(3) -> SO(3) via Rodrigues' formula.

    Total function: any finite 3-vector is accepted. Angles below
    SMALL_ANGLE use the second-order Taylor expansion of the Rodrigues
    coefficients.
    """
    omega = np.asarray(omega, dtype=float)
    theta = float(np.linalg.norm(omega))
    k = skew(omega)
    if theta < SMALL_ANGLE:
        # I + K + K^2/2, truncation error O(theta^3)
        return np.eye(3) + k + 0.5 * (k @ k)
    a = math.sin(theta) / theta
    b = (1.0 - math.cos(theta)) / (theta * theta)
    return np.eye(3) + a * k + b * (k @ k)


def so3_log(r: np.ndarray) -> np.ndarray:
    """Logarithm map SO(3) -> so(3), principal branch (norm <= pi).

    Three branches: Taylor near the identity, largest-diagonal axis
    extraction near a half turn, trace/sine formula otherwise.
    """
    r = np.asarray(r, dtype=float)
    tr = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    theta = math.acos(tr)
    if theta < SMALL_ANGLE:
        w = unskew((r - r.T) / 2.0)
        return w * (1.0 + theta * theta / 6.0)
    if theta > math.pi - NEAR_PI:
        # R_ii = cos(t) + a_i^2 (1 - cos(t)); the largest diagonal entry
        # identifies the best-conditioned axis component.
        c = math.cos(theta)
        k = int(np.argmax(np.diag(r)))
        ak = math.sqrt(max((r[k, k] - c) / (1.0 - c), 0.0))
        axis = np.empty(3)
        axis[k] = ak
        for j in range(3):
            if j != k:
                axis[j] = (r[j, k] + r[k, j]) / (2.0 * ak * (1.0 - c))
        axis /= np.linalg.norm(axis)
        # Orient with the skew part while it still carries sign information;
        # at exactly pi the sign is a free convention.
        s = unskew(r - r.T)
        d = float(axis @ s)
        if d < 0.0:
            axis = -axis
        elif d == 0.0 and axis[int(np.argmax(np.abs(axis)))] < 0.0:
            axis = -axis
        return theta * axis
    return unskew(r - r.T) * (theta / (2.0 * math.sin(theta)))


def is_rotation(r: np.ndarray, tol: float = 1e-9) -> bool:
    r = np.asarray(r)
    if r.shape != (3, 3):
        return False
    return (np.abs(r.T @ r - np.eye(3)).max() < tol
            and abs(np.linalg.det(r) - 1.0) < tol)


def geodesic_interp(r0: np.ndarray, r1: np.ndarray, t: float) -> np.ndarray:
    """Point at parameter t on the SO(3) geodesic from r0 to r1."""
    return r0 @ so3_exp(t * so3_log(r0.T @ r1))


def geodesic_dist(r0: np.ndarray, r1: np.ndarray) -> float:
    """Geodesic angle between two rotations, in [0, pi]."""
    tr = np.clip((np.trace(r0.T @ r1) - 1.0) / 2.0, -1.0, 1.0)
    return math.acos(tr)


def geodesic_dist_many(r: np.ndarray, rs: np.ndarray) -> np.ndarray:
    """Geodesic angles from one rotation to a stack of rotations (n,3,3)."""
    tr = np.einsum('ij,nij->n', r, rs)
    return np.arccos(np.clip((tr - 1.0) / 2.0, -1.0, 1.0))


def karcher_mean(rs, tol: float = 1e-8, max_iter: int = 100) -> np.ndarray:
    """Karcher (Frechet) mean of rotations by fixed-point iteration.

    mu <- mu * exp(mean_i log(mu^T r_i)), initialized at rs[0], until the
    mean tangent update drops below tol. Raises NonConvergence when the
    iteration cap is hit with a residual above 1e-3, which signals an
    antipodal or otherwise degenerate spread.
    """
    rs = [np.asarray(r, dtype=float) for r in rs]
    if not rs:
        raise ValueError("karcher_mean needs a non-empty list")
    mu = rs[0].copy()
    delta_norm = 0.0
    for _ in range(max_iter):
        delta = np.mean([so3_log(mu.T @ r) for r in rs], axis=0)
        delta_norm = float(np.linalg.norm(delta))
        if delta_norm < tol:
            return mu
        mu = mu @ so3_exp(delta)
    if delta_norm > 1e-3:
        raise NonConvergence(
            f"Karcher mean residual {delta_norm:.3e} after {max_iter} iterations")
    return mu


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) to rotation matrix. Normalizes the input."""
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quat(r: np.ndarray) -> np.ndarray:
    """Rotation matrix to unit quaternion (w, x, y, z), w >= 0.

    Shepperd's method: branch on the largest of trace/diagonal entries so the
    divisor is always well conditioned.
    """
    r = np.asarray(r, dtype=float)
    tr = np.trace(r)
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (r[2, 1] - r[1, 2]) / s,
                      (r[0, 2] - r[2, 0]) / s,
                      (r[1, 0] - r[0, 1]) / s])
    elif r[0, 0] >= r[1, 1] and r[0, 0] >= r[2, 2]:
        s = math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
        q = np.array([(r[2, 1] - r[1, 2]) / s,
                      0.25 * s,
                      (r[0, 1] + r[1, 0]) / s,
                      (r[0, 2] + r[2, 0]) / s])
    elif r[1, 1] >= r[2, 2]:
        s = math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2.0
        q = np.array([(r[0, 2] - r[2, 0]) / s,
                      (r[0, 1] + r[1, 0]) / s,
                      0.25 * s,
                      (r[1, 2] + r[2, 1]) / s])
    else:
        s = math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2.0
        q = np.array([(r[1, 0] - r[0, 1]) / s,
                      (r[0, 2] + r[2, 0]) / s,
                      (r[1, 2] + r[2, 1]) / s,
                      0.25 * s])
    q /= np.linalg.norm(q)
    if q[0] < 0.0:
        q = -q
    return q


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform random rotation (normalized 4D Gaussian quaternion)."""
    return quat_to_matrix(rng.standard_normal(4))


def random_rotations(rng: np.random.Generator, n: int) -> np.ndarray:
    q = rng.standard_normal((n, 4))
    return np.stack([quat_to_matrix(qi) for qi in q])


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class Pose:
    """Rigid transform: rot (3x3 orthonormal) plus trans (meters)."""

    rot: np.ndarray
    trans: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rot", np.asarray(self.rot, dtype=float))
        object.__setattr__(self, "trans", np.asarray(self.trans, dtype=float).reshape(3))

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    def compose(self, other: "Pose") -> "Pose":
        """self * other (apply other first, then self)."""
        return Pose(self.rot @ other.rot, self.rot @ other.trans + self.trans)

    def inverse(self) -> "Pose":
        rt = self.rot.T
        return Pose(rt, -rt @ self.trans)

    def transform(self, points: np.ndarray) -> np.ndarray:
        """Apply to an (n,3) array of points (or a single 3-vector)."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.rot.T + self.trans

    def to_json_dict(self) -> dict:
        q = matrix_to_quat(self.rot)
        return {"q": [float(v) for v in q], "t": [float(v) for v in self.trans]}

    @staticmethod
    def from_json_dict(d: dict) -> "Pose":
        return Pose(quat_to_matrix(np.asarray(d["q"], dtype=float)),
                    np.asarray(d["t"], dtype=float))


def pose_mean(poses) -> Pose:
    """Decoupled mean pose: Karcher mean rotation, arithmetic mean translation."""
    poses = list(poses)
    if not poses:
        raise ValueError("pose_mean needs a non-empty list")
    rot = karcher_mean([p.rot for p in poses])
    trans = np.mean([p.trans for p in poses], axis=0)
    return Pose(rot, trans)


def perturb_pose(pose: Pose, rng: np.random.Generator,
                 max_angle: float, max_trans: float) -> Pose:
    """Right-perturb by a rotation of angle ~ U[0, max_angle] about a random
    axis and a translation uniform in the ball of radius max_trans."""
    axis = rng.standard_normal(3)
    n = np.linalg.norm(axis)
    axis = axis / n if n > 0 else np.array([1.0, 0.0, 0.0])
    angle = rng.uniform(0.0, max_angle)
    dt = rng.standard_normal(3)
    dn = np.linalg.norm(dt)
    if dn > 0:
        dt = dt / dn * (max_trans * rng.uniform(0.0, 1.0) ** (1.0 / 3.0))
    return Pose(pose.rot @ so3_exp(axis * angle), pose.trans + dt)
