"""Small SO(3) toolbox: axis-angle maps, nearest rotation, geodesic metric."""

import numpy as np

from .errors import InvalidArgumentError


def skew(v):
    """Cross-product matrix: skew(v) @ u == cross(v, u)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def exp_so3(w):
    """Rodrigues formula mapping an axis-angle vector to a rotation matrix."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w)
    K = skew(w)
    if theta < 1e-12:
        # second-order expansion, exact enough below the threshold
        return np.eye(3) + K + 0.5 * (K @ K)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * K + b * (K @ K)


def project_to_so3(m):
    """Nearest rotation matrix in Frobenius norm (polar factor, det fixed to +1)."""
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=float))
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def geodesic_distance(r1, r2):
    """Rotation angle of r1^T r2, in [0, pi]."""
    c = (np.trace(np.asarray(r1).T @ np.asarray(r2)) - 1.0) * 0.5
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def rotation_aligning(a, b):
    """Minimal rotation taking unit vector a onto unit vector b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < 1e-12 or nb < 1e-12:
        raise InvalidArgumentError("rotation_aligning needs nonzero vectors")
    a, b = a / na, b / nb
    v = np.cross(a, b)
    s = np.linalg.norm(v)
    c = float(a @ b)
    if s < 1e-12:
        if c > 0.0:
            return np.eye(3)
        # antiparallel: rotate pi about any axis orthogonal to a
        axis = np.cross(a, [1.0, 0.0, 0.0])
        if np.linalg.norm(axis) < 1e-6:
            axis = np.cross(a, [0.0, 1.0, 0.0])
        axis /= np.linalg.norm(axis)
        return exp_so3(np.pi * axis)
    angle = np.arctan2(s, c)
    return exp_so3(angle * v / s)


def random_rotation(rng):
    """Uniform-ish random rotation via QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q @ np.diag(np.sign(np.sign(np.diag(r)) + 0.5))
    if np.linalg.det(q) < 0:
        q[:, [0, 1]] = q[:, [1, 0]]
    return q
