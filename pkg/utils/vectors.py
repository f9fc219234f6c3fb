from __future__ import annotations

import numpy as np


def cross_mat(a: np.ndarray) -> np.ndarray:
    """Skew matrix [a]x with [a]x b = a x b."""
    return np.array(
        [
            [0.0, -a[2], a[1]],
            [a[2], 0.0, -a[0]],
            [-a[1], a[0], 0.0],
        ]
    )


def parallel_transport(u: np.ndarray, t1: np.ndarray, t2: np.ndarray) -> np.ndarray:
    """Rotate ``u`` by the minimal rotation that maps unit tangent ``t1`` onto ``t2``."""
    b = np.cross(t1, t2)
    nb = np.linalg.norm(b)
    if nb < 1e-15:
        return u.copy()
    b = b / nb
    # re-orthogonalize against both tangents
    b = b - np.dot(b, t1) * t1
    b = b / np.linalg.norm(b)
    b = b - np.dot(b, t2) * t2
    b = b / np.linalg.norm(b)
    n1 = np.cross(t1, b)
    n2 = np.cross(t2, b)
    return np.dot(u, t1) * t2 + np.dot(u, n1) * n2 + np.dot(u, b) * b


def signed_angle(u: np.ndarray, v: np.ndarray, axis: np.ndarray) -> float:
    """Angle rotating ``u`` onto ``v`` about ``axis`` (right-hand rule), in (-pi, pi]."""
    w = np.cross(u, v)
    return float(np.arctan2(np.dot(w, axis), np.dot(u, v)))


def orthonormal_to(t: np.ndarray) -> np.ndarray:
    """Some unit vector orthogonal to unit ``t``."""
    trial = np.array([0.0, 0.0, 1.0]) if abs(t[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    d = trial - np.dot(trial, t) * t
    return d / np.linalg.norm(d)
