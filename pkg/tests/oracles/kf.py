"""Textbook linear Kalman filter, written out with explicit inverses."""

from dataclasses import dataclass

import numpy as np


@dataclass
class LinearSystem:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    q: np.ndarray
    r: np.ndarray


def reference_kf(sys, x0, p0, inputs, measurements):
    """Run predict/update for each ``(u, z)`` pair; ``u=None`` skips predict.

    Returns lists of posterior means and covariances.
    """
    a, b, c = (np.atleast_2d(np.asarray(m, dtype=float)) for m in (sys.a, sys.b, sys.c))
    b = b.reshape(a.shape[0], -1)
    q = np.atleast_2d(sys.q)
    r = np.atleast_2d(sys.r)
    x = np.array(x0, dtype=float)
    p = np.array(p0, dtype=float)
    xs, ps = [], []
    for u, z in zip(inputs, measurements):
        if u is not None:
            x = a @ x + (b @ np.atleast_1d(u)).ravel()
            p = a @ p @ a.T + q
        s = c @ p @ c.T + r
        k = p @ c.T @ np.linalg.inv(s)
        x = x + k @ (np.atleast_1d(z) - c @ x)
        p = (np.eye(len(x)) - k @ c) @ p
        xs.append(x.copy())
        ps.append(p.copy())
    return xs, ps
