"""Small numeric helpers shared across modules."""

from __future__ import annotations

import numpy as np


def parabolic_peak(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Refine the maximum of sampled data with a parabola through the three
    points bracketing the argmax. Falls back to the raw sample when the
    argmax sits on the boundary or the local curvature is not concave."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = int(np.argmax(y))
    if k == 0 or k == y.size - 1:
        return float(x[k]), float(y[k])
    c = np.polyfit(x[k - 1 : k + 2], y[k - 1 : k + 2], 2)
    if c[0] >= 0:
        return float(x[k]), float(y[k])
    xv = -c[1] / (2 * c[0])
    if not (x[k - 1] <= xv <= x[k + 1]):
        return float(x[k]), float(y[k])
    return float(xv), float(np.polyval(c, xv))
