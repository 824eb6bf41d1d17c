"""Small numerical helpers."""
from __future__ import annotations

import numpy as np

from .errors import DomainError


def fwhm(x, y) -> float:
    """Full width at half maximum of the peak containing the global maximum."""
    y = np.asarray(y, dtype=float)
    k = int(np.argmax(y))
    half = 0.5 * y[k]
    left = k
    while left > 0 and y[left] > half:
        left -= 1
    right = k
    while right < len(y) - 1 and y[right] > half:
        right += 1
    if y[left] > half or y[right] > half:
        raise DomainError("peak not contained in the scan window")
    xl = np.interp(half, [y[left], y[left + 1]], [x[left], x[left + 1]])
    xr = np.interp(half, [y[right], y[right - 1]], [x[right], x[right - 1]])
    return float(xr - xl)
