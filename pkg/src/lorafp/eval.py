"""Great-circle errors and their summary statistics."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

# mean Earth radius in meters
EARTH_RADIUS_M = 6_371_000.0

PERCENTILES = (50, 75, 90, 95)


def haversine(a, b):
    """Distance in meters between (lat, lon) points given in degrees.

    ``a`` and ``b`` broadcast: pass two pairs for a scalar, or two (N, 2)
    arrays for N distances.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lat1, lon1 = np.radians(a[..., 0]), np.radians(a[..., 1])
    lat2, lon2 = np.radians(b[..., 0]), np.radians(b[..., 1])
    h = (np.sin((lat2 - lat1) / 2) ** 2
         + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2)
    d = 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))
    return float(d) if d.ndim == 0 else d


@dataclass(frozen=True)
class ErrorStats:
    mean: float
    median: float
    percentiles: dict
    count: int

    def as_row(self) -> dict:
        row = {"count": self.count, "mean": self.mean, "median": self.median}
        row.update({f"p{p}": v for p, v in self.percentiles.items()})
        return row

    def to_dict(self):
        return asdict(self)


def summarize(errors) -> ErrorStats:
    e = np.asarray(errors, dtype=float).ravel()
    if e.size == 0:
        raise ValueError("cannot summarize an empty error set")
    # linear interpolation: the median of an even count is the midpoint of the central pair
    q = np.percentile(e, PERCENTILES)
    pct = {p: float(v) for p, v in zip(PERCENTILES, q)}
    return ErrorStats(mean=float(e.mean()), median=pct[50], percentiles=pct, count=int(e.size))


def error_stats(predictions, truths) -> ErrorStats:
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(truths, dtype=float)
    if p.shape != t.shape or p.ndim != 2 or p.shape[1] != 2:
        raise ValueError(f"predictions {p.shape} and truths {t.shape} must both be (N, 2)")
    return summarize(haversine(p, t))
