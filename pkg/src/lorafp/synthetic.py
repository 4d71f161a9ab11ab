"""Synthetic city-scale LoRaWAN fingerprints for tests and demos.

Gateways sit at random positions in a ~0.15 x 0.2 degree box; each message
is sent from a random location with a random spreading factor and received
by the gateways whose log-distance path-loss RSSI (with log-normal
shadowing) clears the sensitivity of that spreading factor. Like the real
data, most messages keep only their three strongest receptions.
"""

from __future__ import annotations

import numpy as np

from lorafp.eval import haversine
from lorafp.ingest import N_GATEWAYS, SENTINEL, Dataset

CENTER = (51.22, 4.42)
SENSITIVITY = {7: -123.0, 8: -126.0, 9: -129.0, 10: -132.0, 11: -134.5, 12: -137.0}


def make_dataset(n: int, seed: int = 0, n_gateways: int = N_GATEWAYS,
                 max_receptions: int = 3, extent=(0.15, 0.20),
                 tx_power: float = 14.0, exponent: float = 3.0,
                 shadowing_db: float = 6.0, source_id: str = "synthetic") -> Dataset:
    rng = np.random.default_rng(seed)
    half = np.asarray(extent) / 2
    gw = np.asarray(CENTER) + rng.uniform(-half, half, size=(n_gateways, 2))
    # a per-gateway constant offset stands in for antenna height and site effects
    site = rng.normal(0.0, 4.0, size=n_gateways)

    rssi = np.full((n, N_GATEWAYS), SENTINEL)
    sf = np.empty(n, dtype=np.int64)
    pos = np.empty((n, 2))
    filled = 0
    while filled < n:
        m = n - filled
        p = np.asarray(CENTER) + rng.uniform(-half, half, size=(m, 2))
        s = rng.choice(list(SENSITIVITY), size=m, p=[0.3, 0.2, 0.15, 0.15, 0.1, 0.1])
        d = haversine(p[:, None, :], gw[None, :, :])
        loss = 40.0 + 10 * exponent * np.log10(np.maximum(d, 1.0)) - site
        r = np.round(tx_power - loss + rng.normal(0.0, shadowing_db, size=d.shape))
        sens = np.vectorize(SENSITIVITY.get)(s)[:, None]
        heard = r >= sens
        # keep only the strongest receptions per message
        order = np.argsort(-np.where(heard, r, -np.inf), axis=1, kind="stable")
        keep = np.zeros_like(heard)
        np.put_along_axis(keep, order[:, :max_receptions], True, axis=1)
        heard &= keep
        ok = heard.any(axis=1)
        k = int(ok.sum())
        block = np.where(heard[ok], np.minimum(r[ok], -1.0), SENTINEL)
        rssi[filled:filled + k, :n_gateways] = block
        sf[filled:filled + k] = s[ok]
        pos[filled:filled + k] = p[ok]
        filled += k
    hdop = np.round(rng.gamma(4.0, 0.3, size=n), 2)
    return Dataset(rssi, sf, hdop, pos[:, 0], pos[:, 1], source_id=source_id)
