"""Loading, validating, splitting and persisting LoRaWAN fingerprint tables.

A data file is a delimited text table with a header row. Each row is one
transmitted message: 68 per-gateway RSSI readings (``-200`` when the gateway
did not hear the message), the LoRa spreading factor, the GPS HDOP and the
ground-truth latitude/longitude.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from lorafp.errors import ConfigError, ManifestError, ParseError, SchemaError

N_GATEWAYS = 68
SENTINEL = -200.0


@dataclass(frozen=True)
class Fingerprint:
    rssi: np.ndarray
    sf: int
    hdop: float
    lat: float
    lon: float

    def __post_init__(self):
        rssi = np.asarray(self.rssi, dtype=float)
        if rssi.shape != (N_GATEWAYS,):
            raise SchemaError(f"rssi must have {N_GATEWAYS} entries, got shape {rssi.shape}")
        _check_rssi(rssi)
        _check_coords(self.lat, self.lon)
        if not self.hdop >= 0:
            raise SchemaError(f"hdop must be non-negative, got {self.hdop}")
        object.__setattr__(self, "rssi", rssi)

    @property
    def n_receptions(self) -> int:
        return int(np.count_nonzero(self.rssi != SENTINEL))


def _check_rssi(rssi, row=None):
    bad = (rssi < SENTINEL) | (rssi >= 0) | ~np.isfinite(rssi)
    if bad.any():
        where = f" in row {row}" if row is not None else ""
        raise SchemaError(f"rssi value {rssi[bad][0]} outside [-200, 0){where}")


def _check_coords(lat, lon, row=None):
    where = f" in row {row}" if row is not None else ""
    if not -90.0 <= lat <= 90.0:
        raise SchemaError(f"latitude {lat} out of range{where}")
    if not -180.0 <= lon <= 180.0:
        raise SchemaError(f"longitude {lon} out of range{where}")


@dataclass(frozen=True)
class ColumnMapping:
    """Names of the columns holding each fingerprint field."""

    rssi_columns: tuple[str, ...]
    sf_column: str
    hdop_column: str
    lat_column: str
    lon_column: str
    delimiter: str = ","

    def __post_init__(self):
        object.__setattr__(self, "rssi_columns", tuple(self.rssi_columns))
        if len(self.rssi_columns) != N_GATEWAYS:
            raise ConfigError(
                f"mapping needs exactly {N_GATEWAYS} rssi columns, got {len(self.rssi_columns)}"
            )
        names = self.columns
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ConfigError(f"mapping column names are not distinct: {dupes}")

    @property
    def columns(self) -> list[str]:
        return [*self.rssi_columns, self.sf_column, self.hdop_column,
                self.lat_column, self.lon_column]

    @classmethod
    def from_dict(cls, d: dict) -> "ColumnMapping":
        d = dict(d)
        if "rssi_columns" not in d:
            pattern = d.pop("rssi_pattern", None)
            lo, hi = d.pop("rssi_range", (1, N_GATEWAYS))
            if pattern is None:
                raise ConfigError("mapping needs rssi_columns or rssi_pattern")
            d["rssi_columns"] = [pattern.format(i=i) for i in range(lo, hi + 1)]
        else:
            d.pop("rssi_pattern", None)
            d.pop("rssi_range", None)
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad column mapping: {exc}") from None

    @classmethod
    def from_file(cls, path) -> "ColumnMapping":
        with open(path) as fh:
            return cls.from_dict(yaml.safe_load(fh))

    @classmethod
    def default(cls) -> "ColumnMapping":
        """Mapping shipped for the public Antwerp release."""
        return cls.from_dict(_default_mapping_doc())

    @classmethod
    def with_overrides(cls, d: dict) -> "ColumnMapping":
        """Default mapping with the keys of ``d`` replaced."""
        base = _default_mapping_doc()
        if "rssi_columns" in d:
            base.pop("rssi_pattern")
            base.pop("rssi_range")
        return cls.from_dict({**base, **d})


def _default_mapping_doc() -> dict:
    text = resources.files("lorafp").joinpath("data/antwerp_mapping.yaml").read_text()
    return yaml.safe_load(text)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-oriented, read-only fingerprint table in file order."""

    rssi: np.ndarray
    sf: np.ndarray
    hdop: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        rssi = np.array(self.rssi, dtype=float).reshape(-1, N_GATEWAYS)
        n = len(rssi)
        arrays = {
            "rssi": rssi,
            "sf": np.array(self.sf, dtype=np.int64).reshape(n),
            "hdop": np.array(self.hdop, dtype=float).reshape(n),
            "lat": np.array(self.lat, dtype=float).reshape(n),
            "lon": np.array(self.lon, dtype=float).reshape(n),
        }
        for name, arr in arrays.items():
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_records(cls, records, source_id="") -> "Dataset":
        records = list(records)
        if not records:
            return cls(np.empty((0, N_GATEWAYS)), [], [], [], [], source_id)
        return cls(
            rssi=np.stack([r.rssi for r in records]),
            sf=[r.sf for r in records],
            hdop=[r.hdop for r in records],
            lat=[r.lat for r in records],
            lon=[r.lon for r in records],
            source_id=source_id,
        )

    def __len__(self):
        return len(self.rssi)

    def __getitem__(self, i) -> Fingerprint:
        return Fingerprint(self.rssi[i], int(self.sf[i]), float(self.hdop[i]),
                           float(self.lat[i]), float(self.lon[i]))

    @property
    def records(self) -> list[Fingerprint]:
        return [self[i] for i in range(len(self))]

    @property
    def coords(self) -> np.ndarray:
        """(N, 2) array of (lat, lon) in degrees."""
        return np.column_stack([self.lat, self.lon])

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.rssi[idx], self.sf[idx], self.hdop[idx],
                       self.lat[idx], self.lon[idx], self.source_id)


def load_dataset(path, mapping: ColumnMapping | None = None) -> Dataset:
    """Read a fingerprint table; rows are returned in file order.

    Raises ConfigError for a missing column, ParseError (with 1-based data
    row number) for an unparseable cell and SchemaError for values outside
    the fingerprint invariants.
    """
    mapping = mapping or ColumnMapping.default()
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=mapping.delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ConfigError(f"{path}: file is empty, no header row") from None
        position = {name: i for i, name in enumerate(header)}
        for name in mapping.columns:
            if name not in position:
                raise ConfigError(f"{path}: column {name!r} not found in header")
        rssi_pos = [position[c] for c in mapping.rssi_columns]
        scalar_pos = [position[c] for c in (mapping.sf_column, mapping.hdop_column,
                                            mapping.lat_column, mapping.lon_column)]
        scalar_names = [mapping.sf_column, mapping.hdop_column,
                        mapping.lat_column, mapping.lon_column]

        rssi_rows, scalars = [], []
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(
                    f"{path}: row {row_no} has {len(row)} cells, header has {len(header)}"
                )
            try:
                rssi = [float(row[i]) for i in rssi_pos]
            except ValueError:
                bad = next(c for c, i in zip(mapping.rssi_columns, rssi_pos)
                           if not _parses(row[i]))
                raise ParseError(f"{path}: row {row_no}, column {bad!r}: "
                                 f"cannot parse {row[position[bad]]!r}",
                                 row=row_no, column=bad) from None
            vals = []
            for name, i in zip(scalar_names, scalar_pos):
                cell = row[i]
                if cell.strip() == "":
                    raise SchemaError(f"{path}: row {row_no}, column {name!r} is empty")
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ParseError(f"{path}: row {row_no}, column {name!r}: "
                                     f"cannot parse {cell!r}", row=row_no, column=name) from None
            sf = vals[0]
            if sf != int(sf):
                raise ParseError(f"{path}: row {row_no}: spreading factor {sf} is not an integer",
                                 row=row_no, column=mapping.sf_column)
            rssi_arr = np.asarray(rssi)
            _check_rssi(rssi_arr, row_no)
            _check_coords(vals[2], vals[3], row_no)
            if not math.isfinite(vals[1]) or vals[1] < 0:
                raise SchemaError(f"{path}: row {row_no}: hdop {vals[1]} must be non-negative")
            rssi_rows.append(rssi)
            scalars.append(vals)

    if not rssi_rows:
        return Dataset(np.empty((0, N_GATEWAYS)), [], [], [], [], str(path))
    s = np.asarray(scalars)
    return Dataset(np.asarray(rssi_rows), s[:, 0].astype(np.int64), s[:, 1], s[:, 2], s[:, 3],
                   source_id=str(path))


def _parses(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def save_dataset(d: Dataset, path, mapping: ColumnMapping | None = None):
    """Write ``d`` as a delimited table readable by :func:`load_dataset`."""
    mapping = mapping or ColumnMapping.default()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=mapping.delimiter)
        w.writerow(mapping.columns)
        for i in range(len(d)):
            w.writerow([_fmt(v) for v in d.rssi[i]]
                       + [int(d.sf[i]), repr(float(d.hdop[i])),
                          repr(float(d.lat[i])), repr(float(d.lon[i]))])


def _fmt(v):
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def gateway_histogram(d: Dataset) -> dict[int, int]:
    """Number of messages keyed by how many gateways received them."""
    g = np.count_nonzero(d.rssi != SENTINEL, axis=1)
    values, counts = np.unique(g, return_counts=True)
    return {int(v): int(c) for v, c in zip(values, counts)}


def rssi_histogram(d: Dataset, bin_width: float = 1.0) -> list[tuple[float, int]]:
    """Histogram of received RSSI values, sentinels excluded.

    Bins are ``[k*w, (k+1)*w)``; each pair is (bin lower edge, count) and
    only non-empty bins are listed, in ascending order.
    """
    if not bin_width > 0:
        raise ConfigError(f"bin_width must be positive, got {bin_width}")
    values = d.rssi[d.rssi != SENTINEL]
    if values.size == 0:
        return []
    bins = np.floor(values / bin_width).astype(np.int64)
    keys, counts = np.unique(bins, return_counts=True)
    return [(float(k * bin_width), int(c)) for k, c in zip(keys, counts)]


# --- splitting -------------------------------------------------------------

DEFAULT_FRACTIONS = (0.70, 0.15, 0.15)


@dataclass(frozen=True)
class SplitManifest:
    seed: int | None
    fractions: tuple[float, float, float]
    train_indices: tuple[int, ...]
    val_indices: tuple[int, ...]
    test_indices: tuple[int, ...]
    n_records: int = field(default=-1)

    def __post_init__(self):
        for name in ("train_indices", "val_indices", "test_indices"):
            object.__setattr__(self, name, tuple(int(i) for i in getattr(self, name)))
        object.__setattr__(self, "fractions", tuple(float(f) for f in self.fractions))
        if self.n_records < 0:
            object.__setattr__(self, "n_records", len(self.train_indices)
                               + len(self.val_indices) + len(self.test_indices))
        self.validate()

    def validate(self, n_records: int | None = None):
        """Check the three index lists partition ``range(n_records)``."""
        n = self.n_records if n_records is None else n_records
        parts = (self.train_indices, self.val_indices, self.test_indices)
        allidx = np.concatenate([np.asarray(p, dtype=np.int64) for p in parts])
        if len(np.unique(allidx)) != len(allidx):
            raise ManifestError("split index lists overlap or contain duplicates")
        if len(allidx) != n or (n and (allidx.min() < 0 or allidx.max() >= n)):
            raise ManifestError(f"split index lists do not cover exactly {n} records")

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.train_indices), len(self.val_indices), len(self.test_indices)


def split_sizes(n: int, fractions=DEFAULT_FRACTIONS) -> tuple[int, int, int]:
    """floor(n*f_train), floor(n*f_val), remainder to test."""
    _check_fractions(fractions)
    n_train = math.floor(n * fractions[0])
    n_val = math.floor(n * fractions[1])
    return n_train, n_val, n - n_train - n_val


def _check_fractions(fractions):
    if len(fractions) != 3 or any(not f > 0 for f in fractions):
        raise ConfigError(f"fractions must be three positive numbers, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"fractions must sum to 1, got {sum(fractions)}")


def permutation(n: int, seed: int) -> np.ndarray:
    """Seeded uniform permutation of ``range(n)``.

    Fisher-Yates (Durstenfeld, descending) driven by raw 64-bit outputs of
    PCG64 seeded through ``SeedSequence(seed)``. Index ``j`` for position
    ``i`` is ``r % (i + 1)`` with rejection of draws ``r >= 2**64 - 2**64 %
    (i + 1)``, so the result depends only on the PCG64 stream, which is
    fixed across platforms and numpy versions.
    """
    bitgen = np.random.PCG64(seed)
    perm = list(range(n))
    pool = []
    two64 = 1 << 64
    for i in range(n - 1, 0, -1):
        bound = i + 1
        limit = two64 - two64 % bound
        while True:
            if not pool:
                pool = bitgen.random_raw(4096).tolist()
                pool.reverse()
            r = pool.pop()
            if r < limit:
                break
        j = r % bound
        perm[i], perm[j] = perm[j], perm[i]
    return np.asarray(perm, dtype=np.int64)


def split_dataset(d: Dataset | int, seed: int, fractions=DEFAULT_FRACTIONS) -> SplitManifest:
    """Random train/val/test partition as contiguous slices of a seeded permutation."""
    n = d if isinstance(d, int) else len(d)
    n_train, n_val, _ = split_sizes(n, fractions)
    perm = permutation(n, seed)
    return SplitManifest(
        seed=int(seed),
        fractions=tuple(fractions),
        train_indices=perm[:n_train],
        val_indices=perm[n_train:n_train + n_val],
        test_indices=perm[n_train + n_val:],
        n_records=n,
    )


def save_split(manifest: SplitManifest, path):
    doc = {
        "format": "lorafp-split/1",
        "seed": manifest.seed,
        "fractions": list(manifest.fractions),
        "n_records": manifest.n_records,
        "train": list(manifest.train_indices),
        "val": list(manifest.val_indices),
        "test": list(manifest.test_indices),
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n")


def load_split(path, n_records: int | None = None) -> SplitManifest:
    """Read a manifest written by :func:`save_split`.

    ``path`` may also be a directory holding ``train.txt``, ``val.txt`` and
    ``test.txt`` with one record index per line (the plain fallback format).
    When ``n_records`` is given the manifest is validated against it.
    """
    path = Path(path)
    if path.is_dir():
        m = _load_index_dir(path)
    else:
        try:
            doc = json.loads(path.read_text())
            m = SplitManifest(
                seed=doc["seed"],
                fractions=tuple(doc["fractions"]),
                train_indices=doc["train"],
                val_indices=doc["val"],
                test_indices=doc["test"],
                n_records=doc.get("n_records", -1),
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ManifestError(f"{path}: malformed split manifest ({exc})") from None
    if n_records is not None:
        m.validate(n_records)
    return m


def _load_index_dir(path):
    lists = []
    for name in ("train", "val", "test"):
        f = path / f"{name}.txt"
        if not f.exists():
            raise ManifestError(f"{path}: missing {name}.txt")
        try:
            lists.append([int(line) for line in f.read_text().split()])
        except ValueError as exc:
            raise ManifestError(f"{f}: {exc}") from None
    n = sum(len(x) for x in lists)
    fractions = tuple(len(x) / n for x in lists) if n else DEFAULT_FRACTIONS
    return SplitManifest(None, fractions, *lists)
