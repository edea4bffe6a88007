"""Network database data model, directory format and missing-value handling.

A database is ``m`` samples over one shared universe of ``n`` nodes.  Each
sample carries a real value per node and, optionally, its own undirected
edge set that replaces the shared topology for that sample.

Directory layout::

    topology.json         {"nodes": [...], "edges": [[i, j], ...]}
    values.csv            sample_id,<node 0>,...,<node n-1>   (empty = missing)
    labels.csv            sample_id,label                     (optional, 0/1)
    edges_<sample>.csv    i,j rows                            (optional)
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import FormatError, ValidationError

Edge = tuple[int, int]

TOPOLOGY_FILE = "topology.json"
VALUES_FILE = "values.csv"
LABELS_FILE = "labels.csv"
EDGE_FILE_PREFIX = "edges_"


def normalize_edge(i: int, j: int, n: int) -> Edge:
    """Return ``(min, max)`` for an undirected pair, rejecting loops and bad indices."""
    if isinstance(i, bool) or isinstance(j, bool):
        raise ValidationError(f"edge ({i}, {j}) has non-integer endpoints")
    try:
        a, b = int(i), int(j)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"edge ({i}, {j}) has non-integer endpoints") from exc
    if a != i or b != j:
        raise ValidationError(f"edge ({i}, {j}) has non-integer endpoints")
    if a == b:
        raise ValidationError(f"self-loop ({a}, {a}) is not allowed")
    if not (0 <= a < n and 0 <= b < n):
        raise ValidationError(f"edge ({a}, {b}) references a node outside 0..{n - 1}")
    return (a, b) if a < b else (b, a)


def _edge_set(edges: Iterable[Iterable[int]], n: int) -> frozenset[Edge]:
    out = set()
    for pair in edges:
        pair = tuple(pair)
        if len(pair) != 2:
            raise ValidationError(f"edge {pair!r} must have exactly two endpoints")
        out.add(normalize_edge(pair[0], pair[1], n))
    return frozenset(out)


@dataclass(frozen=True, eq=False)
class NetworkSample:
    """One network sample: node values plus an optional private edge set."""

    sample_id: str
    values: np.ndarray
    edge_override: frozenset[Edge] | None = None
    missing_mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValidationError(f"sample {self.sample_id!r}: values must be a vector")
        if self.missing_mask is None:
            mask = np.isnan(values)
        else:
            mask = np.array(self.missing_mask, dtype=bool)
            if mask.shape != values.shape:
                raise ValidationError(
                    f"sample {self.sample_id!r}: missing_mask length {mask.size} != {values.size}"
                )
        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "missing_mask", mask)
        if self.edge_override is not None:
            object.__setattr__(self, "edge_override", frozenset(self.edge_override))


@dataclass(frozen=True, eq=False)
class NetworkDatabase:
    """Validated, immutable collection of network samples sharing a node universe."""

    node_ids: tuple[str, ...]
    shared_edges: frozenset[Edge]
    samples: tuple[NetworkSample, ...]
    labels: Mapping[str, int] | None = None
    _index: dict[str, int] = field(init=False, repr=False)
    _matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        node_ids = tuple(str(v) for v in self.node_ids)
        object.__setattr__(self, "node_ids", node_ids)
        n = len(node_ids)
        seen: set[str] = set()
        for v in node_ids:
            if v in seen:
                raise ValidationError(f"duplicate node id {v!r}")
            seen.add(v)
        object.__setattr__(self, "shared_edges", _edge_set(self.shared_edges, n))

        samples = tuple(self.samples)
        object.__setattr__(self, "samples", samples)
        if len(samples) < 2:
            raise ValidationError(f"a database needs at least 2 samples, got {len(samples)}")
        index: dict[str, int] = {}
        for k, s in enumerate(samples):
            if s.sample_id in index:
                raise ValidationError(f"duplicate sample id {s.sample_id!r}")
            index[s.sample_id] = k
            if s.values.size != n:
                raise ValidationError(
                    f"sample {s.sample_id!r} has {s.values.size} values, expected {n}"
                )
            if s.edge_override is not None:
                for i, j in s.edge_override:
                    normalize_edge(i, j, n)
        object.__setattr__(self, "_index", index)

        if self.labels is not None:
            labels = {}
            for sid, lab in self.labels.items():
                if sid not in index:
                    raise ValidationError(f"label given for unknown sample {sid!r}")
                if lab not in (0, 1):
                    raise ValidationError(f"label for {sid!r} must be 0 or 1, got {lab!r}")
                labels[sid] = int(lab)
            object.__setattr__(self, "labels", labels)

        matrix = np.vstack([s.values for s in samples])
        matrix.setflags(write=False)
        object.__setattr__(self, "_matrix", matrix)

    @property
    def n(self) -> int:
        return len(self.node_ids)

    @property
    def m(self) -> int:
        return len(self.samples)

    @property
    def sample_ids(self) -> list[str]:
        return [s.sample_id for s in self.samples]

    @property
    def values(self) -> np.ndarray:
        """Read-only ``(m, n)`` matrix of node values (NaN where missing and not imputed)."""
        return self._matrix

    @property
    def missing(self) -> np.ndarray:
        return np.vstack([s.missing_mask for s in self.samples])

    def index_of(self, sample_id: str) -> int:
        try:
            return self._index[sample_id]
        except KeyError:
            raise ValidationError(f"unknown sample id {sample_id!r}") from None

    def sample(self, sample_id: str) -> NetworkSample:
        return self.samples[self.index_of(sample_id)]

    def with_values(self, matrix: np.ndarray) -> NetworkDatabase:
        """Copy of the database with the value matrix replaced; masks and edges kept."""
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape != (self.m, self.n):
            raise ValidationError(f"value matrix shape {matrix.shape} != {(self.m, self.n)}")
        samples = tuple(
            NetworkSample(s.sample_id, row, s.edge_override, s.missing_mask)
            for s, row in zip(self.samples, matrix)
        )
        return NetworkDatabase(self.node_ids, self.shared_edges, samples, self.labels)

    def equals(self, other: NetworkDatabase) -> bool:
        """Field-for-field equality (NaN compares equal to NaN)."""
        if not isinstance(other, NetworkDatabase):
            return False
        if self.node_ids != other.node_ids or self.shared_edges != other.shared_edges:
            return False
        if (self.labels or None) != (other.labels or None):
            return False
        if len(self.samples) != len(other.samples):
            return False
        for a, b in zip(self.samples, other.samples):
            if a.sample_id != b.sample_id or a.edge_override != b.edge_override:
                return False
            if not np.array_equal(a.values, b.values, equal_nan=True):
                return False
            if not np.array_equal(a.missing_mask, b.missing_mask):
                return False
        return True


def effective_edges(db: NetworkDatabase, sample_id: str) -> frozenset[Edge]:
    """Edge set used for ``sample_id``: its override if present, else the shared topology."""
    sample = db.sample(sample_id)
    return sample.edge_override if sample.edge_override is not None else db.shared_edges


def impute_missing(db: NetworkDatabase) -> NetworkDatabase:
    """Fill masked cells with the node's mean over unmasked samples (0 if none).

    Masks are preserved so reports can still tell which cells were observed.
    """
    mask = db.missing
    if not mask.any():
        return db
    values = np.array(db.values, dtype=np.float64)
    observed = ~mask
    counts = observed.sum(axis=0)
    sums = np.where(observed, values, 0.0).sum(axis=0)
    means = np.divide(sums, counts, out=np.zeros(db.n), where=counts > 0)
    values[mask] = np.broadcast_to(means, values.shape)[mask]
    return db.with_values(values)


# -- directory I/O ---------------------------------------------------------


def _read_csv(path: Path) -> list[list[str]]:
    try:
        with path.open(newline="") as fh:
            return [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


def _parse_cell(text: str, where: str) -> float:
    text = text.strip()
    if text == "":
        return math.nan
    try:
        value = float(text)
    except ValueError:
        raise FormatError(f"{where}: {text!r} is not a number") from None
    if not math.isfinite(value):
        raise FormatError(f"{where}: non-finite value {text!r}")
    return value


def load_database(path: str | Path) -> NetworkDatabase:
    """Read and validate a database directory.

    Raises
    ------
    FormatError
        A required file is missing or unparsable.
    ValidationError
        Duplicate node ids, bad edges, or a values row of the wrong length.
    """
    root = Path(path)
    topo_path = root / TOPOLOGY_FILE
    if not topo_path.is_file():
        raise FormatError(f"missing {TOPOLOGY_FILE} in {root}")
    try:
        topo = json.loads(topo_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot parse {topo_path}: {exc}") from exc
    if not isinstance(topo, dict) or "nodes" not in topo:
        raise FormatError(f"{topo_path} must be an object with a 'nodes' list")
    node_ids = [str(v) for v in topo["nodes"]]
    n = len(node_ids)
    if len(set(node_ids)) != n:
        dup = next(v for k, v in enumerate(node_ids) if v in node_ids[:k])
        raise ValidationError(f"duplicate node id {dup!r} in {TOPOLOGY_FILE}")
    shared = _edge_set(topo.get("edges", []), n)

    values_path = root / VALUES_FILE
    if not values_path.is_file():
        raise FormatError(f"missing {VALUES_FILE} in {root}")
    rows = _read_csv(values_path)
    if not rows:
        raise FormatError(f"{values_path} is empty")
    header = [h.strip() for h in rows[0]]
    if header[0] != "sample_id":
        raise FormatError(f"{values_path}: first header column must be 'sample_id'")
    columns = header[1:]
    if sorted(columns) != sorted(node_ids) or len(columns) != n:
        raise ValidationError(f"{values_path}: header node ids do not match topology.json")
    order = [columns.index(v) for v in node_ids]

    samples = []
    for lineno, row in enumerate(rows[1:], start=2):
        sid = row[0].strip()
        if len(row) - 1 != n:
            raise ValidationError(
                f"{VALUES_FILE} row {lineno} ({sid!r}) has {len(row) - 1} values, expected {n}"
            )
        raw = [_parse_cell(c, f"{VALUES_FILE} row {lineno}") for c in row[1:]]
        vals = np.array([raw[k] for k in order])
        override = None
        edge_path = root / f"{EDGE_FILE_PREFIX}{sid}.csv"
        if edge_path.is_file():
            pairs = []
            for r in _read_csv(edge_path):
                try:
                    pairs.append((int(r[0]), int(r[1])))
                except (ValueError, IndexError):
                    raise FormatError(f"{edge_path}: bad edge row {r!r}") from None
            override = _edge_set(pairs, n)
        samples.append(NetworkSample(sid, vals, override))

    labels = None
    labels_path = root / LABELS_FILE
    if labels_path.is_file():
        lrows = _read_csv(labels_path)
        if not lrows or [c.strip() for c in lrows[0][:2]] != ["sample_id", "label"]:
            raise FormatError(f"{labels_path}: header must be 'sample_id,label'")
        labels = {}
        for r in lrows[1:]:
            try:
                labels[r[0].strip()] = int(r[1])
            except (ValueError, IndexError):
                raise FormatError(f"{labels_path}: bad row {r!r}") from None
    return NetworkDatabase(tuple(node_ids), shared, tuple(samples), labels)


def write_database(db: NetworkDatabase, path: str | Path) -> Path:
    """Write ``db`` in directory format; NaN cells are written empty.

    ``load_database(write_database(db))`` reproduces ``db`` whenever each
    sample's missing mask coincides with its NaN cells, which holds for every
    loaded or generated database.
    """
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    topo = {"nodes": list(db.node_ids), "edges": [list(e) for e in sorted(db.shared_edges)]}
    (root / TOPOLOGY_FILE).write_text(json.dumps(topo, indent=1) + "\n")
    with (root / VALUES_FILE).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", *db.node_ids])
        for s in db.samples:
            w.writerow([s.sample_id, *("" if math.isnan(v) else repr(float(v)) for v in s.values)])
    for s in db.samples:
        if s.edge_override is not None:
            with (root / f"{EDGE_FILE_PREFIX}{s.sample_id}.csv").open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerows(sorted(s.edge_override))
    if db.labels is not None:
        with (root / LABELS_FILE).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sample_id", "label"])
            for sid in db.sample_ids:
                if sid in db.labels:
                    w.writerow([sid, db.labels[sid]])
    return root
