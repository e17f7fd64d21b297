"""Partially observed matrices, submatrix descriptors and their file formats."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyDescriptor
from .linalg import as_dense


@dataclass(frozen=True, eq=False)
class ObservedMatrix:
    """Matrix known only on an index set Omega, stored as sorted triplets.

    Triplets are kept in row-major order so two matrices with the same
    entries compare (and serialize) identically.
    """

    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64).ravel()
        cols = np.asarray(self.cols, dtype=np.int64).ravel()
        values = np.asarray(self.values, dtype=np.float64).ravel()
        if not (rows.shape == cols.shape == values.shape):
            raise ValueError("rows, cols and values must have equal length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= self.n_rows:
                raise IndexError("row index out of range")
            if cols.min() < 0 or cols.max() >= self.n_cols:
                raise IndexError("column index out of range")
        if not np.all(np.isfinite(values)):
            raise ValueError("observed values must be finite")
        key = rows * self.n_cols + cols
        order = np.argsort(key, kind="stable")
        key = key[order]
        if key.size > 1 and np.any(key[1:] == key[:-1]):
            raise ValueError("duplicate (row, col) entries")
        for name, arr in (("rows", rows[order]), ("cols", cols[order]),
                          ("values", values[order])):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_dense(cls, M, mask=None) -> "ObservedMatrix":
        """Observe ``M`` where ``mask`` is true (everywhere when omitted)."""
        M = as_dense(M)
        if mask is None:
            mask = np.ones(M.shape, dtype=bool)
        r, c = np.nonzero(mask)
        return cls(M.shape[0], M.shape[1], r, c, M[r, c])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def n_observed(self) -> int:
        return int(self.values.size)

    @property
    def density(self) -> float:
        return self.n_observed / float(self.n_rows * self.n_cols)

    @property
    def fully_observed(self) -> bool:
        return self.n_observed == self.n_rows * self.n_cols

    def mask(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=bool)
        out[self.rows, self.cols] = True
        return out

    def transpose(self) -> "ObservedMatrix":
        return ObservedMatrix(self.n_cols, self.n_rows, self.cols, self.rows, self.values)

    def __eq__(self, other):
        if not isinstance(other, ObservedMatrix):
            return NotImplemented
        return (self.shape == other.shape
                and np.array_equal(self.rows, other.rows)
                and np.array_equal(self.cols, other.cols)
                and np.array_equal(self.values, other.values))

    __hash__ = None

    def __repr__(self):
        return (f"ObservedMatrix({self.n_rows}x{self.n_cols}, "
                f"{self.n_observed} observed)")


@dataclass(frozen=True)
class SubmatrixDescriptor:
    """Row set and column set (sorted, 0-based) of a submatrix."""

    rows: tuple[int, ...]
    cols: tuple[int, ...]

    def __post_init__(self):
        rows = tuple(sorted({int(i) for i in self.rows}))
        cols = tuple(sorted({int(j) for j in self.cols}))
        if not rows or not cols:
            raise EmptyDescriptor("descriptor needs at least one row and one column")
        if rows[0] < 0 or cols[0] < 0:
            raise IndexError("negative index in descriptor")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)

    @property
    def row_index(self) -> np.ndarray:
        return np.asarray(self.rows, dtype=np.int64)

    @property
    def col_index(self) -> np.ndarray:
        return np.asarray(self.cols, dtype=np.int64)

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), len(self.cols))

    @property
    def n_cells(self) -> int:
        return len(self.rows) * len(self.cols)

    def check(self, shape) -> None:
        if self.rows[-1] >= shape[0] or self.cols[-1] >= shape[1]:
            raise DimensionMismatch(
                f"descriptor indices exceed host shape {tuple(shape)}")

    def complement(self, shape) -> tuple[np.ndarray, np.ndarray]:
        """Rows and columns of the host matrix outside this descriptor."""
        self.check(shape)
        return (np.setdiff1d(np.arange(shape[0]), self.row_index),
                np.setdiff1d(np.arange(shape[1]), self.col_index))

    def block(self, M) -> np.ndarray:
        return np.asarray(M)[np.ix_(self.row_index, self.col_index)]

    def cell_mask(self, shape) -> np.ndarray:
        self.check(shape)
        out = np.zeros(shape, dtype=bool)
        out[np.ix_(self.row_index, self.col_index)] = True
        return out

    def lift(self, rows, cols) -> "SubmatrixDescriptor":
        """Map a descriptor expressed in this block's local indices to host indices."""
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        return SubmatrixDescriptor(self.row_index[rows], self.col_index[cols])

    @classmethod
    def full(cls, shape) -> "SubmatrixDescriptor":
        return cls(range(shape[0]), range(shape[1]))


def _in_block(M_obs: ObservedMatrix, d: SubmatrixDescriptor) -> np.ndarray:
    d.check(M_obs.shape)
    row_in = np.zeros(M_obs.n_rows, dtype=bool)
    col_in = np.zeros(M_obs.n_cols, dtype=bool)
    row_in[d.row_index] = True
    col_in[d.col_index] = True
    return row_in[M_obs.rows] & col_in[M_obs.cols]


def mask_uniform(M, observed_fraction: float, seed: int) -> ObservedMatrix:
    """Keep ``round(fraction * n * m)`` entries chosen uniformly without replacement."""
    M = as_dense(M)
    if not 0.0 <= observed_fraction <= 1.0:
        raise ValueError("observed_fraction must lie in [0, 1]")
    n, m = M.shape
    count = int(round(observed_fraction * n * m))
    rng = np.random.default_rng(seed)
    flat = np.sort(rng.choice(n * m, size=count, replace=False))
    r, c = np.divmod(flat, m)
    return ObservedMatrix(n, m, r, c, M[r, c])


def restrict(M_obs: ObservedMatrix, d: SubmatrixDescriptor) -> ObservedMatrix:
    """Observed entries inside ``d``, reindexed to the block's local coordinates."""
    keep = _in_block(M_obs, d)
    local_row = np.full(M_obs.n_rows, -1, dtype=np.int64)
    local_col = np.full(M_obs.n_cols, -1, dtype=np.int64)
    local_row[d.row_index] = np.arange(len(d.rows))
    local_col[d.col_index] = np.arange(len(d.cols))
    return ObservedMatrix(len(d.rows), len(d.cols),
                          local_row[M_obs.rows[keep]], local_col[M_obs.cols[keep]],
                          M_obs.values[keep])


def zero_out(M_obs: ObservedMatrix, d: SubmatrixDescriptor) -> ObservedMatrix:
    """Set observed values inside ``d`` to 0; Omega itself is unchanged."""
    values = np.where(_in_block(M_obs, d), 0.0, M_obs.values)
    return ObservedMatrix(M_obs.n_rows, M_obs.n_cols, M_obs.rows, M_obs.cols, values)


def delete_block(M_obs: ObservedMatrix, d: SubmatrixDescriptor) -> ObservedMatrix:
    """Drop observed entries inside ``d`` from Omega."""
    keep = ~_in_block(M_obs, d)
    return ObservedMatrix(M_obs.n_rows, M_obs.n_cols, M_obs.rows[keep],
                          M_obs.cols[keep], M_obs.values[keep])


def fill_zeros(M_obs: ObservedMatrix) -> np.ndarray:
    """Dense copy with unobserved cells set to 0."""
    out = np.zeros(M_obs.shape)
    out[M_obs.rows, M_obs.cols] = M_obs.values
    return out


# -- file formats -----------------------------------------------------------

def write_triplets(path, M_obs: ObservedMatrix) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{M_obs.n_rows},{M_obs.n_cols}\n")
        for i, j, v in zip(M_obs.rows.tolist(), M_obs.cols.tolist(),
                           M_obs.values.tolist()):
            fh.write(f"{i},{j},{v!r}\n")


def read_triplets(path) -> ObservedMatrix:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        try:
            n, m = (int(x) for x in header.strip().split(","))
        except ValueError:
            raise ValueError(f"{path}: bad header line {header.strip()!r}") from None
        rows, cols, values = [], [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected i,j,value")
            rows.append(int(parts[0]))
            cols.append(int(parts[1]))
            values.append(float(parts[2]))
    return ObservedMatrix(n, m, np.array(rows, dtype=np.int64),
                          np.array(cols, dtype=np.int64), np.array(values))


def format_descriptor(d: SubmatrixDescriptor) -> str:
    return ("rows: " + " ".join(map(str, d.rows)) + "\n"
            "cols: " + " ".join(map(str, d.cols)) + "\n")


def write_descriptor(path, d: SubmatrixDescriptor) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_descriptor(d))


def read_descriptor(path) -> SubmatrixDescriptor:
    fields = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            key, _, rest = line.partition(":")
            fields[key.strip()] = [int(x) for x in rest.split()]
    try:
        return SubmatrixDescriptor(fields["rows"], fields["cols"])
    except KeyError as exc:
        raise ValueError(f"{path}: missing '{exc.args[0]}:' line") from None
