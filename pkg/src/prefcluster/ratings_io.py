"""Rating-matrix ingestion, binarization and the user-level train/test split.

Raw matrices hold ratings in [-10, 10] with the literal 99 marking a missing
rating.  Binary matrices use 1 (like), 0 (dislike) and -1 (missing).
"""

import io
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ParseError, RangeError, ShapeError

MISSING_RAW = 99.0
MISSING = -1
LIKE = 1
DISLIKE = 0
LIKE_THRESHOLD = 7.0
RATING_MIN = -10.0
RATING_MAX = 10.0


@dataclass(frozen=True)
class RawRatingMatrix:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ShapeError(f"raw ratings must be a non-empty 2-D matrix, got shape {v.shape}")
        ok = ((v >= RATING_MIN) & (v <= RATING_MAX)) | (v == MISSING_RAW)
        if not ok.all():
            r, c = np.argwhere(~ok)[0]
            raise RangeError(f"rating {v[r, c]!r} outside [-10, 10] and not 99", row=int(r), column=int(c))
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_users(self):
        return self.values.shape[0]

    @property
    def n_jokes(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class BinaryRatingMatrix:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ShapeError(f"binary ratings must be a non-empty 2-D matrix, got shape {v.shape}")
        if not np.isin(v, (LIKE, DISLIKE, MISSING)).all():
            raise RangeError("binary ratings must only contain 1, 0 or -1")
        v = v.astype(np.int8)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_users(self):
        return self.values.shape[0]

    @property
    def n_jokes(self):
        return self.values.shape[1]

    @property
    def observed(self):
        return self.values != MISSING

    def rows(self, idx):
        return BinaryRatingMatrix(self.values[np.asarray(idx, dtype=np.intp)])

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True)
class UserSplit:
    train_rows: tuple
    test_rows: tuple
    seed: int

    def to_dict(self):
        return {"train_rows": list(self.train_rows), "test_rows": list(self.test_rows), "seed": self.seed}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(int(i) for i in d["train_rows"]), tuple(int(i) for i in d["test_rows"]), int(d["seed"]))


def _detect_delimiter(line):
    if "," in line:
        return ","
    if "\t" in line:
        return "\t"
    return None  # any whitespace


def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8"))
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def load_ratings(source, has_count_column=False):
    """Parse delimited rating text into a :class:`RawRatingMatrix`.

    ``source`` may be a path, raw bytes, or a binary/text stream.  Comma and
    tab delimiters are detected from the first data line.  When
    ``has_count_column`` is set, each row starts with the number of rated
    jokes; it is checked against the row's non-99 entries and dropped.
    """
    fh = _open_text(source)
    rows = []
    delim = None
    width = None
    try:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if delim is None:
                delim = _detect_delimiter(line)
            fields = line.split(delim) if delim else line.split()
            values = []
            for col, field in enumerate(fields):
                try:
                    values.append(float(field))
                except ValueError:
                    raise ParseError(f"malformed number {field.strip()!r}", row=lineno, column=col) from None
                if not math.isfinite(values[-1]):
                    raise ParseError(f"non-finite number {field.strip()!r}", row=lineno, column=col)
            if has_count_column:
                if len(values) < 2:
                    raise ShapeError(f"row {lineno}: count column present but no ratings")
                count, values = values[0], values[1:]
                n_rated = sum(1 for v in values if v != MISSING_RAW)
                if count != n_rated:
                    raise ParseError(
                        f"count column says {count:g} but row has {n_rated} ratings", row=lineno, column=0
                    )
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise ShapeError(f"row {lineno} has {len(values)} ratings, expected {width}")
            offset = 1 if has_count_column else 0
            for col, v in enumerate(values):
                if v != MISSING_RAW and not (RATING_MIN <= v <= RATING_MAX):
                    raise RangeError(f"rating {v:g} outside [-10, 10] and not 99", row=lineno, column=col + offset)
            rows.append(values)
    finally:
        if fh is not source:
            fh.close()
    if not rows:
        raise ShapeError("no rating rows found")
    return RawRatingMatrix(np.array(rows, dtype=np.float64))


def binarize(raw):
    """Map ratings to like (>= 7), dislike (< 7) and missing (99 -> -1)."""
    v = raw.values if isinstance(raw, RawRatingMatrix) else RawRatingMatrix(raw).values
    out = np.where(v >= LIKE_THRESHOLD, LIKE, DISLIKE).astype(np.int8)
    out[v == MISSING_RAW] = MISSING
    return BinaryRatingMatrix(out)


def split_users(data, test_fraction=0.2, seed=0):
    """Hold out whole users: ``round(test_fraction * n_users)`` rows go to test."""
    n = data.n_users if isinstance(data, BinaryRatingMatrix) else int(np.asarray(data).shape[0])
    if not 0.0 < test_fraction < 1.0:
        raise ConfigurationError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if n < 2:
        raise ConfigurationError("need at least 2 users to split")
    n_test = int(math.floor(test_fraction * n + 0.5))
    if n_test == 0 or n_test == n:
        raise ConfigurationError(
            f"test_fraction={test_fraction} on {n} users leaves an empty {'test' if n_test == 0 else 'train'} set"
        )
    perm = np.random.default_rng(seed).permutation(n)
    test = tuple(sorted(int(i) for i in perm[:n_test]))
    train = tuple(sorted(int(i) for i in perm[n_test:]))
    return UserSplit(train, test, int(seed))


def write_binary(path, matrix):
    v = np.asarray(matrix, dtype=np.int8)
    with open(path, "w", encoding="utf-8") as fh:
        for row in v:
            fh.write(",".join(str(int(x)) for x in row))
            fh.write("\n")


def read_binary(path):
    try:
        v = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return BinaryRatingMatrix(v)
