"""Dense in-memory datasets: LIBSVM parsing, max-min scaling, synthetic ridge data."""
from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, TextIO, Union

import numpy as np

logger = logging.getLogger(__name__)


class LibsvmParseError(ValueError):
    """Malformed LIBSVM input. ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: Optional[int] = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class EmptyInputError(LibsvmParseError):
    pass


class DimensionError(LibsvmParseError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix ``features`` (n x d) and regression targets (n,).

    Arrays are made read-only on construction so a Dataset can be shared
    between concurrent runs.
    """

    features: np.ndarray
    targets: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64, copy=True)
        y = np.array(self.targets, dtype=np.float64, copy=True).reshape(-1)
        if X.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {X.shape}")
        n, d = X.shape
        if n < 1 or d < 1:
            raise ValueError(f"dataset needs n >= 1 and d >= 1, got {X.shape}")
        if y.shape[0] != n:
            raise ValueError(f"targets has length {y.shape[0]}, expected {n}")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ValueError("dataset contains non-finite values")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.features.shape == other.features.shape
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.targets, other.targets)
        )

    __hash__ = None


def _parse_float(token: str, lineno: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise LibsvmParseError(f"non-numeric {what} {token!r}", lineno) from None
    if not math.isfinite(value):
        raise LibsvmParseError(f"non-finite {what} {token!r}", lineno)
    return value


def parse_libsvm(
    stream: Union[TextIO, Iterable[str], str],
    expected_dim: Optional[int] = None,
    name: str = "libsvm",
) -> Dataset:
    """Parse LIBSVM text (``label idx:val ...``) into a dense :class:`Dataset`.

    Indices are 1-based and must be strictly increasing within a line.
    Blank lines and ``#`` comments are skipped. Absent entries are 0.0.
    """
    if expected_dim is not None and expected_dim < 1:
        raise ValueError("expected_dim must be a positive integer")
    if isinstance(stream, str):
        stream = io.StringIO(stream)

    labels = []
    rows_idx = []
    rows_val = []
    max_index = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        labels.append(_parse_float(tokens[0], lineno, "label"))
        idx = []
        val = []
        prev = 0
        for tok in tokens[1:]:
            key, sep, value = tok.partition(":")
            if not sep:
                raise LibsvmParseError(f"expected idx:val, got {tok!r}", lineno)
            try:
                j = int(key)
            except ValueError:
                raise LibsvmParseError(f"non-integer index {key!r}", lineno) from None
            if j <= 0:
                raise LibsvmParseError(f"index must be >= 1, got {j}", lineno)
            if j <= prev:
                raise LibsvmParseError(
                    f"indices must be strictly increasing ({prev} then {j})", lineno
                )
            if expected_dim is not None and j > expected_dim:
                raise DimensionError(
                    f"index {j} exceeds expected dimension {expected_dim}", lineno
                )
            prev = j
            idx.append(j - 1)
            val.append(_parse_float(value, lineno, "value"))
        max_index = max(max_index, prev)
        rows_idx.append(idx)
        rows_val.append(val)

    if not labels:
        raise EmptyInputError("no samples in input")
    d = expected_dim if expected_dim is not None else max_index
    if d < 1:
        raise DimensionError("no feature indices seen and no expected_dim given")

    X = np.zeros((len(labels), d))
    for i, (idx, val) in enumerate(zip(rows_idx, rows_val)):
        X[i, idx] = val
    return Dataset(X, np.asarray(labels), name=name)


def load_libsvm(path: Union[str, Path], expected_dim: Optional[int] = None) -> Dataset:
    path = Path(path)
    with path.open("r") as fh:
        return parse_libsvm(fh, expected_dim=expected_dim, name=path.stem)


def dump_libsvm(ds: Dataset) -> str:
    """Serialize to LIBSVM text, omitting zero entries. ``repr`` keeps floats exact."""
    lines = []
    for x, y in zip(ds.features, ds.targets):
        nz = np.flatnonzero(x)
        parts = [repr(float(y))]
        parts.extend(f"{j + 1}:{float(x[j])!r}" for j in nz)
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def maxmin_scale(ds: Dataset) -> Dataset:
    """Map every feature column onto [-1, 1]; constant columns become 0."""
    from .preprocessing import maxmin_transform

    lo = ds.features.min(axis=0)
    hi = ds.features.max(axis=0)
    return Dataset(maxmin_transform(ds.features, lo, hi), ds.targets, name=ds.name)


def synth_ridge(n: int, d: int, noise_sd: float = 0.1, seed: int = 0,
                name: Optional[str] = None):
    """Random ridge instance: features U[-1, 1], targets ``X @ w_true + noise``.

    Returns ``(dataset, w_true)``. ``w_true`` is standard normal.
    """
    if n < 1 or d < 1:
        raise ValueError(f"synth_ridge needs n >= 1 and d >= 1, got n={n}, d={d}")
    if noise_sd < 0:
        raise ValueError("noise_sd must be nonnegative")
    if n < d:
        logger.warning("synth_ridge: n=%d < d=%d, least-squares part is rank deficient", n, d)
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(n, d))
    w_true = rng.standard_normal(d)
    y = X @ w_true
    if noise_sd > 0:
        y = y + noise_sd * rng.standard_normal(n)
    label = name or f"synth_n{n}_d{d}_s{seed}"
    return Dataset(X, y, name=label), w_true
