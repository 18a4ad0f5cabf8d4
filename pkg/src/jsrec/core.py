"""Shared data types: supports, sign patterns, seeded generators and matrix I/O.

Dense matrices are plain ``numpy.ndarray`` objects of dtype float64; the
helpers here only validate and convert.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import AmbiguousSign

#: Default magnitude below which an entry has no well-defined sign.
ZERO_TOL = 1e-9


def as_matrix(data, name: str = "matrix") -> np.ndarray:
    """Return `data` as a finite 2-D float64 array.

    One-dimensional input is treated as a single column.
    """
    M = np.asarray(data, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {M.shape}")
    if M.shape[0] < 1 or M.shape[1] < 1:
        raise ValueError(f"{name} must have positive dimensions, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains NaN or Inf")
    return M


def as_vector(data, name: str = "vector") -> np.ndarray:
    v = np.asarray(data, dtype=np.float64)
    if v.ndim == 2 and 1 in v.shape:
        v = v.ravel()
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains NaN or Inf")
    return v


@dataclass(frozen=True)
class SupportSet:
    """Sorted, duplicate-free set of 0-based indices into ``range(ambient)``."""

    indices: tuple[int, ...]
    ambient: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"support indices must be strictly increasing: {idx}")
        if idx and (idx[0] < 0 or idx[-1] >= self.ambient):
            raise ValueError(f"support indices out of range for ambient {self.ambient}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, indices: Iterable[int], ambient: int) -> "SupportSet":
        """Build from any iterable, sorting and rejecting duplicates."""
        idx = [int(i) for i in indices]
        if len(set(idx)) != len(idx):
            raise ValueError(f"duplicate support indices: {idx}")
        return cls(tuple(sorted(idx)), int(ambient))

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)

    def complement(self) -> np.ndarray:
        mask = np.ones(self.ambient, dtype=bool)
        mask[list(self.indices)] = False
        return np.flatnonzero(mask)


def as_support(I, n: int) -> SupportSet:
    if isinstance(I, SupportSet):
        if I.ambient != n:
            raise ValueError(f"support ambient {I.ambient} does not match n={n}")
        return I
    return SupportSet.of(np.atleast_1d(np.asarray(I, dtype=int)).tolist(), n)


@dataclass(frozen=True)
class SignPattern:
    """A canonical (leading sign ``+1``) sign vector on a support.

    Patterns are identified with their negation, so ``(+,-,+)`` and
    ``(-,+,-)`` are the same object.
    """

    support: tuple[int, ...]
    signs: tuple[int, ...]

    def __post_init__(self):
        if len(self.signs) != len(self.support):
            raise ValueError("signs and support differ in length")
        if not self.signs:
            raise ValueError("empty sign pattern")
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError(f"signs must be +1/-1, got {self.signs}")
        if self.signs[0] != 1:
            raise ValueError("sign pattern is not canonical")

    def __str__(self) -> str:
        return "".join("+" if s > 0 else "-" for s in self.signs)

    def __len__(self) -> int:
        return len(self.signs)

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.signs, dtype=np.float64)

    @property
    def code(self) -> int:
        """Integer with bit ``k`` set when sign ``k`` is negative."""
        return sum(1 << k for k, s in enumerate(self.signs) if s < 0)

    @classmethod
    def from_code(cls, code: int, support: Sequence[int]) -> "SignPattern":
        signs = tuple(-1 if (code >> k) & 1 else 1 for k in range(len(support)))
        return canonicalize(signs, support)

    @classmethod
    def from_string(cls, text: str, support: Sequence[int] | None = None) -> "SignPattern":
        signs = [1 if c == "+" else -1 if c == "-" else 0 for c in text.strip()]
        if 0 in signs:
            raise ValueError(f"pattern string may only contain '+' and '-': {text!r}")
        return canonicalize(signs, support)


def canonicalize(signs: Sequence[float], support: Sequence[int] | None = None) -> SignPattern:
    """Return the negation-canonical pattern for `signs`.

    >>> str(canonicalize([-1, 1, -1]))
    '+-+'
    """
    s = np.sign(np.asarray(signs, dtype=np.float64)).astype(int)
    if s.size == 0:
        raise ValueError("cannot canonicalize an empty support")
    if np.any(s == 0):
        raise ValueError("signs must be nonzero")
    if s[0] < 0:
        s = -s
    if support is None:
        support = range(s.size)
    return SignPattern(tuple(int(i) for i in support), tuple(int(v) for v in s))


def sign_pattern_of(x, support, zero_tol: float = ZERO_TOL) -> SignPattern:
    """Canonical sign pattern of `x` restricted to `support`.

    Raises
    ------
    AmbiguousSign
        If some entry on the support has magnitude ``<= zero_tol``.
    """
    x = as_vector(x, "x")
    idx = list(support.indices) if isinstance(support, SupportSet) else [int(i) for i in support]
    vals = x[idx]
    small = np.flatnonzero(np.abs(vals) <= zero_tol)
    if small.size:
        raise AmbiguousSign(f"entry {idx[small[0]]} has magnitude {abs(vals[small[0]]):.3g} <= {zero_tol:g}")
    return canonicalize(vals, idx)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by ``(seed, *stream)``.

    Draw ``k`` depends only on the seed, the stream indices and ``k``, so
    trials keyed by their own index can run in any order.
    """
    mask = 2**64 - 1
    key = tuple(int(v) & mask for v in stream) or (0,)
    ss = np.random.SeedSequence(entropy=int(seed) & mask, spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def gaussian_matrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. standard normal ``rows x cols`` matrix, filled row-major."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be positive")
    return rng.standard_normal((rows, cols))


def normalize_columns(A: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise ValueError("matrix has a zero column")
    return A / norms


def numerical_rank(M: np.ndarray, rtol: float | None = None) -> int:
    """Rank with the cutoff ``||M||_2 * 1e-10 * max(shape)`` unless `rtol` is given."""
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    cutoff = sv[0] * (1e-10 * max(M.shape) if rtol is None else rtol)
    return int(np.sum(sv > cutoff))


# -- matrix files -----------------------------------------------------------


def format_float(v: float) -> str:
    return format(float(v), ".17g")


def write_matrix(path, M) -> None:
    """Write `M` as ``# rows cols`` followed by CSV rows at 17 significant digits."""
    M = as_matrix(M)
    lines = [f"# {M.shape[0]} {M.shape[1]}"]
    lines += [",".join(format_float(v) for v in row) for row in M]
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
        return
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def read_matrix(path) -> np.ndarray:
    """Read a matrix written by :func:`write_matrix` (LF or CRLF line ends)."""
    if hasattr(path, "read"):
        text = path.read()
    else:
        with open(os.fspath(path), "r", newline="") as fh:
            text = fh.read()
    if isinstance(text, bytes):
        text = text.decode()
    lines = [ln.strip() for ln in io.StringIO(text.replace("\r\n", "\n")).read().split("\n")]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].startswith("#"):
        raise ValueError("matrix file must start with a '# rows cols' header")
    try:
        rows, cols = (int(t) for t in lines[0][1:].split())
    except ValueError:
        raise ValueError(f"bad matrix header: {lines[0]!r}") from None
    body = lines[1:]
    if len(body) != rows:
        raise ValueError(f"header says {rows} rows, found {len(body)}")
    data = [[float(t) for t in ln.split(",")] for ln in body]
    if any(len(r) != cols for r in data):
        raise ValueError(f"every row must have {cols} entries")
    return as_matrix(np.array(data, dtype=np.float64).reshape(rows, cols))


@dataclass
class ProblemInstance:
    """One generated trial: ``B = A @ X0`` with ``X0`` row-supported on `support`."""

    A: np.ndarray
    X0: np.ndarray
    support: SupportSet
    B: np.ndarray | None = None

    def __post_init__(self):
        self.A = as_matrix(self.A, "A")
        self.X0 = as_matrix(self.X0, "X0")
        if self.X0.shape[0] != self.A.shape[1]:
            raise ValueError("X0 row count must equal the column count of A")
        self.support = as_support(self.support, self.A.shape[1])
        if self.B is None:
            self.B = self.A @ self.X0
        else:
            self.B = as_matrix(self.B, "B")


def max_abs_error(X, X0) -> float:
    return float(np.max(np.abs(np.asarray(X, dtype=float) - np.asarray(X0, dtype=float))))


def is_recovered(X, X0, tol: float = 1e-5) -> bool:
    """Entrywise recovery test ``max |X - X0| <= tol``; NaN counts as failure."""
    X = np.asarray(X, dtype=float)
    if X.shape != np.shape(X0) or not np.all(np.isfinite(X)):
        return False
    return max_abs_error(X, X0) <= tol


def random_support(n: int, s: int, rng: np.random.Generator) -> SupportSet:
    return SupportSet.of(rng.choice(n, size=s, replace=False).tolist(), n)


def row_sparse_matrix(support: SupportSet, r: int, rng: np.random.Generator) -> np.ndarray:
    """``n x r`` matrix with i.i.d. normal entries on the support rows, zero elsewhere."""
    X = np.zeros((support.ambient, r))
    X[support.array] = rng.standard_normal((len(support), r))
    return X
