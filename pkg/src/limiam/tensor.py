"""Symmetric moment tensors and the unit-lower-triangular group action.

Tensors are stored as dense maps over nondecreasing multi-indices, which is
exact and convenient at desk scale (dim <= 10, order <= 6).  The module
provides the multilinear action of unit lower triangular matrices, the
triangular ("higher-order LDL") elimination that zeroes the just-off-diagonal
entries, the two-node reversed factorization that witnesses order
non-identifiability from a single coupled pair (matrix, tensor), and moment /
fourth-cumulant utilities.

Everything is immutable after construction; all operations are pure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, NamedTuple

import numpy as np
from scipy.linalg import solve_triangular


class DegenerateTensorError(ValueError):
    """Raised when an elimination pivot is too small relative to its block."""


def _canonical(index) -> tuple[int, ...]:
    return tuple(sorted(int(i) for i in index))


def _canonical_indices(dim: int, order: int):
    return itertools.combinations_with_replacement(range(dim), order)


@dataclass(frozen=True)
class SymmetricTensor:
    """Order-``d`` symmetric tensor over R^p.

    One value is stored per nondecreasing multi-index (C(p+d-1, d) entries);
    lookup with any permutation of an index returns the same value.
    """

    order: int
    dim: int
    values: Mapping[tuple[int, ...], float]

    def __post_init__(self):
        if self.order < 2:
            raise ValueError(f"tensor order must be >= 2, got {self.order}")
        if self.dim < 1:
            raise ValueError(f"tensor dim must be >= 1, got {self.dim}")
        data = {tuple(k): float(v) for k, v in dict(self.values).items()}
        expected = set(_canonical_indices(self.dim, self.order))
        if set(data) != expected:
            raise ValueError(
                f"expected one value per nondecreasing multi-index "
                f"({len(expected)} entries for dim={self.dim}, "
                f"order={self.order}), got {len(data)} keys"
            )
        object.__setattr__(self, "values", MappingProxyType(data))

    @classmethod
    def zeros(cls, order: int, dim: int) -> "SymmetricTensor":
        return cls(order, dim, {k: 0.0 for k in _canonical_indices(dim, order)})

    @classmethod
    def from_entries(cls, order: int, dim: int, entries) -> "SymmetricTensor":
        """Build from an index -> value mapping; unspecified entries are 0.

        Indices may be given in any order; they are canonicalized.  Two
        entries that collide after sorting must agree.
        """
        data = {k: 0.0 for k in _canonical_indices(dim, order)}
        items = entries.items() if isinstance(entries, Mapping) else entries
        for index, value in items:
            key = _canonical(index)
            if key not in data:
                raise ValueError(f"index {index} out of range for dim {dim}")
            if data[key] != 0.0 and data[key] != float(value):
                raise ValueError(f"conflicting values for index {key}")
            data[key] = float(value)
        return cls(order, dim, data)

    @classmethod
    def from_dense(cls, array: np.ndarray) -> "SymmetricTensor":
        array = np.asarray(array, dtype=float)
        order = array.ndim
        dim = array.shape[0]
        if array.shape != (dim,) * order:
            raise ValueError(f"dense array must be hypercubic, got {array.shape}")
        values = {k: float(array[k]) for k in _canonical_indices(dim, order)}
        return cls(order, dim, values)

    def to_dense(self) -> np.ndarray:
        out = np.empty((self.dim,) * self.order, dtype=float)
        for key, value in self.values.items():
            for perm in set(itertools.permutations(key)):
                out[perm] = value
        return out

    def __getitem__(self, index) -> float:
        return self.values[_canonical(index)]

    def items(self):
        """Entries in lexicographic canonical-index order."""
        for key in _canonical_indices(self.dim, self.order):
            yield key, self.values[key]

    def max_abs(self) -> float:
        return max(abs(v) for v in self.values.values())

    def allclose(self, other: "SymmetricTensor", rtol=1e-10, atol=1e-12) -> bool:
        if (self.order, self.dim) != (other.order, other.dim):
            return False
        return all(
            abs(v - other.values[k]) <= atol + rtol * max(abs(v), abs(other.values[k]))
            for k, v in self.values.items()
        )

    def to_json_dict(self) -> dict:
        return {
            "order": self.order,
            "dim": self.dim,
            "entries": [[list(k), v] for k, v in self.items()],
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "SymmetricTensor":
        return cls.from_entries(
            int(payload["order"]),
            int(payload["dim"]),
            [(tuple(k), v) for k, v in payload["entries"]],
        )

    def __repr__(self):
        return f"SymmetricTensor(order={self.order}, dim={self.dim})"


@dataclass(frozen=True)
class UnitLowerTriangular:
    """A p x p lower triangular matrix with unit diagonal."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got shape {m.shape}")
        if np.any(np.triu(m, 1) != 0.0):
            raise ValueError("entries above the diagonal must be zero")
        if np.any(np.diag(m) != 1.0):
            raise ValueError("diagonal must be exactly one")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, dim: int) -> "UnitLowerTriangular":
        return cls(np.eye(dim))

    @classmethod
    def with_entries(cls, dim: int, entries: Mapping[tuple[int, int], float]):
        m = np.eye(dim)
        for (i, j), value in entries.items():
            if not i > j:
                raise ValueError(f"strict lower entry required, got ({i}, {j})")
            m[i, j] = float(value)
        return cls(m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def inverse(self) -> "UnitLowerTriangular":
        inv = solve_triangular(
            self.matrix, np.eye(self.dim), lower=True, unit_diagonal=True
        )
        return UnitLowerTriangular(inv)

    def __matmul__(self, other: "UnitLowerTriangular") -> "UnitLowerTriangular":
        return UnitLowerTriangular(self.matrix @ other.matrix)

    def __eq__(self, other):
        if not isinstance(other, UnitLowerTriangular):
            return NotImplemented
        return np.array_equal(self.matrix, other.matrix)


def _mode_apply(matrix: np.ndarray, dense: np.ndarray) -> np.ndarray:
    # Contract `matrix` against every mode; each tensordot consumes the
    # leading axis and appends the transformed one, so d steps restore the
    # original axis order.
    out = dense
    for _ in range(dense.ndim):
        out = np.tensordot(out, matrix, axes=(0, 1))
    return out


def tensor_action(a: UnitLowerTriangular, s: SymmetricTensor) -> SymmetricTensor:
    """Multilinear action ``[a * s]_{i1..id} = sum a_{i1 j1}...a_{id jd} s_{j1..jd}``.

    For order 2 this is the congruence a @ S @ a.T.  Order and dim are
    preserved and the result is symmetric.
    """
    if a.dim != s.dim:
        raise ValueError(f"dimension mismatch: matrix {a.dim}, tensor {s.dim}")
    return SymmetricTensor.from_dense(_mode_apply(a.matrix, s.to_dense()))


def relabel(s: SymmetricTensor, perm) -> SymmetricTensor:
    """Relabel variables: new[i1..id] = old[perm[i1]..perm[id]]."""
    perm = list(perm)
    if sorted(perm) != list(range(s.dim)):
        raise ValueError(f"perm must be a permutation of 0..{s.dim - 1}")
    dense = s.to_dense()[np.ix_(*([perm] * s.order))]
    return SymmetricTensor.from_dense(dense)


def higher_order_ldl(
    t: SymmetricTensor, pivot_rtol: float = 1e-12
) -> tuple[UnitLowerTriangular, SymmetricTensor]:
    """Factor ``t = L * D`` with L unit lower triangular and D_{i..i,j} = 0 (i < j).

    Recursive elimination: at level r the multipliers
    ``M_{jr} = -t_{r..r,j} / t_{r..r}`` zero the entries (r,..,r,j) for j > r,
    then the trailing block is reduced the same way.  The accumulated
    elimination matrix M gives L = M^{-1} and D = M * t.

    Pivots are checked against ``pivot_rtol`` times the largest absolute
    entry of the current trailing block (scale-aware genericity check).

    Returns
    -------
    (L, D) with ``tensor_action(L, D)`` equal to ``t`` up to roundoff.

    Raises
    ------
    DegenerateTensorError
        If a pivot magnitude falls below tolerance; the message names the
        failing elimination level.
    """
    p, d = t.dim, t.order
    work = t.to_dense()
    m_total = np.eye(p)
    for level in range(p - 1):
        block = work[(slice(level, None),) * d]
        scale = float(np.max(np.abs(block)))
        if scale == 0.0:
            break  # trailing block vanishes; pattern already satisfied
        column = work[(level,) * (d - 1)]
        below = np.array(column[level + 1 :], copy=True)
        if not np.any(below):
            continue
        pivot = float(work[(level,) * d])
        if abs(pivot) < pivot_rtol * scale:
            raise DegenerateTensorError(
                f"pivot {pivot:.3e} at elimination level {level} is below "
                f"{pivot_rtol:.1e} times the block scale {scale:.3e}"
            )
        e = np.eye(p)
        e[level + 1 :, level] = -below / pivot
        work = _mode_apply(e, work)
        m_total = e @ m_total
    l_factor = UnitLowerTriangular(m_total).inverse()
    return l_factor, SymmetricTensor.from_dense(work)


@dataclass(frozen=True)
class TriangularPattern:
    """Zero pattern S_{i,..,i,j} = 0 for a chosen set of pairs i < j."""

    dim: int
    zero_pairs: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        pairs = frozenset((int(i), int(j)) for i, j in self.zero_pairs)
        for i, j in pairs:
            if not 0 <= i < j < self.dim:
                raise ValueError(f"pair ({i}, {j}) not strictly upper in dim {self.dim}")
        object.__setattr__(self, "zero_pairs", pairs)

    @classmethod
    def full(cls, dim: int) -> "TriangularPattern":
        return cls(dim, frozenset((i, j) for i in range(dim) for j in range(i + 1, dim)))

    def violations(self, s: SymmetricTensor, tol: float = 1e-10):
        """Pairs whose pattern entry exceeds ``tol`` in absolute value."""
        if s.dim != self.dim:
            raise ValueError("dimension mismatch")
        bad = []
        for i, j in sorted(self.zero_pairs):
            if abs(s[(i,) * (s.order - 1) + (j,)]) > tol:
                bad.append((i, j))
        return bad

    def satisfied_by(self, s: SymmetricTensor, tol: float = 1e-10) -> bool:
        return not self.violations(s, tol)


@dataclass(frozen=True)
class TwoNodeFactorization:
    """One triangular factorization of a coupled (matrix, tensor) pair.

    ``swapped`` marks the factorization computed in variable-reversed
    coordinates (source order 2 < 1); ``reconstruct`` always returns the
    pair in the original labeling.
    """

    mixing: UnitLowerTriangular
    second_moment_diag: np.ndarray
    core: SymmetricTensor
    swapped: bool

    @property
    def coefficient(self) -> float:
        return float(self.mixing.matrix[1, 0])

    def reconstruct(self) -> tuple[np.ndarray, SymmetricTensor]:
        a = self.mixing.matrix
        m = a @ np.diag(self.second_moment_diag) @ a.T
        t = tensor_action(self.mixing, self.core)
        if self.swapped:
            m = m[::-1, ::-1]
            t = relabel(t, (1, 0))
        return m, t


def reversed_factorization(
    m: np.ndarray, t: SymmetricTensor
) -> tuple[TwoNodeFactorization, TwoNodeFactorization]:
    """Factor a 2x2 matrix / dim-2 tensor pair under both source orders.

    The forward factorization uses mixing coefficient a = m01 / m00, the
    reversed one (in swapped coordinates) uses m01 / m11.  Both reconstruct
    (m, t) exactly, exhibiting two admissible parameterizations of the same
    coupled pair once the single off-diagonal zero constraint is dropped.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (2, 2):
        raise ValueError(f"m must be 2x2, got {m.shape}")
    if abs(m[0, 1] - m[1, 0]) > 1e-12 * max(1.0, abs(m[0, 1])):
        raise ValueError("m must be symmetric")
    if t.dim != 2:
        raise ValueError(f"tensor dim must be 2, got {t.dim}")
    if m[0, 0] == 0.0 or m[1, 1] == 0.0:
        raise ValueError("diagonal entries of m must be nonzero")

    def _factor(mat: np.ndarray, tens: SymmetricTensor, swapped: bool):
        a = mat[0, 1] / mat[0, 0]
        mixing = UnitLowerTriangular.with_entries(2, {(1, 0): a})
        inv = mixing.inverse()
        d_full = inv.matrix @ mat @ inv.matrix.T
        core = tensor_action(inv, tens)
        return TwoNodeFactorization(mixing, np.diag(d_full).copy(), core, swapped)

    forward = _factor(m, t, swapped=False)
    reverse = _factor(m[::-1, ::-1], relabel(t, (1, 0)), swapped=True)
    return forward, reverse


def moments_from_samples(x: np.ndarray, d: int) -> SymmetricTensor:
    """Empirical moment tensor: entry (i1..id) = mean of x_i1 * ... * x_id."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"sample matrix must be 2-D, got ndim {x.ndim}")
    if x.shape[0] < 1:
        raise ValueError("empty sample")
    if d < 2:
        raise ValueError(f"moment order must be >= 2, got {d}")
    p = x.shape[1]
    values = {
        idx: float(np.mean(np.prod(x[:, idx], axis=1)))
        for idx in _canonical_indices(p, d)
    }
    return SymmetricTensor(d, p, values)


class Cumulants4(NamedTuple):
    k1: float
    k2: float
    c: float
    k1112: float
    k1222: float


def fourth_cumulants_2d(data) -> Cumulants4:
    """Fourth cumulants of a mean-centered bivariate variable.

    Accepts either an (n, 2) sample matrix or a pair
    ``(second_moments, fourth_moments)`` of dim-2 SymmetricTensors.  Uses the
    zero-mean moment-to-cumulant conversion, e.g.
    ``k1122 = E[x1^2 x2^2] - E[x1^2] E[x2^2] - 2 E[x1 x2]^2``.
    """
    if isinstance(data, tuple) and len(data) == 2 and isinstance(data[0], SymmetricTensor):
        m2, m4 = data
    else:
        x = np.asarray(data, dtype=float)
        if x.ndim != 2 or x.shape[1] != 2:
            raise ValueError(f"expected an (n, 2) sample matrix, got shape {x.shape}")
        m2 = moments_from_samples(x, 2)
        m4 = moments_from_samples(x, 4)
    if m2.dim != 2 or m4.dim != 2 or m2.order != 2 or m4.order != 4:
        raise ValueError("need a dim-2 pair of order-2 and order-4 tensors")
    v1, v2, cross = m2[0, 0], m2[1, 1], m2[0, 1]
    k1 = m4[0, 0, 0, 0] - 3.0 * v1 * v1
    k2 = m4[1, 1, 1, 1] - 3.0 * v2 * v2
    c = m4[0, 0, 1, 1] - v1 * v2 - 2.0 * cross * cross
    k1112 = m4[0, 0, 0, 1] - 3.0 * v1 * cross
    k1222 = m4[0, 1, 1, 1] - 3.0 * v2 * cross
    return Cumulants4(k1, k2, c, k1112, k1222)
