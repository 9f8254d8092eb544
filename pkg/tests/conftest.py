"""Shared helpers for building random test instances."""

from __future__ import annotations

import itertools

import numpy as np

from limiam.tensor import SymmetricTensor, UnitLowerTriangular


def random_unit_lower(rng: np.random.Generator, p: int, scale=1.0) -> UnitLowerTriangular:
    m = np.eye(p)
    idx = np.tril_indices(p, -1)
    m[idx] = scale * rng.normal(size=len(idx[0]))
    return UnitLowerTriangular(m)


def random_symmetric_tensor(rng: np.random.Generator, p: int, d: int) -> SymmetricTensor:
    values = {
        key: float(rng.normal())
        for key in itertools.combinations_with_replacement(range(p), d)
    }
    return SymmetricTensor(d, p, values)


def random_pattern_tensor(rng: np.random.Generator, p: int, d: int) -> SymmetricTensor:
    """Random tensor with the just-off-diagonal entries (i,..,i,j), i<j zeroed."""
    tensor = random_symmetric_tensor(rng, p, d)
    values = dict(tensor.values)
    for i in range(p):
        for j in range(i + 1, p):
            values[tuple(sorted((i,) * (d - 1) + (j,)))] = 0.0
    # keep pivots comfortably away from zero so elimination is well-posed
    for i in range(p):
        diag = (i,) * d
        if abs(values[diag]) < 0.3:
            values[diag] = 0.3 if values[diag] >= 0 else -0.3
    return SymmetricTensor(d, p, values)
