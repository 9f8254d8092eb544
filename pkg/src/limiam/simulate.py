"""Data-generating processes for the synthetic benchmark.

Random dense DAGs with coefficients on [0.3, 0.8], four symmetric auxiliary
distributions on [-1, 1], and four disturbance dependence designs.  The
non-independent designs scale or mix a fresh centered auxiliary draw by a
function of the previous disturbances, so each column has conditional mean
zero given its predecessors (order-dependent mean independence) while
higher-moment dependence is present.

All generators are pure given (config, seed): one seeded stream per column
keeps replications bit-reproducible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

import numpy as np


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


class AuxDistribution(enum.Enum):
    """Symmetric auxiliary distributions supported on [-1, 1]."""

    UNIFORM = "uniform"
    USHAPED_BETA = "ushaped-beta"
    CONCENTRATED_BETA = "concentrated-beta"
    BIMODAL = "bimodal"

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self is AuxDistribution.UNIFORM:
            return rng.uniform(-1.0, 1.0, size)
        if self is AuxDistribution.USHAPED_BETA:
            return 2.0 * rng.beta(0.5, 0.5, size) - 1.0
        if self is AuxDistribution.CONCENTRATED_BETA:
            return 2.0 * rng.beta(2.0, 2.0, size) - 1.0
        # bimodal: magnitude uniform on [0.3, 1], fair random sign
        magnitude = rng.uniform(0.3, 1.0, size)
        sign = np.where(rng.uniform(size=size) < 0.5, -1.0, 1.0)
        return sign * magnitude


@dataclass(frozen=True)
class Independent:
    name = "independent"


@dataclass(frozen=True)
class LaggedHetero:
    """Scale follows a standardized, exponentially weighted disturbance history.

    sigma_j = exp(gamma / 2 * Stil_{j-1}) with Stil the history
    sum_{l<j} rho^(j-1-l) eps_l divided by its sample standard deviation.
    """

    rho: float = 0.5
    gamma: float = 1.0
    name = "lagged-hetero"

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class Threshold:
    """Scale doubles when the running mean of past disturbances is positive."""

    name = "threshold"


@dataclass(frozen=True)
class ConditionalMixture:
    """Two-component mixture whose weight is a logistic function of the past."""

    name = "conditional-mixture"


DependenceDesign = Union[Independent, LaggedHetero, Threshold, ConditionalMixture]

DESIGN_NAMES = ("independent", "lagged-hetero", "threshold", "conditional-mixture")


def design_from_name(name: str, rho: float = 0.5, gamma: float = 1.0) -> DependenceDesign:
    if name == "independent":
        return Independent()
    if name == "lagged-hetero":
        return LaggedHetero(rho=rho, gamma=gamma)
    if name == "threshold":
        return Threshold()
    if name == "conditional-mixture":
        return ConditionalMixture()
    raise ValueError(f"unknown dependence design {name!r}; choose from {DESIGN_NAMES}")


@dataclass(frozen=True)
class WeightedDag:
    """A weighted DAG given by a causal order and order-coordinate coefficients.

    ``perm[k]`` is the observed column index of the k-th variable in causal
    order; ``B`` is strictly lower triangular in order coordinates, so the
    implied mixing matrix (I - B)^-1 is unit lower triangular.
    """

    perm: tuple[int, ...]
    B: np.ndarray

    def __post_init__(self):
        b = np.array(self.B, dtype=float)
        perm = tuple(int(i) for i in self.perm)
        p = b.shape[0]
        if b.shape != (p, p):
            raise ValueError(f"B must be square, got {b.shape}")
        if np.any(np.triu(b) != 0.0):
            raise ValueError("B must be strictly lower triangular")
        if sorted(perm) != list(range(p)):
            raise ValueError(f"perm must be a permutation of 0..{p - 1}")
        b.flags.writeable = False
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "perm", perm)

    @property
    def dim(self) -> int:
        return self.B.shape[0]

    def mixing(self) -> np.ndarray:
        """(I - B)^-1, unit lower triangular, order coordinates."""
        return np.linalg.inv(np.eye(self.dim) - self.B)

    def coefficients_observed(self) -> np.ndarray:
        """B expressed in observed variable labels."""
        p = self.dim
        out = np.zeros((p, p))
        perm = np.asarray(self.perm)
        out[np.ix_(perm, perm)] = self.B
        return out

    def to_json_dict(self) -> dict:
        return {"perm": list(self.perm), "B": self.B.tolist()}

    @classmethod
    def from_json_dict(cls, payload: dict) -> "WeightedDag":
        return cls(tuple(payload["perm"]), np.asarray(payload["B"], dtype=float))


def sample_dag(
    p: int,
    seed=None,
    random_signs: bool = False,
    edge_prob: float = 1.0,
) -> WeightedDag:
    """Draw a random weighted DAG on p nodes.

    Coefficient magnitudes are uniform on [0.3, 0.8] and positive unless
    ``random_signs`` is set; every lower-triangular slot is filled unless
    ``edge_prob`` < 1 thins the graph.  The causal order is uniform.
    """
    if p < 2:
        raise ValueError(f"need at least two variables, got p={p}")
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError(f"edge_prob must lie in [0, 1], got {edge_prob}")
    rng = np.random.default_rng(_seed_sequence(seed))
    b = np.zeros((p, p))
    for i in range(1, p):
        for j in range(i):
            if edge_prob < 1.0 and rng.uniform() >= edge_prob:
                continue
            coef = rng.uniform(0.3, 0.8)
            if random_signs and rng.uniform() < 0.5:
                coef = -coef
            b[i, j] = coef
    perm = tuple(int(v) for v in rng.permutation(p))
    return WeightedDag(perm, b)


def sample_disturbances(
    p: int,
    T: int,
    aux: AuxDistribution,
    design: DependenceDesign,
    seed=None,
) -> np.ndarray:
    """Draw a (T, p) disturbance matrix in causal-order coordinates.

    Column 0 is a plain auxiliary draw; later columns follow the selected
    dependence design, each built from fresh independent auxiliary draws so
    that E[eps_j | eps_0..eps_{j-1}] = 0 by construction.
    """
    if T < 2:
        raise ValueError(f"need T >= 2, got {T}")
    if p < 1:
        raise ValueError(f"need p >= 1, got {p}")
    streams = [np.random.default_rng(s) for s in _seed_sequence(seed).spawn(p)]
    eps = np.empty((T, p))
    eps[:, 0] = aux.sample(streams[0], T)
    for j in range(1, p):
        rng = streams[j]
        if isinstance(design, Independent):
            eps[:, j] = aux.sample(rng, T)
        elif isinstance(design, LaggedHetero):
            u = aux.sample(rng, T)
            weights = design.rho ** np.arange(j - 1, -1, -1)
            history = eps[:, :j] @ weights
            sd = history.std(ddof=1)
            scaled = history / sd if sd > 0.0 else np.zeros(T)
            eps[:, j] = np.exp(0.5 * design.gamma * scaled) * u
        elif isinstance(design, Threshold):
            u = aux.sample(rng, T)
            past_mean = eps[:, :j].mean(axis=1)
            eps[:, j] = np.where(past_mean > 0.0, 2.0 * u, u)
        elif isinstance(design, ConditionalMixture):
            u_low = aux.sample(rng, T)
            u_high = aux.sample(rng, T)
            coin = rng.uniform(size=T)
            past_mean = eps[:, :j].mean(axis=1)
            weight = 1.0 / (1.0 + np.exp(-2.0 * past_mean))
            eps[:, j] = np.where(coin < weight, u_low, 2.5 * u_high)
        else:
            raise ValueError(f"unknown dependence design {design!r}")
    return eps


def generate_dataset(dag: WeightedDag, eps: np.ndarray) -> np.ndarray:
    """Mix disturbances through the DAG and permute columns to observed labels."""
    eps = np.asarray(eps, dtype=float)
    if eps.ndim != 2 or eps.shape[1] != dag.dim:
        raise ValueError(
            f"disturbances must be (T, {dag.dim}), got shape {eps.shape}"
        )
    x_order = eps @ dag.mixing().T
    x = np.empty_like(x_order)
    x[:, list(dag.perm)] = x_order
    return x


def scale_mixture_2d(
    T: int,
    sigma2_values=(0.1, 1.9),
    probs=(0.5, 0.5),
    seed=None,
) -> np.ndarray:
    """Common-volatility pair: eps_i = sigma * Z_i with Z_i uniform on [-sqrt3, sqrt3].

    A single mixture draw sigma^2 multiplies both coordinates, so the columns
    are uncorrelated (identity covariance when E[sigma^2] = 1) yet share
    volatility: Cov(eps_1^2, eps_2^2) = E[sigma^4] - E[sigma^2]^2.
    """
    sigma2 = np.asarray(sigma2_values, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if np.any(sigma2 < 0.0):
        raise ValueError("sigma^2 values must be nonnegative")
    if sigma2.shape != probs.shape:
        raise ValueError("sigma2_values and probs must have matching shapes")
    if abs(probs.sum() - 1.0) > 1e-12:
        raise ValueError(f"mixture weights must sum to one, got {probs.sum()}")
    rng = np.random.default_rng(_seed_sequence(seed))
    draws = rng.choice(sigma2, size=T, p=probs)
    z = rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size=(T, 2))
    return np.sqrt(draws)[:, None] * z
