"""Time-series front end: VAR residuals, discovery, and specification tests.

The pipeline estimates a VAR(k) equation by equation with least squares,
standardizes the residuals, runs the mean-independence discovery recursion on
them, and recovers structural disturbances through the implied unit-triangular
mixing.  Two kernel permutation tests assess the estimated disturbances: an
ordered conditional-mean test (each disturbance against the block of its
predecessors) and a joint mutual-independence test; standard errors for the
contemporaneous coefficients come from a recursive-design residual bootstrap
with the causal order held fixed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discover import CausalOrder, DegenerateDataError, DiscoveryResult, direct_limiam, estimate_B
from .meanind import ScorerSpec


@dataclass(frozen=True)
class VarModel:
    """Intercept and lag coefficient matrices of a fitted VAR."""

    intercept: np.ndarray
    phis: tuple[np.ndarray, ...]

    def __post_init__(self):
        c = np.array(self.intercept, dtype=float)
        phis = tuple(np.array(p, dtype=float) for p in self.phis)
        if not phis:
            raise ValueError("need at least one lag matrix")
        p = c.shape[0]
        for phi in phis:
            if phi.shape != (p, p):
                raise ValueError(f"lag matrix shape {phi.shape} != ({p}, {p})")
            phi.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "intercept", c)
        object.__setattr__(self, "phis", phis)

    @property
    def dim(self) -> int:
        return self.intercept.shape[0]

    @property
    def lags(self) -> int:
        return len(self.phis)

    def to_json_dict(self) -> dict:
        return {
            "intercept": self.intercept.tolist(),
            "phis": [phi.tolist() for phi in self.phis],
        }


@dataclass(frozen=True)
class VarFit:
    """Fitted VAR plus standardized residuals and the inverse-transform data."""

    model: VarModel
    residuals: np.ndarray  # (T - k, p), columns mean 0, variance 1
    resid_mean: np.ndarray
    resid_scale: np.ndarray

    def raw_residuals(self) -> np.ndarray:
        return self.resid_mean + self.resid_scale * self.residuals


def _lag_design(x: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    rows = x.shape[0] - k
    p = x.shape[1]
    design = np.ones((rows, 1 + p * k))
    for lag in range(1, k + 1):
        design[:, 1 + (lag - 1) * p : 1 + lag * p] = x[k - lag : x.shape[0] - lag]
    return design, x[k:]


def fit_var(x: np.ndarray, k: int) -> VarFit:
    """Least-squares VAR(k) fit with columnwise-standardized residuals.

    Residual columns are shifted and scaled to mean 0, unit variance; the
    mean and scale are kept so the original series can be reconstructed
    exactly.  An all-but-noiseless fit keeps a unit scale to avoid dividing
    by a vanishing standard deviation.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("series must be a (T, p) matrix")
    if k < 1:
        raise ValueError(f"lag order must be >= 1, got {k}")
    T, p = x.shape
    if T - k <= p * k + 1:
        raise ValueError(
            f"series too short: T - k = {T - k} must exceed p*k + 1 = {p * k + 1}"
        )
    design, target = _lag_design(x, k)
    coef, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < design.shape[1]:
        raise DegenerateDataError("rank-deficient lag matrix")
    resid = target - design @ coef
    mean = resid.mean(axis=0)
    sd = resid.std(axis=0, ddof=1)
    scale = np.where(sd > 1e-12 * (np.abs(mean) + 1.0), sd, 1.0)
    model = VarModel(
        coef[0],
        tuple(coef[1 + (lag - 1) * p : 1 + lag * p].T for lag in range(1, k + 1)),
    )
    return VarFit(model, (resid - mean) / scale, mean, scale)


@dataclass(frozen=True)
class SvarDiscovery:
    result: DiscoveryResult
    shocks: np.ndarray  # structural disturbances, original column labels


def svar_discover(residuals: np.ndarray, scorer: ScorerSpec, seed=None) -> SvarDiscovery:
    """Run order discovery on VAR residuals and unmix the structural shocks.

    With B-hat from the recursion and A-hat = (I - B-hat)^-1, the recovered
    shocks solve A-hat eps_t = U_t row by row; reorder columns by the
    estimated order to get them source-first.
    """
    residuals = np.asarray(residuals, dtype=float)
    result = direct_limiam(residuals, scorer, seed)
    mixing = np.eye(residuals.shape[1]) - result.B
    shocks = residuals @ mixing.T  # eps = (I - B) U, i.e. A^-1 U
    return SvarDiscovery(result, shocks)


@dataclass(frozen=True)
class ComponentReport:
    index: int
    statistic: float
    p_value: float


@dataclass(frozen=True)
class TestReport:
    statistic: float
    permutation_count: int
    p_value: float
    per_component: tuple[ComponentReport, ...] | None = None

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value out of range: {self.p_value}")

    def to_json_dict(self) -> dict:
        payload = {
            "statistic": self.statistic,
            "permutation_count": self.permutation_count,
            "p_value": self.p_value,
        }
        if self.per_component is not None:
            payload["per_component"] = [
                {"index": c.index, "statistic": c.statistic, "p_value": c.p_value}
                for c in self.per_component
            ]
        return payload


def _median_bandwidth(block: np.ndarray) -> float:
    """Median pairwise Euclidean distance (median heuristic)."""
    sq = np.sum(block * block, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * block @ block.T
    np.maximum(d2, 0.0, out=d2)
    upper = d2[np.triu_indices(block.shape[0], k=1)]
    med = float(np.median(np.sqrt(upper)))
    return med if med > 0.0 else 1.0


def _gaussian_kernel(block: np.ndarray, bandwidth: float) -> np.ndarray:
    sq = np.sum(block * block, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * block @ block.T
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-0.5 * d2 / (bandwidth * bandwidth))


def _double_center(k: np.ndarray) -> np.ndarray:
    row = k.mean(axis=0, keepdims=True)
    col = k.mean(axis=1, keepdims=True)
    return k - row - col + k.mean()


def _permutation_pvalue(null: np.ndarray, observed: float, count: int) -> float:
    return (1.0 + float(np.sum(null >= observed))) / (1.0 + count)


def ordered_meanind_test(
    shocks: np.ndarray, permutations: int = 999, seed=None
) -> TestReport:
    """Kernel permutation test of zero conditional mean given predecessors.

    Columns must already be in (estimated) causal order.  For each i >= 2 the
    component statistic is e_i' K-tilde e_i with K-tilde the doubly centered
    Gaussian kernel matrix of the first i-1 columns (median-heuristic
    bandwidth) and e_i the centered i-th column; the overall statistic is the
    sum.  The null resamples each component independently across rows while
    the conditioning block stays fixed.
    """
    shocks = np.asarray(shocks, dtype=float)
    if shocks.ndim != 2 or shocks.shape[1] < 2:
        raise ValueError("need a (T, p) matrix with p >= 2")
    if permutations < 99:
        raise ValueError(f"need at least 99 permutations, got {permutations}")
    T, p = shocks.shape
    rng = np.random.default_rng(seed)
    total = 0.0
    null_total = np.zeros(permutations)
    components = []
    for i in range(1, p):
        block = shocks[:, :i]
        kernel = _double_center(_gaussian_kernel(block, _median_bandwidth(block)))
        e = shocks[:, i] - shocks[:, i].mean()
        observed = float(e @ kernel @ e)
        perms = np.stack([rng.permutation(e) for _ in range(permutations)], axis=1)
        null = np.einsum("tm,tm->m", perms, kernel @ perms)
        components.append(
            ComponentReport(i, observed, _permutation_pvalue(null, observed, permutations))
        )
        total += observed
        null_total += null
    p_value = _permutation_pvalue(null_total, total, permutations)
    return TestReport(total, permutations, p_value, tuple(components))


def _dhsic_statistic(kernels: list[np.ndarray]) -> float:
    n = kernels[0].shape[0]
    joint = kernels[0].copy()
    for k in kernels[1:]:
        joint *= k
    term1 = float(joint.mean())
    term2 = 1.0
    term3_rows = np.ones(n)
    for k in kernels:
        term2 *= float(k.mean())
        term3_rows = term3_rows * k.mean(axis=1)
    return term1 + term2 - 2.0 * float(term3_rows.mean())


def mutual_independence_test(
    shocks: np.ndarray, permutations: int = 999, seed=None
) -> TestReport:
    """dHSIC-style permutation test of joint mutual independence.

    One Gaussian kernel per coordinate (median-heuristic bandwidth); the null
    realigns the coordinates by independent row permutations.  Only relative
    alignments matter, so the first coordinate is held fixed, which draws
    from exactly the same null distribution.
    """
    shocks = np.asarray(shocks, dtype=float)
    if shocks.ndim != 2 or shocks.shape[1] < 2:
        raise ValueError("need a (T, p) matrix with p >= 2")
    if permutations < 99:
        raise ValueError(f"need at least 99 permutations, got {permutations}")
    T, p = shocks.shape
    rng = np.random.default_rng(seed)
    kernels = []
    for i in range(p):
        col = shocks[:, i : i + 1]
        kernels.append(_gaussian_kernel(col, _median_bandwidth(col)))
    observed = _dhsic_statistic(kernels)
    null = np.empty(permutations)
    for b in range(permutations):
        permuted = [kernels[0]]
        for k in kernels[1:]:
            idx = rng.permutation(T)
            permuted.append(k[np.ix_(idx, idx)])
        null[b] = _dhsic_statistic(permuted)
    return TestReport(observed, permutations, _permutation_pvalue(null, observed, permutations))


def bootstrap_se_B(
    x: np.ndarray,
    k: int,
    order,
    replicates: int = 200,
    seed=None,
    scorer: ScorerSpec | None = None,
) -> np.ndarray:
    """Recursive-design residual bootstrap standard errors for B-hat.

    Resamples standardized VAR residual rows with replacement, rebuilds the
    series through the fitted recursion from the first k observations,
    refits the VAR, and re-estimates the contemporaneous coefficients with
    the causal order held fixed (``scorer`` is accepted for interface
    symmetry but unused, since discovery is not re-run).  Returns the
    entrywise standard deviation across replicates.
    """
    if replicates < 50:
        raise ValueError(f"need at least 50 bootstrap replicates, got {replicates}")
    x = np.asarray(x, dtype=float)
    fit = fit_var(x, k)
    T, p = x.shape
    perm = list(order.perm) if isinstance(order, CausalOrder) else [int(i) for i in order]
    raw = fit.raw_residuals()
    if float(np.max(np.abs(raw))) <= 1e-12 * max(1.0, float(np.max(np.abs(x)))):
        return np.zeros((p, p))  # deterministic system: no resampling variability
    rng = np.random.default_rng(seed)
    rows = raw.shape[0]
    draws = np.empty((replicates, p, p))
    for b in range(replicates):
        resampled = raw[rng.integers(0, rows, size=rows)]
        series = np.empty_like(x)
        series[:k] = x[:k]
        for t in range(k, T):
            value = fit.model.intercept + resampled[t - k]
            for lag, phi in enumerate(fit.model.phis, start=1):
                value = value + phi @ series[t - lag]
            series[t] = value
        refit = fit_var(series, k)
        draws[b] = estimate_B(refit.residuals, perm)
    return draws.std(axis=0, ddof=1)
