"""Scores that measure departure of a residual from mean independence.

Four scorers share one picture: given a residual R and a candidate regressor
X, estimate how much the conditional mean E[R | X] varies.  The kernel scorer
fits a local linear smoother with cross-validated Gaussian bandwidth, the
sieve scorer regresses on a cubic B-spline basis with a cross-validated knot
count, the moment scorer contracts R against fixed monomials of X, and the
finite-order scorer works on raw columns through the coupled second / d-th
moment statistic

    S_ij = E[X_i X_j^(d-1)] E[X_j^2] - E[X_i X_j] E[X_j^d],

which vanishes whenever X_j is a source.  All scorers are nonnegative, zero
on a zero residual, and pure given (data, spec, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.interpolate import BSpline

DEFAULT_BANDWIDTH_FACTORS = (0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5)
DEFAULT_KNOT_COUNTS = (2, 4, 6, 8)


@dataclass(frozen=True)
class KernelScorer:
    """Local linear regression score; bandwidths are grid factors times sd(X)."""

    bandwidth_factors: tuple = DEFAULT_BANDWIDTH_FACTORS
    folds: int = 5

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError(f"folds must be >= 2, got {self.folds}")
        if not self.bandwidth_factors or any(b <= 0 for b in self.bandwidth_factors):
            raise ValueError("bandwidth factors must be positive and nonempty")


@dataclass(frozen=True)
class SieveScorer:
    """Cubic B-spline regression score; interior knot count is CV-selected."""

    knot_counts: tuple = DEFAULT_KNOT_COUNTS
    folds: int = 5

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError(f"folds must be >= 2, got {self.folds}")
        if not self.knot_counts or any(int(k) < 1 for k in self.knot_counts):
            raise ValueError("knot counts must be positive integers")


@dataclass(frozen=True)
class MomentScorer:
    """Squared norm of the moments E[R X^k] over the listed powers."""

    powers: tuple = (2, 3)

    def __post_init__(self):
        if not self.powers or any(int(k) < 2 for k in self.powers):
            raise ValueError("powers must be integers >= 2 and nonempty")


@dataclass(frozen=True)
class FiniteOrderScorer:
    """Coupled second / d-th moment source statistic."""

    d: int = 4

    def __post_init__(self):
        if self.d < 3:
            raise ValueError(f"moment order d must be >= 3, got {self.d}")


ScorerSpec = Union[KernelScorer, SieveScorer, MomentScorer, FiniteOrderScorer]

SCORER_NAMES = ("kernel", "sieve", "moment", "finite-order")


def scorer_from_name(name: str, d: int = 4) -> ScorerSpec:
    if name == "kernel":
        return KernelScorer()
    if name == "sieve":
        return SieveScorer()
    if name == "moment":
        return MomentScorer()
    if name == "finite-order":
        return FiniteOrderScorer(d=d)
    raise ValueError(f"unknown scorer {name!r}; choose from {SCORER_NAMES}")


@dataclass
class ScorerDiagnostics:
    """Mutable log of hyperparameter choices and numerical fallbacks."""

    chosen: list = field(default_factory=list)
    cv_ties: int = 0
    smoother_fallbacks: int = 0
    ridge_events: int = 0

    def to_json_dict(self) -> dict:
        return {
            "chosen": list(self.chosen),
            "cv_ties": self.cv_ties,
            "smoother_fallbacks": self.smoother_fallbacks,
            "ridge_events": self.ridge_events,
        }


@dataclass(frozen=True)
class ResidualPair:
    """A residual and the regressor it was projected on.

    The residual must be exactly the target minus its least-squares slope
    times the regressor, so the centered sample covariance between the two
    vanishes; construction via :meth:`from_regression` guarantees it.
    """

    residual: np.ndarray
    regressor: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.residual, dtype=float)
        x = np.asarray(self.regressor, dtype=float)
        if r.ndim != 1 or x.ndim != 1 or r.shape != x.shape:
            raise ValueError("residual and regressor must be equal-length vectors")
        rc = r - r.mean()
        xc = x - x.mean()
        cross = float(np.mean(rc * xc))
        scale = max(1.0, float(np.sqrt(np.mean(rc * rc) * np.mean(xc * xc))))
        if abs(cross) > 1e-10 * scale:
            raise ValueError(
                f"residual is not orthogonal to the regressor (cov {cross:.3e})"
            )
        object.__setattr__(self, "residual", r)
        object.__setattr__(self, "regressor", x)

    @classmethod
    def from_regression(cls, target, regressor) -> "ResidualPair":
        y = np.asarray(target, dtype=float)
        x = np.asarray(regressor, dtype=float)
        slope = regression_slope(y, x)
        return cls(y - slope * x, x)


def regression_slope(y: np.ndarray, x: np.ndarray) -> float:
    """Centered least-squares slope cov(y, x) / var(x)."""
    xc = x - x.mean()
    denom = float(np.dot(xc, xc))
    if denom <= 0.0:
        raise ValueError("regressor has zero sample variance")
    return float(np.dot(y - y.mean(), xc) / denom)


_TRUNCATE_SIGMAS = 6.0  # Gaussian weights beyond 6 sigma are dropped (~1e-8 mass)


def _local_linear_engine(
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_eval: np.ndarray,
    bandwidths,
    diagnostics: ScorerDiagnostics | None = None,
) -> np.ndarray:
    """Fitted local-linear values for several bandwidths at once.

    Sorts both point sets so the pairwise-difference block is built once per
    evaluation chunk and each bandwidth only touches its truncation window.
    Returns an array of shape (len(bandwidths), len(x_eval)) aligned with the
    original evaluation order.
    """
    train_order = np.argsort(x_train, kind="stable")
    xs = x_train[train_order]
    basis = np.column_stack([np.ones(xs.size), y_train[train_order]])
    eval_order = np.argsort(x_eval, kind="stable")
    xe = x_eval[eval_order]
    y_mean = float(y_train.mean())
    h_max = max(bandwidths)
    out = np.empty((len(bandwidths), x_eval.size))
    chunk = 64  # keeps the three work buffers cache-resident
    z_buf = np.empty((min(chunk, xe.size), xs.size))
    w_buf = np.empty_like(z_buf)
    wz_buf = np.empty_like(z_buf)
    for start in range(0, xe.size, chunk):
        block = xe[start : start + chunk]
        targets = eval_order[start : start + chunk]
        m = block.size
        lo = int(np.searchsorted(xs, block[0] - _TRUNCATE_SIGMAS * h_max))
        hi = int(np.searchsorted(xs, block[-1] + _TRUNCATE_SIGMAS * h_max))
        diff = xs[None, lo:hi] - block[:, None]
        for k, h in enumerate(bandwidths):
            a = int(np.searchsorted(xs, block[0] - _TRUNCATE_SIGMAS * h)) - lo
            b = int(np.searchsorted(xs, block[-1] + _TRUNCATE_SIGMAS * h)) - lo
            width = b - a
            z = z_buf[:m, :width]
            w = w_buf[:m, :width]
            wz = wz_buf[:m, :width]
            np.multiply(diff[:, a:b], 1.0 / h, out=z)
            np.multiply(z, z, out=w)
            w *= -0.5
            np.exp(w, out=w)
            np.multiply(w, z, out=wz)
            part0 = w @ basis[lo + a : lo + b]
            part1 = wz @ basis[lo + a : lo + b]
            s0, t0 = part0[:, 0], part0[:, 1]
            s1, t1 = part1[:, 0], part1[:, 1]
            s2 = np.einsum("ij,ij->i", wz, z)
            denom = s0 * s2 - s1 * s1
            bad = (s0 < 1e-8) | (denom <= 1e-12 * (s0 * s2 + s1 * s1))
            fitted = (s2 * t0 - s1 * t1) / np.where(bad, 1.0, denom)
            local_const = np.where(s0 > 0.0, t0 / np.where(s0 > 0.0, s0, 1.0), y_mean)
            out[k, targets] = np.where(bad, local_const, fitted)
            if diagnostics is not None:
                diagnostics.smoother_fallbacks += int(bad.sum())
    return out


def local_linear_fit(
    x: np.ndarray,
    y: np.ndarray,
    bandwidth: float,
    eval_points: np.ndarray | None = None,
    diagnostics: ScorerDiagnostics | None = None,
) -> np.ndarray:
    """Local linear regression with a Gaussian kernel.

    Evaluates the fitted conditional mean at ``eval_points`` (default: the
    sample points).  Where the local weight mass is below 1e-8 or the local
    2x2 system is numerically singular, the estimate falls back to the local
    constant (Nadaraya-Watson) value; fallbacks are counted in diagnostics.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be equal-length vectors")
    if x.size < 3:
        raise ValueError(f"need at least 3 observations, got {x.size}")
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    points = x if eval_points is None else np.asarray(eval_points, dtype=float)
    return _local_linear_engine(x, y, points, [float(bandwidth)], diagnostics)[0]


def cv_select(
    x: np.ndarray,
    y: np.ndarray,
    candidates,
    folds: int,
    fitter: Callable,
    seed=None,
    diagnostics: ScorerDiagnostics | None = None,
    batch: bool = False,
):
    """Pick the candidate minimizing K-fold out-of-fold squared prediction error.

    Folds are contiguous blocks of one seeded shuffle, shared by all
    candidates; ties go to the smallest candidate and are counted in
    diagnostics.  ``fitter(x_train, y_train, x_test, candidate)`` must return
    predictions at ``x_test``; with ``batch=True`` it receives the full
    candidate list instead and must return one prediction row per candidate.
    """
    candidates = sorted(candidates)
    if not candidates:
        raise ValueError("candidate list is empty")
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    n = x.size
    order = np.random.default_rng(seed).permutation(n)
    blocks = np.array_split(order, min(folds, n))
    losses = np.zeros(len(candidates))
    for block in blocks:
        if block.size == 0:
            continue
        mask = np.ones(n, dtype=bool)
        mask[block] = False
        if batch:
            preds = fitter(x[mask], y[mask], x[block], candidates)
            losses += np.sum((preds - y[block][None, :]) ** 2, axis=1)
        else:
            for idx, cand in enumerate(candidates):
                pred = fitter(x[mask], y[mask], x[block], cand)
                losses[idx] += float(np.sum((pred - y[block]) ** 2))
    losses /= n
    best = int(np.argmin(losses))
    if diagnostics is not None:
        tol = 1e-12 * max(1.0, abs(losses[best]))
        if np.sum(np.abs(losses - losses[best]) <= tol) > 1:
            diagnostics.cv_ties += 1
    return candidates[best]


def _ll_fitter(x_train, y_train, x_test, bandwidth):
    return local_linear_fit(x_train, y_train, bandwidth, eval_points=x_test)


def score_kernel(
    pair: ResidualPair,
    spec: KernelScorer = KernelScorer(),
    seed=None,
    diagnostics: ScorerDiagnostics | None = None,
) -> float:
    """Mean squared deviation of the CV-bandwidth local linear fit from R-bar."""
    x, r = pair.regressor, pair.residual
    sd = float(x.std(ddof=1))
    if sd <= 0.0:
        raise ValueError("regressor has zero sample variance")
    grid = [f * sd for f in spec.bandwidth_factors]

    def batch_fitter(x_train, y_train, x_test, grid_values):
        return _local_linear_engine(x_train, y_train, x_test, grid_values)

    bandwidth = cv_select(
        x, r, grid, spec.folds, batch_fitter, seed, diagnostics, batch=True
    )
    if diagnostics is not None:
        diagnostics.chosen.append(("bandwidth", float(bandwidth)))
    fitted = local_linear_fit(x, r, bandwidth, diagnostics=diagnostics)
    return float(np.mean((fitted - r.mean()) ** 2))


def _bspline_design(x: np.ndarray, lo: float, hi: float, interior: int) -> np.ndarray:
    # Cubic basis on equispaced breakpoints; boundary knots repeated so the
    # basis spans constants on [lo, hi].
    if hi <= lo:
        raise ValueError("regressor range is degenerate")
    breaks = np.linspace(lo, hi, interior + 2)
    knots = np.concatenate(([lo] * 3, breaks, [hi] * 3))
    n_basis = len(knots) - 4
    return BSpline(knots, np.eye(n_basis), 3, extrapolate=True)(np.clip(x, lo, hi))


def _sieve_fit(x_train, y_train, x_test, interior, diagnostics=None):
    lo, hi = float(np.min(x_train)), float(np.max(x_train))
    design = _bspline_design(x_train, lo, hi, int(interior))
    gram = design.T @ design
    rhs = design.T @ y_train
    if np.linalg.cond(gram) > 1e12:
        gram = gram + 1e-8 * np.trace(gram) * np.eye(gram.shape[0])
        if diagnostics is not None:
            diagnostics.ridge_events += 1
    coef = np.linalg.solve(gram, rhs)
    return _bspline_design(x_test, lo, hi, int(interior)) @ coef


def score_sieve(
    pair: ResidualPair,
    spec: SieveScorer = SieveScorer(),
    seed=None,
    diagnostics: ScorerDiagnostics | None = None,
) -> float:
    """Mean squared deviation of the CV-knot B-spline fit from R-bar."""
    x, r = pair.regressor, pair.residual
    if float(x.std(ddof=1)) <= 0.0:
        raise ValueError("regressor has zero sample variance")
    largest_basis = max(spec.knot_counts) + 4
    if x.size <= largest_basis:
        raise ValueError(
            f"sample size {x.size} does not exceed the largest basis "
            f"dimension {largest_basis}"
        )

    def fitter(x_train, y_train, x_test, interior):
        return _sieve_fit(x_train, y_train, x_test, interior, diagnostics)

    interior = cv_select(x, r, list(spec.knot_counts), spec.folds, fitter, seed, diagnostics)
    if diagnostics is not None:
        diagnostics.chosen.append(("knots", int(interior)))
    fitted = _sieve_fit(x, r, x, interior, diagnostics)
    return float(np.mean((fitted - r.mean()) ** 2))


def score_moment(pair: ResidualPair, spec: MomentScorer = MomentScorer()) -> float:
    """Sum of squared sample moments (1/n) sum R * X^k over the spec powers."""
    x, r = pair.regressor, pair.residual
    moments = [float(np.mean(r * x ** int(k))) for k in spec.powers]
    return float(np.sum(np.square(moments)))


def finite_order_statistics(x: np.ndarray, j: int, d: int) -> np.ndarray:
    """Vector of S_ij over all i (entry j is zero), from sample moments.

    Columns are assumed mean-centered; the statistic couples the second and
    d-th moments so that a source column yields zeros for every i.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("sample matrix must be 2-D")
    if not 0 <= j < x.shape[1]:
        raise ValueError(f"candidate index {j} out of range")
    if d < 3:
        raise ValueError(f"moment order d must be >= 3, got {d}")
    n = x.shape[0]
    xj = x[:, j]
    m2 = float(np.mean(xj**2))
    md = float(np.mean(xj**d))
    cross_high = x.T @ (xj ** (d - 1)) / n
    cross_lin = x.T @ xj / n
    stats = cross_high * m2 - cross_lin * md
    stats[j] = 0.0
    return stats


def score_finite_order(x: np.ndarray, j: int, d: int = 4) -> float:
    """Sum over i != j of the squared coupled-moment statistic S_ij."""
    return float(np.sum(finite_order_statistics(x, j, d) ** 2))


def score_pair(
    pair: ResidualPair,
    spec: ScorerSpec,
    seed=None,
    diagnostics: ScorerDiagnostics | None = None,
) -> float:
    """Dispatch a residual/regressor pair to the matching scorer."""
    if isinstance(spec, KernelScorer):
        return score_kernel(pair, spec, seed, diagnostics)
    if isinstance(spec, SieveScorer):
        return score_sieve(pair, spec, seed, diagnostics)
    if isinstance(spec, MomentScorer):
        return score_moment(pair, spec)
    raise TypeError(f"no pairwise scorer for spec {spec!r}")


def pooled_cv_scores(
    pairs: dict,
    spec: ScorerSpec,
    seed=None,
    diagnostics: ScorerDiagnostics | None = None,
) -> dict:
    """Score many residual pairs with one jointly cross-validated smoothing level.

    The hyperparameter (bandwidth factor or knot count) is selected once by
    minimizing the summed out-of-fold prediction error over all pairs, then
    every pair is scored at that level.  Scoring all pairs at a common
    smoothing level makes the smoother-variance component of the null score
    (nearly) constant across pairs, so it cancels when candidate sums are
    compared; per-pair selection would instead add a noise floor of the size
    of the variance gap between grid ends, which drowns weak conditional-mean
    signals.  ``pairs`` maps arbitrary keys to ResidualPair objects; returns
    the same keys mapped to scores.
    """
    if isinstance(spec, MomentScorer):
        return {key: score_moment(pair, spec) for key, pair in pairs.items()}
    if not isinstance(spec, (KernelScorer, SieveScorer)):
        raise TypeError(f"no pooled scorer for spec {spec!r}")
    kernel_mode = isinstance(spec, KernelScorer)
    levels = sorted(spec.bandwidth_factors if kernel_mode else spec.knot_counts)
    items = list(pairs.items())
    if not items:
        return {}
    n = items[0][1].regressor.size
    order = np.random.default_rng(seed).permutation(n)
    blocks = np.array_split(order, min(spec.folds, n))
    losses = np.zeros(len(levels))
    sds = {key: float(pair.regressor.std(ddof=1)) for key, pair in items}
    for block in blocks:
        if block.size == 0:
            continue
        mask = np.ones(n, dtype=bool)
        mask[block] = False
        for key, pair in items:
            x, r = pair.regressor, pair.residual
            if kernel_mode:
                preds = _local_linear_engine(
                    x[mask], r[mask], x[block], [f * sds[key] for f in levels]
                )
                losses += np.sum((preds - r[block][None, :]) ** 2, axis=1)
            else:
                for idx, knots in enumerate(levels):
                    pred = _sieve_fit(x[mask], r[mask], x[block], knots, diagnostics)
                    losses[idx] += float(np.sum((pred - r[block]) ** 2))
    best = int(np.argmin(losses))
    if diagnostics is not None:
        tol = 1e-12 * max(1.0, abs(losses[best]))
        if np.sum(np.abs(losses - losses[best]) <= tol) > 1:
            diagnostics.cv_ties += 1
        diagnostics.chosen.append(
            ("bandwidth-factor" if kernel_mode else "knots", levels[best])
        )
    scores = {}
    for key, pair in items:
        x, r = pair.regressor, pair.residual
        if kernel_mode:
            fitted = local_linear_fit(x, r, levels[best] * sds[key], diagnostics=diagnostics)
        else:
            fitted = _sieve_fit(x, r, x, levels[best], diagnostics)
        scores[key] = float(np.mean((fitted - r.mean()) ** 2))
    return scores
