"""Weighted least-squares recovery from function values.

Given points drawn from the Christoffel density of prefix ``m``, the
recovery ``S f`` is the minimizer over ``span{eta_1..eta_m}`` of
``sum_i |f(x_i) - g(x_i)|**2 / h_m(x_i)``.  Coefficients are obtained from
a QR factorization of the weighted design ``L`` rather than the normal
equations.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from . import basis
from ._validation import check_open_unit, check_points, check_positive_int, stream
from .exceptions import DensityMismatch, NoAdmissibleDesign, RankDeficient
from .model import RandomFunction
from .sampling import (
    ADMISSIBLE_DEVIATION,
    SampleSet,
    draw_samples,
    symmetric_norm,
    weighted_features,
)

SQRT2 = math.sqrt(2.0)
FIXED_DELTA = 2.0 ** -SQRT2


@dataclass(frozen=True)
class ScheduleResult:
    n: int
    m: int
    delta: float
    amplification: float

    @property
    def feasible(self):
        return self.m >= 1


@dataclass(frozen=True)
class LsqFit:
    coefficients: np.ndarray
    conditioning: float
    admissible: bool
    rank: int


def _floor_ratio(n, denom):
    # Largest integer m with m * denom <= n, guarding the float floor.
    m = math.floor(n / denom)
    while (m + 1) * denom <= n:
        m += 1
    while m > 0 and m * denom > n:
        m -= 1
    return max(m, 0)


def amplification(n, m, delta):
    """Error amplification ``sqrt(1 + 4m/n) / sqrt(1 - delta)``."""
    return math.sqrt(1.0 + 4.0 * m / n) / math.sqrt(1.0 - delta)


def schedule_m(n, delta):
    """Subspace dimension ``floor(n / (48 (sqrt2 ln 2n - ln delta)))``.

    ``m == 0`` means the budget is too small; it is reported, not raised.
    """
    n = check_positive_int(n, "n")
    delta = check_open_unit(delta, "delta")
    denom = 48.0 * (SQRT2 * math.log(2.0 * n) - math.log(delta))
    m = _floor_ratio(n, denom)
    return ScheduleResult(n=n, m=m, delta=delta, amplification=amplification(n, m, delta))


def schedule_m_fixed(n):
    """The ``delta = 2**-sqrt2`` schedule ``floor(n / (48 sqrt2 ln 4n))``."""
    n = check_positive_int(n, "n")
    m = _floor_ratio(n, 48.0 * SQRT2 * math.log(4.0 * n))
    return ScheduleResult(n=n, m=m, delta=FIXED_DELTA,
                          amplification=amplification(n, m, FIXED_DELTA))


def a_delta(delta):
    """``sqrt(1 + 1/(12 ln(1/delta))) / sqrt(1 - delta)``."""
    delta = check_open_unit(delta, "delta")
    return math.sqrt(1.0 + 1.0 / (12.0 * math.log(1.0 / delta))) / math.sqrt(1.0 - delta)


def solve_weighted(L, rhs, rank_tol=None):
    """Least-squares solve ``L c = rhs`` via economic QR.

    ``rhs`` may be a vector or a matrix of right-hand sides.  Returns
    ``(c, rank)``; ``c`` is ``None`` when ``L`` is rank deficient.
    """
    Q, R = linalg.qr(L, mode="economic")
    diag = np.abs(np.diag(R))
    if rank_tol is None:
        rank_tol = max(L.shape) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    rank = int(np.count_nonzero(diag > rank_tol))
    if rank < L.shape[1]:
        return None, rank
    c = linalg.solve_triangular(R, Q.T @ rhs)
    return c, rank


def fit(model, X, m, f_values):
    """Weighted least-squares coefficients for samples ``f_values = f(X)``.

    ``f_values`` may be 2-D, one column per function, in which case the
    coefficients come back as an ``(m, r)`` array.
    """
    check_positive_int(m, "m")
    if X.m != m:
        raise DensityMismatch(f"sample set was drawn for m={X.m}, fit requested for m={m}")
    pts = check_points(X.points, model.d)
    y = np.asarray(f_values, dtype=float)
    if y.shape[0] != pts.shape[0]:
        raise ValueError(f"got {y.shape[0]} function values for {pts.shape[0]} points")
    Phi = basis.evaluate(pts, model.multi_indices(m))
    L, h = weighted_features(Phi)
    H = (L.T @ L) / L.shape[0]
    deviation = symmetric_norm(H - np.eye(m))
    admissible = deviation <= ADMISSIBLE_DEVIATION
    scale = np.sqrt(h) if y.ndim == 1 else np.sqrt(h)[:, None]
    coef, rank = solve_weighted(L, y / scale)
    if coef is None:
        raise RankDeficient(f"weighted design has numerical rank {rank} < m={m}")
    return LsqFit(coefficients=coef, conditioning=deviation,
                  admissible=bool(admissible), rank=rank)


def approx_error_sq(model, fit_result, f):
    """``||f - S f||**2`` by Parseval: in-space misfit plus the dropped tail."""
    c = np.asarray(f.coefficients, dtype=float)
    ct = np.asarray(fit_result.coefficients, dtype=float)
    m = ct.shape[0]
    head = np.zeros(m)
    head[: min(m, c.shape[0])] = c[:m]
    return float(np.sum((head - ct) ** 2) + np.sum(c[m:] ** 2))


def avg_error_all(model, m):
    """Optimal average error with ``m`` linear functionals: ``sqrt(tail_sum(m))``."""
    check_positive_int(m, "m", minimum=0)
    return math.sqrt(model.tail_sum(m))


@dataclass(frozen=True)
class StdErrorEstimate:
    """Two-level Monte Carlo estimate of the conditional mean squared error."""

    n: int
    m: int
    delta: float
    mean: float
    se: float
    designs: int
    pairs: int
    rejections: int
    truncation: int
    truncation_tail: float
    truncation_bias: float
    bound: float
    per_design: np.ndarray = field(repr=False)

    @property
    def ci(self):
        return (self.mean - 1.96 * self.se, self.mean + 1.96 * self.se)

    @property
    def error(self):
        return math.sqrt(max(self.mean, 0.0))

    @property
    def error_ci_high(self):
        return math.sqrt(max(self.ci[1], 0.0))

    def bound_holds(self, slack=4.0):
        return self.mean - slack * self.se <= self.bound


def _admissible_sample(model, m, n, seed, trial, max_redraws):
    for attempt in range(max_redraws):
        X = draw_samples(model, m, n, stream(seed, trial, attempt))
        Phi = basis.evaluate(X.points, model.multi_indices(m))
        L, h = weighted_features(Phi)
        dev = symmetric_norm((L.T @ L) / n - np.eye(m))
        if dev <= ADMISSIBLE_DEVIATION:
            return X, L, h, attempt
    return None, None, None, max_redraws


def _design_errors(model, n, m, K, lam, trials_f, seed, trial, max_redraws):
    """Squared errors of ``trials_f`` random functions on one admissible design.

    The recovery is linear, so ``S f - A_m f = S(f - A_m f)`` is obtained by
    fitting each tail basis function once and combining the fits with the
    drawn tail coefficients; the head coefficients cancel exactly.
    """
    X, L, h, rejected = _admissible_sample(model, m, n, seed, trial, max_redraws)
    if X is None:
        return None, rejected
    gen = stream(seed, trial, max_redraws, 1)
    coeffs = np.sqrt(lam[m:K])[:, None] * gen.standard_normal((K - m, trials_f))
    proj = np.sum(coeffs ** 2, axis=0)
    if K > m:
        tail_modes = model.multi_indices(K)[m:K]
        Phi_tail = basis.evaluate(X.points, tail_modes)
        M, rank = solve_weighted(L, Phi_tail / np.sqrt(h)[:, None])
        if M is None:
            raise RankDeficient(f"admissible design reported rank {rank} < m={m}")
        inspace = np.sum((M @ coeffs) ** 2, axis=0)
    else:
        inspace = np.zeros(trials_f)
    return proj + inspace, rejected


def avg_error_std_empirical(model, n, m, delta, trials_X, trials_f, seed,
                            truncation=None, max_terms=2048, rel_tol=1e-6,
                            max_redraws=100, jobs=1):
    """Conditional mean of ``||f - S f||**2`` over admissible designs and draws.

    Outer trial ``t`` draws designs from streams ``(seed, t, attempt)``
    until one satisfies ``||H - I|| <= 1/2`` (rejections are counted), then
    averages ``trials_f`` Karhunen-Loeve draws on it.  The standard error is
    computed from per-design means, so within-design correlation is
    accounted for.  The exact energy of the discarded expansion tail is
    added to the mean; ``truncation_bias`` bounds the aliasing it would
    have contributed.
    """
    n = check_positive_int(n, "n")
    m = check_positive_int(m, "m")
    delta = check_open_unit(delta, "delta")
    check_positive_int(trials_X, "trials_X")
    check_positive_int(trials_f, "trials_f")
    K = truncation if truncation is not None else model.kl_truncation(rel_tol, max_terms)
    K = max(K, m)
    lam = model.eigenvalues(K)
    dropped = model.tail_sum(K)

    def run(t):
        return _design_errors(model, n, m, K, lam, trials_f, seed, t, max_redraws)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, range(trials_X)))
    else:
        results = [run(t) for t in range(trials_X)]

    rejections = sum(r[1] for r in results)
    per_design = np.array([math.fsum(r[0]) / trials_f for r in results if r[0] is not None])
    if per_design.size == 0:
        raise NoAdmissibleDesign(
            f"no admissible design in {trials_X} trials of {max_redraws} draws (n={n}, m={m})"
        )
    per_design = per_design + dropped
    mean = math.fsum(per_design) / per_design.size
    se = float(np.std(per_design, ddof=1) / math.sqrt(per_design.size)) if per_design.size > 1 else math.inf
    bound = (1.0 + 4.0 * m / n) / (1.0 - delta) * model.tail_sum(m)
    return StdErrorEstimate(
        n=n, m=m, delta=delta, mean=mean, se=se, designs=int(per_design.size),
        pairs=int(per_design.size * trials_f), rejections=int(rejections),
        truncation=K, truncation_tail=dropped,
        truncation_bias=(4.0 * m / n) / (1.0 - delta) * dropped,
        bound=bound, per_design=per_design,
    )
