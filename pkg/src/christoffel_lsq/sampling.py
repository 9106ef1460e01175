"""Christoffel-weighted sampling and conditioning of the weighted design.

The sampling density for a basis prefix of size ``m`` is::

    omega_m(x) = h_m(x) rho(x),    h_m(x) = (1/m) sum_{j <= m} eta_j(x)**2

It is an equal-weight mixture of the densities ``eta_j**2 rho``, which is
how points are drawn: choose ``j`` uniformly, then sample each coordinate
of ``eta_j``'s multi-index from its squared univariate mode by inverse CDF.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from . import basis
from ._validation import as_generator, check_points, check_positive_int, stream
from .exceptions import DegeneratePoint, DensityMismatch

# Conditioning threshold for ||H - I||; fixed so that ||(L^T L)^-1|| <= 2/n.
ADMISSIBLE_DEVIATION = 0.5


@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray
    m: int
    seed: Optional[int] = None
    resampled: int = 0

    @property
    def n(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class DesignMatrix:
    L: np.ndarray
    H: np.ndarray
    deviation: float
    h: np.ndarray

    @property
    def n(self):
        return self.L.shape[0]

    @property
    def m(self):
        return self.L.shape[1]

    @property
    def admissible(self):
        return self.deviation <= ADMISSIBLE_DEVIATION

    @property
    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.H)[0])


@dataclass(frozen=True)
class FailureRate:
    n: int
    m: int
    trials: int
    failures: int
    ci_low: float
    ci_high: float
    deviations: np.ndarray
    seed: int

    @property
    def rate(self):
        return self.failures / self.trials

    @property
    def bound(self):
        return concentration_bound(self.n, self.m)


def christoffel_factor(model, m, X):
    """``h_m`` at points ``X``: mean of the first ``m`` squared basis functions."""
    check_positive_int(m, "m")
    X = check_points(X, model.d)
    Phi = basis.evaluate(X, model.multi_indices(m))
    return np.mean(Phi * Phi, axis=1)


def christoffel_density(model, m, x):
    """Sampling density ``omega_m = h_m * rho``; integrates to one."""
    X = check_points(x, model.d, name="x")
    vals = christoffel_factor(model, m, X) * model.density(X)
    return float(vals[0]) if np.ndim(x) <= (0 if model.d == 1 else 1) else vals


def _mixture_uniforms(rng, n, m, d):
    comp = rng.integers(0, m, size=n)
    v = rng.random((n, d))
    return comp, v


def _mixture_points(modes, comp, v):
    chosen = modes[comp]
    out = np.empty_like(v)
    for j in range(v.shape[1]):
        out[:, j] = basis.invert_squared_mode(v[:, j], chosen[:, j])
    return out


def draw_samples(model, m, n, rng):
    """Draw ``n`` i.i.d. points from the Christoffel density of prefix ``m``.

    ``rng`` is an integer seed or a ``numpy.random.Generator``.  Points
    where ``h_m`` vanishes (a null event) are redrawn and counted.
    """
    check_positive_int(m, "m")
    check_positive_int(n, "n")
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None
    gen = as_generator(rng)
    modes = model.multi_indices(m)
    comp, v = _mixture_uniforms(gen, n, m, model.d)
    pts = _mixture_points(modes, comp, v)
    resampled = 0
    while True:
        bad = christoffel_factor(model, m, pts) <= 0.0
        if not np.any(bad):
            break
        k = int(bad.sum())
        resampled += k
        comp, v = _mixture_uniforms(gen, k, m, model.d)
        pts[bad] = _mixture_points(modes, comp, v)
    return SampleSet(points=pts, m=m, seed=seed, resampled=resampled)


def weighted_features(Phi):
    """Normalize basis evaluations row-wise: ``eta_k / sqrt(h_m)``.

    Returns ``(L, h)``.
    """
    h = np.mean(Phi * Phi, axis=1)
    if np.any(h <= 0.0):
        i = int(np.flatnonzero(h <= 0.0)[0])
        raise DegeneratePoint(f"sampling density vanishes at sample point {i}")
    return Phi / np.sqrt(h)[:, None], h


def build_design(model, X, m):
    """Assemble ``L`` (rows ``eta_k(x_i)/sqrt(h_m(x_i))``) and ``H = L^T L / n``."""
    check_positive_int(m, "m")
    if X.m != m:
        raise DensityMismatch(
            f"sample set was drawn for m={X.m}, design requested for m={m}"
        )
    Phi = basis.evaluate(check_points(X.points, model.d), model.multi_indices(m))
    L, h = weighted_features(Phi)
    H = (L.T @ L) / L.shape[0]
    return DesignMatrix(L=L, H=H, deviation=symmetric_norm(H - np.eye(m)), h=h)


def symmetric_norm(A):
    """Spectral norm of a symmetric matrix: largest absolute eigenvalue."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(A))))


def spectral_deviation(D):
    """``||H - I||`` in the spectral norm."""
    return symmetric_norm(D.H - np.eye(D.H.shape[0]))


def concentration_bound(n, m, clip=False):
    """Upper bound ``(2n)**sqrt(2) * exp(-n / (48 m))`` on P(||H - I|| > 1/2)."""
    check_positive_int(n, "n")
    check_positive_int(m, "m")
    raw = math.exp(math.sqrt(2.0) * math.log(2.0 * n) - n / (48.0 * m))
    return min(raw, 1.0) if clip else raw


def binomial_ci(failures, trials, level=0.95):
    """Exact (Clopper-Pearson) confidence interval for a binomial rate."""
    ci = stats.binomtest(int(failures), int(trials)).proportion_ci(
        confidence_level=level, method="exact"
    )
    return float(ci.low), float(ci.high)


def design_deviations(model, n, m, trials, seed, start=0, batch=None):
    """``||H - I||`` for designs drawn with streams ``(seed, start + t)``.

    Trials are batched through one vectorized inverse-CDF pass; each trial
    still owns its generator stream, so results do not depend on batching.
    """
    modes = model.multi_indices(m)
    if batch is None:
        batch = max(1, 200_000 // max(n, 1))
    out = np.empty(trials)
    eye = np.eye(m)
    for lo in range(0, trials, batch):
        hi = min(trials, lo + batch)
        comps, vs = [], []
        for t in range(lo, hi):
            c, v = _mixture_uniforms(stream(seed, start + t), n, m, model.d)
            comps.append(c)
            vs.append(v)
        pts = _mixture_points(modes, np.concatenate(comps), np.concatenate(vs))
        Phi = basis.evaluate(pts, modes)
        L, _ = weighted_features(Phi)
        L = L.reshape(hi - lo, n, m)
        H = np.einsum("tik,til->tkl", L, L) / n
        eig = np.linalg.eigvalsh(H - eye)
        out[lo:hi] = np.max(np.abs(eig), axis=1)
    return out


def empirical_failure_rate(model, n, m, trials, seed):
    """Fraction of designs with ``||H - I|| > 1/2`` and its 95% CI."""
    check_positive_int(trials, "trials")
    check_positive_int(n, "n")
    check_positive_int(m, "m")
    dev = design_deviations(model, n, m, trials, seed)
    failures = int(np.count_nonzero(dev > ADMISSIBLE_DEVIATION))
    lo, hi = binomial_ci(failures, trials)
    return FailureRate(n=n, m=m, trials=trials, failures=failures,
                       ci_low=lo, ci_high=hi, deviations=dev, seed=seed)
