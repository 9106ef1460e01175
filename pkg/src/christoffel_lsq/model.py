"""Concrete approximation problems: eigenvalue families, basis, random functions.

A :class:`ProblemModel` pairs a decay family with a dimension ``d``.  The
k-th eigenvalue (1-based, nonincreasing) is attached to the k-th basis
function of the tensor trigonometric system, so every quantity of the
average-case problem is computable: spectrum, trace, tails, pointwise
evaluation of Karhunen-Loeve draws.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from . import basis
from ._validation import as_generator, check_points, check_positive_int
from .exceptions import EnumerationLimit, NonSummable

# Hard ceiling on explicit enumeration of tensor-product spectra.
MAX_ENUMERATION = 1_000_000


class DecayFamily:
    """Eigenvalue rule ``(k, d) -> lambda_{k,d}`` plus its basis pairing.

    Subclasses provide ``eigenvalues(K, d)``, ``trace(d)``, ``tail(n, d)``
    and ``multi_indices(K, d)``.
    """

    kind = "abstract"

    def eigenvalue(self, k, d):
        return float(self.eigenvalues(k, d)[k - 1])

    def multi_indices(self, K, d):
        return basis.total_order_indices(K, d)

    def describe(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class Algebraic(DecayFamily):
    """``lambda_k = C * k**-alpha``, the same for every ``d``."""

    alpha: float
    C: float = 1.0
    kind = "algebraic"

    def __post_init__(self):
        if not self.alpha > 1.0:
            raise NonSummable(f"algebraic decay needs alpha > 1, got {self.alpha}")
        if not self.C >= 0.0:
            raise ValueError(f"C must be nonnegative, got {self.C}")

    def eigenvalues(self, K, d):
        return self.C * np.arange(1, K + 1, dtype=float) ** -self.alpha

    def trace(self, d):
        return self.C * float(special.zeta(self.alpha, 1.0))

    def tail(self, n, d):
        # Hurwitz zeta: sum_{k > n} k**-alpha.
        return self.C * float(special.zeta(self.alpha, n + 1.0))

    def describe(self):
        return {"kind": self.kind, "alpha": self.alpha, "C": self.C}


@dataclass(frozen=True)
class Geometric(DecayFamily):
    """``lambda_k = A**2 * q**(2k)``, the same for every ``d``.

    ``ratio`` (``q**2``) is the quantity actually used; pass it directly
    with :meth:`from_ratio` when ``q**2`` should be exact.
    """

    q: float
    A: float = 1.0
    ratio: Optional[float] = None
    kind = "geometric"

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in (0, 1), got {self.q}")
        if not self.A >= 0.0:
            raise ValueError(f"A must be nonnegative, got {self.A}")
        if self.ratio is None:
            object.__setattr__(self, "ratio", self.q * self.q)

    @classmethod
    def from_ratio(cls, ratio, scale=1.0):
        """``lambda_k = scale * ratio**k``."""
        return cls(q=math.sqrt(ratio), A=math.sqrt(scale), ratio=float(ratio))

    @property
    def _scale(self):
        return self.A * self.A

    def eigenvalues(self, K, d):
        return self._scale * self.ratio ** np.arange(1, K + 1, dtype=float)

    def trace(self, d):
        return self._scale * self.ratio / (1.0 - self.ratio)

    def tail(self, n, d):
        return self._scale * self.ratio ** (n + 1) / (1.0 - self.ratio)

    def describe(self):
        return {"kind": self.kind, "q": self.q, "A": self.A, "ratio": self.ratio}


@dataclass(frozen=True)
class Finite(DecayFamily):
    """Finitely many nonzero eigenvalues, zero afterwards."""

    values: tuple
    kind = "finite"

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if any(v < 0 for v in vals):
            raise ValueError("eigenvalues must be nonnegative")
        if any(b > a for a, b in zip(vals, vals[1:])):
            raise ValueError("eigenvalues must be nonincreasing")
        object.__setattr__(self, "values", vals)

    def eigenvalues(self, K, d):
        out = np.zeros(K)
        head = min(K, len(self.values))
        out[:head] = self.values[:head]
        return out

    def trace(self, d):
        return math.fsum(self.values)

    def tail(self, n, d):
        return math.fsum(self.values[n:])

    def describe(self):
        return {"kind": self.kind, "values": list(self.values)}


@dataclass(frozen=True)
class UnivariateWeights:
    """Per-mode weights ``r(mode)`` for tensor-product spectra.

    ``geometric``: ``r(j) = ratio**j``.
    ``korobov``: ``r(0) = 1`` and ``r(j) = gamma * freq(j)**-alpha`` where
    ``freq(j) = ceil(j / 2)`` is the trigonometric frequency of mode ``j``.
    """

    kind: str
    ratio: float = 0.5
    alpha: float = 2.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind == "geometric":
            if not 0.0 < self.ratio < 1.0:
                raise ValueError(f"ratio must lie in (0, 1), got {self.ratio}")
        elif self.kind == "korobov":
            if not self.alpha > 1.0:
                raise NonSummable(f"korobov weights need alpha > 1, got {self.alpha}")
            if not 0.0 < self.gamma <= 1.0:
                raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        else:
            raise ValueError(f"unknown univariate weight kind {self.kind!r}")

    def __call__(self, mode):
        if self.kind == "geometric":
            return self.ratio ** mode
        if mode == 0:
            return 1.0
        return self.gamma * ((mode + 1) // 2) ** -self.alpha

    def product(self, modes):
        if self.kind == "geometric":
            # One power keeps mathematically equal products bit-identical.
            return self.ratio ** sum(modes)
        out = 1.0
        for mode in sorted(modes):
            out *= self(mode)
        return out

    def total(self):
        if self.kind == "geometric":
            return 1.0 / (1.0 - self.ratio)
        return 1.0 + 2.0 * self.gamma * float(special.zeta(self.alpha, 1.0))


@dataclass(frozen=True)
class TensorProduct(DecayFamily):
    """``lambda_{k,d}`` = k-th largest of ``prod_j r(mode_j)`` over multi-indices.

    The basis function paired with each eigenvalue is the one carrying that
    multi-index, so the pairing is intrinsic rather than a chosen order.
    """

    weights: UnivariateWeights
    _cache: dict = field(default_factory=dict, compare=False, repr=False)
    kind = "tensor"

    def _enumerate(self, K, d):
        if K > MAX_ENUMERATION:
            raise EnumerationLimit(
                f"tensor spectrum needs more than {MAX_ENUMERATION} terms in d={d}; "
                f"use a coarser eps or faster-decaying weights"
            )
        cached = self._cache.get(d)
        if cached is not None and len(cached[1]) >= K:
            return cached
        gen = basis.product_order(self.weights.product, d)
        idx, vals = [], []
        for pair in gen:
            idx.append(pair[0])
            vals.append(pair[1])
            if len(vals) >= max(K, 2 * len(cached[1]) if cached else 0, 64):
                break
        entry = (np.array(idx, dtype=np.int64), np.array(vals), _prefix(vals))
        self._cache[d] = entry
        return entry

    def eigenvalues(self, K, d):
        return self._enumerate(K, d)[1][:K].copy()

    def multi_indices(self, K, d):
        return self._enumerate(K, d)[0][:K].copy()

    def trace(self, d):
        return self.weights.total() ** d

    def tail(self, n, d):
        if n == 0:
            return self.trace(d)
        head = self._enumerate(n, d)[2][n - 1]
        return max(self.trace(d) - head, 0.0)

    def describe(self):
        w = self.weights
        return {"kind": self.kind, "weights": w.kind, "ratio": w.ratio,
                "alpha": w.alpha, "gamma": w.gamma}


def _prefix(values):
    # Compensated running sums so tails near the trace keep full accuracy.
    out = np.empty(len(values))
    total = 0.0
    comp = 0.0
    for i, v in enumerate(values):
        y = v - comp
        t = total + y
        comp = (t - total) - y
        total = t
        out[i] = total
    return out


@dataclass(frozen=True)
class Scaled(DecayFamily):
    """``lambda_{k,d} = factor(d) * base.lambda_{k,d}`` with the same basis."""

    base: DecayFamily
    factor: Callable[[int], float]
    label: str = "scaled"
    kind = "scaled"

    def eigenvalues(self, K, d):
        return self.factor(d) * self.base.eigenvalues(K, d)

    def multi_indices(self, K, d):
        return self.base.multi_indices(K, d)

    def trace(self, d):
        return self.factor(d) * self.base.trace(d)

    def tail(self, n, d):
        return self.factor(d) * self.base.tail(n, d)

    def describe(self):
        return {"kind": self.kind, "label": self.label, "base": self.base.describe()}


@dataclass(frozen=True)
class ProblemModel:
    """A d-variate problem on [0, 1]^d with uniform density.

    ``eigenvalue(k)`` is paired with ``basis`` function ``k``; both are
    1-based as in the usual numbering of eigenpairs.
    """

    family: DecayFamily
    d: int = 1

    def __post_init__(self):
        check_positive_int(self.d, "d")

    def eigenvalue(self, k):
        check_positive_int(k, "k")
        return self.family.eigenvalue(k, self.d)

    def eigenvalues(self, K):
        check_positive_int(K, "K")
        return self.family.eigenvalues(K, self.d)

    def trace(self):
        return self.family.trace(self.d)

    def tail_sum(self, n):
        check_positive_int(n, "n", minimum=0)
        return self.family.tail(n, self.d)

    def multi_indices(self, K):
        return self.family.multi_indices(K, self.d)

    def basis_matrix(self, X, K):
        """(n, K) matrix of the first ``K`` basis functions at points ``X``."""
        X = check_points(X, self.d)
        return basis.evaluate(X, self.multi_indices(K))

    def density(self, X):
        """The domain density; identically 1 on the unit cube."""
        X = check_points(X, self.d)
        return np.ones(X.shape[0])

    def kl_truncation(self, rel_tol=1e-6, max_terms=None):
        """Smallest ``K`` with ``tail_sum(K) <= rel_tol * trace``, optionally capped."""
        gamma = self.trace()
        if gamma == 0.0:
            return 1
        target = rel_tol * gamma
        K = _least_index(self.tail_sum, target, cap=max_terms)
        K = max(K, 1)
        if max_terms is not None:
            K = min(K, max_terms)
        return K


def _least_index(tail, target, cap=None):
    # Least n >= 0 with tail(n) <= target for a nonincreasing tail.
    if tail(0) <= target:
        return 0
    hi = 1
    while tail(hi) > target:
        if cap is not None and hi >= cap:
            return cap
        hi *= 2
        if hi > 2**62:
            raise NonSummable("tail does not reach the target; spectrum not summable?")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail(mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class RandomFunction:
    """Truncated Karhunen-Loeve draw ``f = sum_k c_k eta_k``."""

    coefficients: np.ndarray

    @property
    def truncation(self):
        return len(self.coefficients)

    def norm_sq(self):
        """``||f||^2`` in L2 by Parseval."""
        return float(np.dot(self.coefficients, self.coefficients))


# Functional surface ---------------------------------------------------------


def eigenvalue(model, k):
    return model.eigenvalue(k)


def trace(model, tol=1e-12):
    """Covariance trace (squared initial error).

    Every family is summed in closed form (geometric series, Hurwitz zeta,
    product of univariate sums), so ``tol`` is met without iteration.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    return model.trace()


def tail_sum(model, n, tol=1e-12):
    """``sum_{k > n} lambda_k``; the square root is the optimal error with n
    linear functionals."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return model.tail_sum(n)


def eval_basis(model, k, x):
    """Value of the k-th (1-based) basis function at one point or many."""
    check_positive_int(k, "k")
    X = check_points(x, model.d, name="x")
    vals = basis.evaluate(X, model.multi_indices(k)[k - 1:k])[:, 0]
    return float(vals[0]) if np.ndim(x) <= (0 if model.d == 1 else 1) else vals


def sample_function(model, K, rng):
    """Draw ``c_k = sqrt(lambda_k) g_k`` for ``k <= K`` with standard normal ``g``."""
    check_positive_int(K, "K")
    rng = as_generator(rng)
    lam = model.eigenvalues(K)
    g = rng.standard_normal(K)
    return RandomFunction(np.sqrt(lam) * g)


def eval_function(f, model, x):
    """Pointwise value ``sum_k c_k eta_k(x)``."""
    X = check_points(x, model.d, name="x")
    Phi = basis.evaluate(X, model.multi_indices(f.truncation))
    vals = Phi @ f.coefficients
    return float(vals[0]) if np.ndim(x) <= (0 if model.d == 1 else 1) else vals
