"""Information complexity and the bounds transferring it to function values.

``n_all(eps)`` is the least ``n`` with ``tail_sum(n) <= (eps * CRI)**2``;
the transfer bounds convert it into upper bounds on the number of point
evaluations needed for the same accuracy.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_open_unit, check_positive_int
from .exceptions import DeltaOutOfRange, GridMismatch
from .lsq import a_delta, avg_error_std_empirical, schedule_m_fixed
from .model import ProblemModel, _least_index

SQRT2 = math.sqrt(2.0)
LOG_192_SQRT2 = math.log(192.0 * SQRT2)
LOG_48 = math.log(48.0)


class Criterion(enum.Enum):
    ABS = "ABS"
    NOR = "NOR"

    def cri(self, model):
        """1 for the absolute criterion, the initial error for the normalized one."""
        return 1.0 if self is Criterion.ABS else math.sqrt(model.trace())


def info_complexity(model, eps, crit=Criterion.ABS):
    """Least ``n`` with ``sqrt(tail_sum(n)) <= eps * CRI``.

    Exponential search followed by bisection on the nonincreasing tail.
    """
    eps = float(eps)
    if not eps > 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    crit = Criterion(crit)
    threshold = (eps * crit.cri(model)) ** 2
    return _least_index(model.tail_sum, threshold)


def info_complexity_scan(model, eps, crit=Criterion.ABS, limit=10**7):
    """Linear-scan reference for :func:`info_complexity`."""
    crit = Criterion(crit)
    threshold = (float(eps) * crit.cri(model)) ** 2
    for n in range(limit + 1):
        if model.tail_sum(n) <= threshold:
            return n
    raise RuntimeError(f"scan exceeded {limit}")


@dataclass
class ComplexityProfile:
    """``n_all`` on an (eps, d) grid; ``table[i, j]`` is at ``eps[i], dims[j]``."""

    model_id: str
    criterion: Criterion
    eps: np.ndarray
    dims: np.ndarray
    table: np.ndarray
    family: object = field(default=None, repr=False)

    def cells(self):
        for i, e in enumerate(self.eps):
            for j, d in enumerate(self.dims):
                yield float(e), int(d), int(self.table[i, j])


def complexity_profile(family, eps_grid, dims, crit=Criterion.ABS, model_id="model"):
    crit = Criterion(crit)
    eps = np.asarray(eps_grid, dtype=float)
    dims = np.asarray(dims, dtype=int)
    table = np.zeros((eps.size, dims.size), dtype=np.int64)
    for j, d in enumerate(dims):
        model = ProblemModel(family, int(d))
        for i, e in enumerate(eps):
            table[i, j] = info_complexity(model, e, crit)
    return ComplexityProfile(model_id, crit, eps, dims, table, family)


# Transfer bounds -------------------------------------------------------------


def transfer_log_bound(n_all):
    """``96 sqrt2 (N + 1) (ln(N + 1) + ln(192 sqrt2))`` with ``N = n_all(eps/4)``."""
    check_positive_int(n_all, "n_all", minimum=0)
    x = n_all + 1.0
    return 96.0 * SQRT2 * x * (math.log(x) + LOG_192_SQRT2)


def _sup_log_over_power(scale, slope, offset, omega):
    # sup_{x >= 1} scale * (slope ln x + offset) / x**omega; stationary point
    # at ln x = 1/omega - offset/slope.
    log_x = 1.0 / omega - offset / slope
    if log_x <= 0.0:
        return scale * offset, 1.0
    return scale * slope / omega * math.exp(-omega * log_x), math.exp(log_x)


def power_constant(omega):
    """``C_omega = sup_{x>=1} 96 sqrt2 (ln x + ln(192 sqrt2)) / x**omega``."""
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    return _sup_log_over_power(96.0 * SQRT2, 1.0, LOG_192_SQRT2, omega)[0]


def transfer_power_bound(n_all, omega):
    """``C_omega (N + 1)**(1 + omega)`` with ``N = n_all(eps/4)``."""
    check_positive_int(n_all, "n_all", minimum=0)
    return power_constant(omega) * (n_all + 1.0) ** (1.0 + omega)


def _check_small_delta(delta):
    delta = check_open_unit(delta, "delta")
    if delta > math.exp(-math.e):
        raise DeltaOutOfRange(f"delta must be <= exp(-e) ~ 0.0660, got {delta}")
    return delta


def transfer_delta_bound(n_all, delta):
    """``48 (4 (ln 48 + ln ln(1/delta) + ln(N + 1)) + ln(1/delta)) (N + 1)``.

    ``N`` is the complexity at ``eps / a_delta(delta)``.  Valid for
    ``delta <= exp(-e)``.
    """
    check_positive_int(n_all, "n_all", minimum=0)
    delta = _check_small_delta(delta)
    inv = math.log(1.0 / delta)
    x = n_all + 1.0
    return 48.0 * (4.0 * (LOG_48 + math.log(inv) + math.log(x)) + inv) * x


def delta_power_constant(omega, delta):
    """``sup_{x>=1} 48 (4 (ln 48 + ln ln(1/delta) + ln x) + ln(1/delta)) / x**omega``."""
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    delta = _check_small_delta(delta)
    inv = math.log(1.0 / delta)
    offset = 4.0 * (LOG_48 + math.log(inv)) + inv
    return _sup_log_over_power(48.0, 4.0, offset, omega)[0]


def transfer_delta_power_bound(n_all, omega, delta):
    """``C_{omega,delta} (N + 1)**(1 + omega)``, ``N`` at ``eps / a_delta``."""
    check_positive_int(n_all, "n_all", minimum=0)
    return delta_power_constant(omega, delta) * (n_all + 1.0) ** (1.0 + omega)


# Exponential convergence -----------------------------------------------------


def exp_decay_rate(q):
    """``q**(1 / (48 sqrt2))``."""
    q = check_open_unit(q, "q")
    return q ** (1.0 / (48.0 * SQRT2))


def exp_decay_bound(n, A, q, gamma_d):
    """``4A/(1-q) * q2**(n / ln 4n) * sqrt(gamma_d)``, ``q2 = q**(1/(48 sqrt2))``."""
    check_positive_int(n, "n")
    q2 = exp_decay_rate(q)
    return 4.0 * A / (1.0 - q) * q2 ** (n / math.log(4.0 * n)) * math.sqrt(gamma_d)


@dataclass(frozen=True)
class ExpHypothesis:
    holds: bool
    witness: int = 0
    checked: int = 0


def check_exp_hypothesis(model, A, q, k_max):
    """Check ``sqrt(lambda_k) <= A q**k sqrt(trace)`` for ``k = 1..k_max``.

    The comparison is done in logarithms so large ``k`` does not underflow.
    """
    k_max = check_positive_int(k_max, "k_max")
    lam = model.eigenvalues(k_max)
    gamma = model.trace()
    k = np.arange(1, k_max + 1, dtype=float)
    if gamma <= 0.0:
        # zero spectrum: both sides vanish
        return ExpHypothesis(True, 0, k_max)
    with np.errstate(divide="ignore"):
        lhs = 0.5 * np.log(lam)
    rhs = math.log(A) + k * math.log(q) + 0.5 * math.log(gamma)
    bad = np.flatnonzero(lhs > rhs + 1e-12)
    if bad.size:
        return ExpHypothesis(False, int(bad[0]) + 1, k_max)
    return ExpHypothesis(True, 0, k_max)


def min_exp_constant(model, q, k_max):
    """Smallest ``A >= 1`` passing :func:`check_exp_hypothesis` up to ``k_max``."""
    lam = model.eigenvalues(k_max)
    k = np.arange(1, k_max + 1, dtype=float)
    with np.errstate(divide="ignore"):
        log_ratio = 0.5 * np.log(lam) - k * math.log(q) - 0.5 * math.log(model.trace())
    return max(1.0, float(np.exp(np.max(log_ratio))))


# Transfer audit ---------------------------------------------------------------


@dataclass(frozen=True)
class TransferRow:
    model: str
    criterion: str
    eps: float
    d: int
    n_all: int
    bound_214: float
    bound_217: float
    bound_218: float
    n_std_empirical: object
    passed: bool
    witness: str


def std_error_curve(model, n_grid, trials_X, trials_f, seed, **kwargs):
    """Empirical errors of the fixed-schedule recovery at each ``n`` in ``n_grid``.

    Budgets whose schedule gives ``m = 0`` are skipped.  Each ``n`` uses
    its own seed stream ``seed + index`` so the curve is reproducible.
    """
    out = {}
    for i, n in enumerate(n_grid):
        sched = schedule_m_fixed(int(n))
        if not sched.feasible:
            continue
        out[int(n)] = avg_error_std_empirical(
            model, sched.n, sched.m, sched.delta, trials_X, trials_f, seed + i, **kwargs
        )
    return out


def empirical_std_complexity(curve, threshold):
    """Least tested ``n`` whose error CI upper end is ``<= threshold``, else ``None``."""
    for n in sorted(curve):
        if curve[n].error_ci_high <= threshold:
            return n
    return None


def verify_transfer(profile_all, std_table, omega=0.1, delta=0.01, family=None):
    """Audit ``n_all <= n_std <= bound_214`` and ``bound_217 >= bound_214`` per cell.

    ``std_table`` maps ``(eps, d)`` to the empirical point-evaluation
    complexity (``None`` when no tested budget reached ``eps``).
    ``bound_218`` is reported for reference at the given ``delta``.
    """
    keys = {(e, d) for e, d, _ in profile_all.cells()}
    if set(std_table) != keys:
        raise GridMismatch(
            f"std table covers {sorted(std_table)}, profile covers {sorted(keys)}"
        )
    family = family or profile_all.family
    crit = profile_all.criterion
    amp = a_delta(delta)
    rows = []
    for e, d, n_all in profile_all.cells():
        model = ProblemModel(family, d)
        quarter = info_complexity(model, e / 4.0, crit)
        shifted = info_complexity(model, e / amp, crit)
        b214 = transfer_log_bound(quarter)
        b217 = transfer_power_bound(quarter, omega)
        b218 = transfer_delta_power_bound(shifted, omega, delta)
        n_std = std_table[(e, d)]
        problems = []
        if n_std is None:
            problems.append("no tested budget reached eps")
        else:
            if n_all > n_std:
                problems.append(f"n_all={n_all} > n_std={n_std}")
            if n_std > b214:
                problems.append(f"n_std={n_std} > bound_214={b214:.6g}")
        if b217 < b214:
            problems.append(f"bound_217={b217:.6g} < bound_214={b214:.6g}")
        rows.append(TransferRow(profile_all.model_id, crit.value, e, d, n_all,
                                b214, b217, b218, n_std, not problems,
                                "; ".join(problems)))
    return rows
