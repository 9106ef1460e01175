"""Finite-grid tractability verdicts from a complexity profile.

Tractability notions are statements about limits and suprema over all
``(eps, d)``; a finite table can only falsify them.  Each verdict is
therefore one of ``consistent``, ``violated`` or ``inconclusive``, with the
fitted constants and a witness explaining the call.

Polynomial-type notions (SPT, PT, QPT) are fitted by least squares in log
space on the inner grid (all cells except the smallest eps and the
largest d); the constant ``C`` is the smallest one making the inequality
hold there, and the outer shell is then used as a holdout.  Weak notions (WT,
(s,t)-WT, UWT) compare the largest defining ratio on the outer grid shell
with the largest ratio inside it.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import GridTooSmall

CONSISTENT = "consistent"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"

MAX_CONSTANT = 1e6
MAX_EXPONENT = 64.0

FAMILIES = ("ALG", "EXP")
# Strongest first; each notion implies every later one.
CHAIN = ("SPT", "PT", "QPT", "UWT", "WT")
NOTIONS = CHAIN + ("ST-WT",)
DEFAULT_UWT_PAIRS = ((0.5, 0.5), (0.25, 0.25))


@dataclass
class Verdict:
    family: str
    notion: str
    status: str
    constant: Optional[float] = None
    p: Optional[float] = None
    q: Optional[float] = None
    t: Optional[float] = None
    residual: Optional[float] = None
    trend: Optional[float] = None
    s_param: Optional[float] = None
    t_param: Optional[float] = None
    witness: str = ""

    @property
    def name(self):
        return f"{self.family}-{self.notion}"


@dataclass
class TractabilityReport:
    model_id: str
    criterion: str
    eps: np.ndarray
    dims: np.ndarray
    verdicts: list = field(default_factory=list)

    def get(self, family, notion, s=None, t=None):
        for v in self.verdicts:
            if v.family == family and v.notion == notion:
                if notion != "ST-WT" or (v.s_param == s and v.t_param == t):
                    return v
        raise KeyError(f"{family}-{notion}")

    def exponents(self):
        out = {}
        for fam in FAMILIES:
            out[f"{fam}-p"] = self.get(fam, "SPT").p
            out[f"{fam}-t"] = self.get(fam, "QPT").t
        return out

    def cone_violations(self):
        """Pairs (stronger, weaker) where the stronger notion is consistent
        but the weaker is not; always empty for reports built here."""
        bad = []
        for fam in FAMILIES:
            for i, strong in enumerate(CHAIN):
                if self.get(fam, strong).status != CONSISTENT:
                    continue
                for weak in CHAIN[i + 1:]:
                    if self.get(fam, weak).status != CONSISTENT:
                        bad.append((f"{fam}-{strong}", f"{fam}-{weak}"))
        return bad


def _eps_variable(eps, family):
    inv = np.log(1.0 / eps)
    return inv if family == "ALG" else np.log1p(inv)


def _check_grid(profile):
    if len(profile.eps) < 4 or len(profile.dims) < 3:
        raise GridTooSmall(
            f"need >= 4 eps values and >= 3 dimensions, got "
            f"{len(profile.eps)} x {len(profile.dims)}"
        )


def _lstsq(features, y):
    A = np.column_stack([np.ones(len(y))] + features)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return coef, float(np.sqrt(np.mean(resid ** 2))) if len(y) else 0.0


def _inner_mask(profile):
    # Cells used for fitting: everything except the smallest eps and the
    # largest d, which form the holdout shell.
    inner = np.ones(profile.table.shape, dtype=bool)
    inner[int(np.argmin(profile.eps)), :] = False
    inner[:, int(np.argmax(profile.dims))] = False
    return inner


def _fit_polynomial(profile, family, notion, inner):
    """Exponents fitted on the inner cells, and the resulting log-bound
    without constant on every cell."""
    E, Dm = np.meshgrid(profile.eps, profile.dims, indexing="ij")
    n = profile.table.astype(float)
    x = _eps_variable(E, family)
    logd = np.log(Dm)
    pos = (n >= 1) & inner
    y = np.log(n[pos])
    p = q = t = None
    if notion == "SPT":
        coef, res = _lstsq([x[pos]], y) if pos.sum() >= 2 else (np.zeros(2), 0.0)
        p = max(float(coef[1]), 0.0)
        shape = p * x
    elif notion == "PT":
        coef, res = _lstsq([logd[pos], x[pos]], y) if pos.sum() >= 3 else (np.zeros(3), 0.0)
        q, p = max(float(coef[1]), 0.0), max(float(coef[2]), 0.0)
        if coef[1] < 0 or coef[2] < 0:
            # refit the free exponent with the clamped one held at zero
            if coef[1] < 0 and pos.sum() >= 2:
                c2, res = _lstsq([x[pos]], y)
                p = max(float(c2[1]), 0.0)
            elif coef[2] < 0 and pos.sum() >= 2:
                c2, res = _lstsq([logd[pos]], y)
                q = max(float(c2[1]), 0.0)
        shape = q * logd + p * x
    else:
        z = (1.0 + logd) * (1.0 + x)
        coef, res = _lstsq([z[pos]], y) if pos.sum() >= 2 else (np.zeros(2), 0.0)
        t = max(float(coef[1]), 0.0)
        shape = t * z
    return shape, p, q, t, res


def _envelope(profile, shape, mask=None):
    # Smallest C with n <= C exp(shape) on the selected cells.
    n = profile.table.astype(float)
    pos = n >= 1
    if mask is not None:
        pos &= mask
    if not np.any(pos):
        return 1.0
    return float(np.exp(np.max(np.log(n[pos]) - shape[pos])))


def _polynomial_verdict(profile, family, notion):
    inner = _inner_mask(profile)
    shape, p, q, t, res = _fit_polynomial(profile, family, notion, inner)
    exps = [e for e in (p, q, t) if e is not None]
    verdict = Verdict(family, notion, CONSISTENT, p=p, q=q, t=t, residual=res)
    C_inner = _envelope(profile, shape, inner)
    C_all = _envelope(profile, shape)
    verdict.constant = C_all
    if max(exps) > MAX_EXPONENT:
        verdict.status = VIOLATED
        verdict.witness = f"fitted exponent {max(exps):.4g} exceeds cap {MAX_EXPONENT:g}"
    elif C_all > MAX_CONSTANT:
        verdict.status = VIOLATED
        verdict.witness = f"required constant {C_all:.4g} exceeds cap {MAX_CONSTANT:g}"
    elif C_all > C_inner * (1.0 + 1e-9):
        n = profile.table.astype(float)
        excess = np.where(inner | (n < 1), -np.inf, np.log(np.maximum(n, 1.0)) - shape)
        i, j = np.unravel_index(int(np.argmax(excess)), n.shape)
        bound = C_inner * math.exp(shape[i, j])
        verdict.status = VIOLATED
        verdict.witness = (
            f"holdout d={int(profile.dims[j])}, eps={profile.eps[i]:.4g}: "
            f"n={int(n[i, j])} > {bound:.6g} fitted on the inner grid"
        )
    else:
        verdict.witness = "bound holds on every cell, including the holdout shell"
    return verdict


def _weak_ratio(profile, family, s, t):
    E, Dm = np.meshgrid(profile.eps, profile.dims, indexing="ij")
    n = profile.table.astype(float)
    inv = 1.0 / E if family == "ALG" else 1.0 + np.log(1.0 / E)
    return np.log(np.maximum(n, 1.0)) / (inv ** s + Dm.astype(float) ** t)


def _weak_verdict(profile, family, notion, s, t):
    order = np.argsort(-profile.eps)  # eps^-1 ascending
    R = _weak_ratio(profile, family, s, t)[order]
    outer = np.zeros(R.shape, dtype=bool)
    outer[-1, :] = True
    outer[:, -1] = True
    out_max = float(R[outer].max())
    in_max = float(R[~outer].max())
    trend = out_max - in_max
    v = Verdict(family, notion, INCONCLUSIVE, trend=trend, s_param=s, t_param=t)
    if out_max == 0.0 or out_max < in_max:
        v.status = CONSISTENT
        v.witness = f"ratio shell max {out_max:.4g} < inner max {in_max:.4g}"
    else:
        v.witness = f"ratio shell max {out_max:.4g} >= inner max {in_max:.4g}"
    return v


def _own_verdict(profile, family, notion, s=None, t=None, uwt_pairs=DEFAULT_UWT_PAIRS):
    if notion in ("SPT", "PT", "QPT"):
        return _polynomial_verdict(profile, family, notion)
    if notion == "WT":
        return _weak_verdict(profile, family, "WT", 1.0, 1.0)
    if notion == "ST-WT":
        if s is None or t is None:
            raise ValueError("(s,t)-WT needs both s and t")
        return _weak_verdict(profile, family, "ST-WT", float(s), float(t))
    if notion == "UWT":
        parts = [_weak_verdict(profile, family, "UWT", a, b) for a, b in uwt_pairs]
        worst = max(parts, key=lambda v: v.trend)
        status = CONSISTENT if all(v.status == CONSISTENT for v in parts) else INCONCLUSIVE
        return Verdict(family, "UWT", status, trend=worst.trend,
                       s_param=worst.s_param, t_param=worst.t_param,
                       witness=f"worst pair (alpha, beta)=({worst.s_param:g}, {worst.t_param:g}): {worst.witness}")
    raise ValueError(f"unknown notion {notion!r}")


def _stronger(notion):
    if notion == "ST-WT":
        return ("SPT", "PT", "QPT", "UWT")
    return CHAIN[: CHAIN.index(notion)]


def classify_tractability(profile, notion, family="ALG", s=None, t=None,
                          uwt_pairs=DEFAULT_UWT_PAIRS):
    """Verdict for one notion; a consistent stronger notion implies this one."""
    _check_grid(profile)
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}")
    if notion not in NOTIONS:
        raise ValueError(f"notion must be one of {NOTIONS}")
    own = _own_verdict(profile, family, notion, s, t, uwt_pairs)
    if own.status == CONSISTENT:
        return own
    for strong in _stronger(notion):
        sv = _own_verdict(profile, family, strong, uwt_pairs=uwt_pairs)
        if sv.status == CONSISTENT:
            own.witness = f"implied by {family}-{strong} (own check: {own.status}; {own.witness})"
            own.status = CONSISTENT
            break
    return own


def tractability_report(profile, st_pairs=((1.0, 1.0),), uwt_pairs=DEFAULT_UWT_PAIRS):
    """All twelve verdicts (plus one (s,t)-WT row per requested pair)."""
    _check_grid(profile)
    report = TractabilityReport(profile.model_id, profile.criterion.value,
                                profile.eps, profile.dims)
    for fam in FAMILIES:
        for notion in CHAIN:
            report.verdicts.append(classify_tractability(profile, notion, fam, uwt_pairs=uwt_pairs))
        for s, t in st_pairs:
            report.verdicts.append(classify_tractability(profile, "ST-WT", fam, s, t, uwt_pairs))
    return report
