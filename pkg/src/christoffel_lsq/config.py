"""Experiment configuration: YAML file -> validated :class:`ExperimentConfig`.

Example::

    model:
      id: geometric-demo
      family: geometric
      q: 0.5
      d: [1]
    grids:
      eps: [0.3, 0.2, 0.1]
      n: [600, 1200, 2400]
    mc:
      trials_X: 100
      trials_f: 100
      seed: 20240601
    outputs:
      dir: out/geometric

Several models may be listed under ``models:`` instead of ``model:``.
"""

import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional

import yaml

from .exceptions import ConfigInvalid, NonSummable
from .lsq import FIXED_DELTA
from .model import Algebraic, Finite, Geometric, Scaled, TensorProduct, UnivariateWeights


@dataclass
class ModelSpec:
    id: str
    family: object
    dims: list
    raw: dict


@dataclass
class ScheduleCell:
    n: int
    delta: float
    label: str


@dataclass
class ExperimentConfig:
    models: list
    eps: list = field(default_factory=lambda: [0.3, 0.2, 0.1])
    n: list = field(default_factory=lambda: [600])
    m: Optional[list] = None
    delta: float = 0.01
    omega: list = field(default_factory=lambda: [0.1])
    st: list = field(default_factory=lambda: [(1.0, 1.0)])
    uwt: list = field(default_factory=lambda: [(0.5, 0.5), (0.25, 0.25)])
    schedule: list = field(default_factory=list)
    k_max: int = 20
    criteria: list = field(default_factory=lambda: ["NOR"])
    audit_cases: int = 0
    exp_q: Optional[float] = None
    exp_A: Optional[float] = None
    trials: int = 1000
    trials_X: int = 100
    trials_f: int = 100
    rel_tol: float = 1e-6
    max_terms: int = 2048
    seed: int = 0
    out_dir: str = "out"
    formats: list = field(default_factory=lambda: ["csv"])
    precision: int = 12
    source_text: str = ""

    @property
    def sha256(self):
        return hashlib.sha256(self.source_text.encode("utf-8")).hexdigest()


def _section(raw, name):
    val = raw.get(name, {})
    if val is None:
        return {}
    if not isinstance(val, dict):
        raise ConfigInvalid(name, "must be a mapping")
    return val


def _number(val, where, lo=None, hi=None, open_lo=False, open_hi=False, integer=False):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigInvalid(where, f"expected a number, got {val!r}")
    if integer and (not float(val).is_integer()):
        raise ConfigInvalid(where, f"expected an integer, got {val!r}")
    x = int(val) if integer else float(val)
    if lo is not None and (x < lo or (open_lo and x == lo)):
        raise ConfigInvalid(where, f"must be {'>' if open_lo else '>='} {lo}, got {val!r}")
    if hi is not None and (x > hi or (open_hi and x == hi)):
        raise ConfigInvalid(where, f"must be {'<' if open_hi else '<='} {hi}, got {val!r}")
    return x


def _list(val, where):
    if val is None:
        return None
    if not isinstance(val, list):
        val = [val]
    return val


def _delta(val, where):
    if val == "fixed":
        return FIXED_DELTA
    return _number(val, where, 0.0, 1.0, open_lo=True, open_hi=True)


TRACE_GROWTH = {
    # Gamma_d as a function of d; eigenvalues are rescaled to hit it.
    "double-exponential": lambda spec: (lambda d: spec.get("base", 2.0) ** (spec.get("base", 2.0) ** d)),
    "exponential": lambda spec: (lambda d: math.exp(spec.get("rate", 1.0) * d)),
    "polynomial": lambda spec: (lambda d: float(d) ** spec.get("power", 1.0)),
}


def build_family(spec, where):
    kind = spec.get("family")
    try:
        if kind == "algebraic":
            fam = Algebraic(alpha=_number(spec.get("alpha"), f"{where}.alpha"),
                            C=_number(spec.get("C", 1.0), f"{where}.C", 0.0))
        elif kind == "geometric":
            if "ratio" in spec:
                fam = Geometric.from_ratio(
                    _number(spec["ratio"], f"{where}.ratio", 0.0, 1.0, True, True),
                    _number(spec.get("scale", 1.0), f"{where}.scale", 0.0))
            else:
                fam = Geometric(q=_number(spec.get("q"), f"{where}.q", 0.0, 1.0, True, True),
                                A=_number(spec.get("A", 1.0), f"{where}.A", 0.0))
        elif kind == "finite":
            vals = _list(spec.get("values"), f"{where}.values")
            if not vals:
                raise ConfigInvalid(f"{where}.values", "must be a nonempty list")
            fam = Finite(tuple(_number(v, f"{where}.values[{i}]", 0.0) for i, v in enumerate(vals)))
        elif kind == "tensor":
            w = spec.get("weights")
            if not isinstance(w, dict):
                raise ConfigInvalid(f"{where}.weights", "must be a mapping")
            fam = TensorProduct(UnivariateWeights(
                kind=w.get("kind", "geometric"),
                ratio=float(w.get("ratio", 0.5)),
                alpha=float(w.get("alpha", 2.0)),
                gamma=float(w.get("gamma", 1.0)),
            ))
        else:
            raise ConfigInvalid(f"{where}.family",
                                f"unknown family {kind!r} (algebraic, geometric, finite, tensor)")
    except (NonSummable, ValueError) as exc:
        if isinstance(exc, ConfigInvalid):
            raise
        raise ConfigInvalid(where, str(exc)) from exc
    growth = spec.get("trace_growth")
    if growth is not None:
        if not isinstance(growth, dict) or growth.get("kind") not in TRACE_GROWTH:
            raise ConfigInvalid(f"{where}.trace_growth",
                                f"kind must be one of {sorted(TRACE_GROWTH)}")
        target = TRACE_GROWTH[growth["kind"]](growth)
        base = fam
        fam = Scaled(base, lambda d, base=base, target=target: target(d) / base.trace(d),
                     label=growth["kind"])
    return fam


def _model_spec(spec, where):
    if not isinstance(spec, dict):
        raise ConfigInvalid(where, "must be a mapping")
    dims = _list(spec.get("d", [1]), f"{where}.d")
    dims = [_number(d, f"{where}.d[{i}]", 1, integer=True) for i, d in enumerate(dims)]
    return ModelSpec(id=str(spec.get("id", spec.get("family", "model"))),
                     family=build_family(spec, where), dims=dims, raw=dict(spec))


def _pairs(val, where):
    out = []
    for i, pair in enumerate(_list(val, where) or []):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigInvalid(f"{where}[{i}]", "expected a pair [s, t]")
        out.append(tuple(_number(x, f"{where}[{i}]", 0.0, open_lo=True) for x in pair))
    return out


def parse_config(text):
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigInvalid("<file>", f"not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigInvalid("<file>", "top level must be a mapping")

    if "models" in raw:
        specs = raw["models"]
        if not isinstance(specs, list) or not specs:
            raise ConfigInvalid("models", "must be a nonempty list")
        models = [_model_spec(s, f"models[{i}]") for i, s in enumerate(specs)]
    elif "model" in raw:
        models = [_model_spec(raw["model"], "model")]
    else:
        raise ConfigInvalid("model", "missing (give `model:` or `models:`)")

    cfg = ExperimentConfig(models=models, source_text=text)
    grids = _section(raw, "grids")
    if "eps" in grids:
        cfg.eps = [_number(e, f"grids.eps[{i}]", 0.0, 1.0, True, True)
                   for i, e in enumerate(_list(grids["eps"], "grids.eps"))]
    if "n" in grids:
        cfg.n = [_number(n, f"grids.n[{i}]", 1, integer=True)
                 for i, n in enumerate(_list(grids["n"], "grids.n"))]
    if grids.get("m") is not None:
        cfg.m = [_number(m, f"grids.m[{i}]", 1, integer=True)
                 for i, m in enumerate(_list(grids["m"], "grids.m"))]
    if "delta" in grids:
        cfg.delta = _delta(grids["delta"], "grids.delta")
    if "omega" in grids:
        cfg.omega = [_number(w, f"grids.omega[{i}]", 0.0, open_lo=True)
                     for i, w in enumerate(_list(grids["omega"], "grids.omega"))]
    if "st" in grids:
        cfg.st = _pairs(grids["st"], "grids.st")
    if "uwt" in grids:
        cfg.uwt = _pairs(grids["uwt"], "grids.uwt")
    if "k_max" in grids:
        cfg.k_max = _number(grids["k_max"], "grids.k_max", 1, integer=True)
    if "criteria" in grids:
        crits = _list(grids["criteria"], "grids.criteria")
        for i, c in enumerate(crits):
            if c not in ("ABS", "NOR"):
                raise ConfigInvalid(f"grids.criteria[{i}]", f"must be ABS or NOR, got {c!r}")
        cfg.criteria = crits
    if "audit_cases" in grids:
        cfg.audit_cases = _number(grids["audit_cases"], "grids.audit_cases", 0, integer=True)
    for i, cell in enumerate(_list(grids.get("schedule"), "grids.schedule") or []):
        where = f"grids.schedule[{i}]"
        if not isinstance(cell, dict) or "n" not in cell or "delta" not in cell:
            raise ConfigInvalid(where, "expected a mapping with n and delta")
        cfg.schedule.append(ScheduleCell(
            n=_number(cell["n"], f"{where}.n", 1, integer=True),
            delta=_delta(cell["delta"], f"{where}.delta"),
            label=str(cell["delta"]),
        ))
    exp = _section(raw, "exp_decay")
    if "q" in exp:
        cfg.exp_q = _number(exp["q"], "exp_decay.q", 0.0, 1.0, True, True)
    if exp.get("A") is not None:
        cfg.exp_A = _number(exp["A"], "exp_decay.A", 1.0)

    mc = _section(raw, "mc")
    if "seed" not in mc:
        raise ConfigInvalid("mc.seed", "required (no implicit entropy)")
    cfg.seed = _number(mc["seed"], "mc.seed", 0, 2**64 - 1, integer=True)
    for key in ("trials", "trials_X", "trials_f"):
        if key in mc:
            setattr(cfg, key, _number(mc[key], f"mc.{key}", 1, integer=True))
    trunc = mc.get("truncation", {}) or {}
    if not isinstance(trunc, dict):
        raise ConfigInvalid("mc.truncation", "must be a mapping")
    if "rel_tol" in trunc:
        cfg.rel_tol = _number(trunc["rel_tol"], "mc.truncation.rel_tol", 0.0, 1.0, True, True)
    if "max_terms" in trunc:
        cfg.max_terms = _number(trunc["max_terms"], "mc.truncation.max_terms", 1, integer=True)

    out = _section(raw, "outputs")
    if "dir" in out:
        cfg.out_dir = str(out["dir"])
    if "formats" in out:
        fmts = _list(out["formats"], "outputs.formats")
        for i, f in enumerate(fmts):
            if f not in ("csv", "json"):
                raise ConfigInvalid(f"outputs.formats[{i}]", f"must be csv or json, got {f!r}")
        cfg.formats = fmts
    if "precision" in out:
        cfg.precision = _number(out["precision"], "outputs.precision", 1, 17, integer=True)
    return cfg


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigInvalid("<file>", f"cannot read {path}: {exc}") from exc
    return parse_config(text)
