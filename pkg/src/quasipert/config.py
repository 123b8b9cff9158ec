"""Experiment configuration: TOML loading, validation and object construction.

A config fully determines a run.  :func:`resolve` fills every documented
default so the manifest can echo the complete set of tunables.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

try:
    import tomllib as tomli
except ModuleNotFoundError:  # Python < 3.11
    import tomli

from .errors import ConfigError
from .fields import FieldTerm, GaugeField, GaugeFunction
from .hilbert import HO1D, HO2D, Basis, Constants, State, build_basis
from .polynomial import Poly
from .profiles import from_dict as profile_from_dict
from .profiles import to_dict as profile_to_dict

BUNDLED = "configs"
TARGETS = {"A_x": ("A", 0), "A_y": ("A", 1), "phi": ("phi", None)}
OBSERVABLES = ("energy", "zeta", "x", "y", "vx", "vy")


def bundled_names() -> list[str]:
    root = resources.files("quasipert") / BUNDLED
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def load_raw(source: str | Path) -> dict:
    """Read a config from a file path or a bundled config name."""
    path = Path(source)
    if path.is_file():
        text = path.read_text()
    else:
        res = resources.files("quasipert") / BUNDLED / f"{source}.toml"
        if not res.is_file():
            raise ConfigError("--config", f"no file or bundled config named {str(source)!r}")
        text = res.read_text()
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError("--config", f"invalid TOML: {exc}") from exc


# validation helpers

def _num(sec, key, name, default=None, positive=False, required=False):
    if key not in sec:
        if required:
            raise ConfigError(name, "missing")
        return default
    v = sec[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(name, f"expected a finite number, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(name, f"must be positive, got {v!r}")
    return float(v)


def _choice(sec, key, name, options, default):
    v = sec.get(key, default)
    if v not in options:
        raise ConfigError(name, f"expected one of {list(options)}, got {v!r}")
    return v


def _bool(sec, key, name, default):
    v = sec.get(key, default)
    if not isinstance(v, bool):
        raise ConfigError(name, f"expected true/false, got {v!r}")
    return v


def _table(raw, key):
    v = raw.get(key, {})
    if not isinstance(v, dict):
        raise ConfigError(key, "expected a table")
    return v


def _check_unknown(sec, allowed, prefix):
    for k in sec:
        if k not in allowed:
            raise ConfigError(f"{prefix}.{k}", "unknown key")


def _profile(d, name):
    if not isinstance(d, dict):
        raise ConfigError(name, "expected an inline table such as {kind = \"rect\", t1 = 2.0}")
    try:
        prof = profile_from_dict(d)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(name, str(exc)) from exc
    return prof


def _poly_terms(v, nvars, name):
    if not isinstance(v, list) or not v:
        raise ConfigError(name, "expected a list of [coefficient, [exponents]] pairs")
    out = []
    for item in v:
        if (not isinstance(item, list) or len(item) != 2 or isinstance(item[0], bool)
                or not isinstance(item[0], (int, float)) or not isinstance(item[1], list)):
            raise ConfigError(name, f"bad term {item!r}")
        exps = item[1]
        if len(exps) != nvars or any(not isinstance(e, int) or e < 0 for e in exps):
            raise ConfigError(name, f"exponents {exps!r} must be {nvars} non-negative integers")
        if sum(exps) > 2:
            raise ConfigError(name, f"degree of {exps!r} exceeds 2")
        out.append([float(item[0]), list(exps)])
    return out


def _observables(sec, name, ndim, default):
    obs = sec.get("observables", default)
    if not isinstance(obs, list) or not obs:
        raise ConfigError(name, "expected a non-empty list of observable names")
    for o in obs:
        if o not in OBSERVABLES:
            raise ConfigError(name, f"unknown observable {o!r}")
        if ndim == 1 and o in ("zeta", "y", "vy"):
            raise ConfigError(name, f"observable {o!r} needs a 2D basis")
    return list(obs)


def resolve(raw: dict) -> dict:
    """Validate ``raw`` and return the fully resolved config (defaults filled in)."""
    raw = copy.deepcopy(raw)
    _check_unknown(raw, ("experiment", "constants", "basis", "field", "gauge", "initial",
                         "dirac", "quasicanon", "oracle", "soperator"), "config")
    out = {}

    ex = _table(raw, "experiment")
    _check_unknown(ex, ("name", "T", "dt"), "experiment")
    out["experiment"] = {
        "name": str(ex.get("name", "experiment")),
        "T": _num(ex, "T", "experiment.T", positive=True, required=True),
        "dt": _num(ex, "dt", "experiment.dt", positive=True, required=True),
    }
    T, dt = out["experiment"]["T"], out["experiment"]["dt"]

    cs = _table(raw, "constants")
    _check_unknown(cs, ("hbar", "mass", "charge", "c_light"), "constants")
    out["constants"] = {k: _num(cs, k, f"constants.{k}", 1.0, positive=True)
                        for k in ("hbar", "mass", "charge", "c_light")}

    bs = _table(raw, "basis")
    _check_unknown(bs, ("kind", "omega0", "n_max"), "basis")
    kind = _choice(bs, "kind", "basis.kind", (HO1D, HO2D), None)
    n_max = bs.get("n_max", 10)
    if isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 4:
        raise ConfigError("basis.n_max", f"expected an integer >= 4, got {n_max!r}")
    out["basis"] = {"kind": kind, "omega0": _num(bs, "omega0", "basis.omega0", 1.0, positive=True),
                    "n_max": n_max}
    ndim = 1 if kind == HO1D else 2

    out["field"] = _resolve_field(_table(raw, "field"), ndim)
    if "gauge" in raw:
        g = _table(raw, "gauge")
        _check_unknown(g, ("terms",), "gauge")
        terms = g.get("terms")
        if not isinstance(terms, list) or not terms:
            raise ConfigError("gauge.terms", "expected a non-empty array of tables")
        out["gauge"] = {"terms": [
            {"poly": _poly_terms(t.get("poly"), ndim, f"gauge.terms[{i}].poly"),
             "profile": _profile_dict(t.get("profile"), f"gauge.terms[{i}].profile")}
            for i, t in enumerate(terms)]}
    else:
        out["gauge"] = None

    ini = _table(raw, "initial")
    _check_unknown(ini, ("state", "coherent"), "initial")
    if "coherent" in ini:
        if ndim != 1:
            raise ConfigError("initial.coherent", "coherent states need an HO1D basis")
        a = ini["coherent"]
        a = [a, 0.0] if isinstance(a, (int, float)) and not isinstance(a, bool) else a
        if not (isinstance(a, list) and len(a) == 2 and all(isinstance(x, (int, float)) for x in a)):
            raise ConfigError("initial.coherent", "expected a number or [re, im]")
        out["initial"] = {"coherent": [float(a[0]), float(a[1])]}
    else:
        st = ini.get("state", [0] if ndim == 1 else [0, 0])
        st = [st] if isinstance(st, int) and not isinstance(st, bool) else st
        if not (isinstance(st, list) and len(st) == ndim and all(isinstance(x, int) for x in st)):
            raise ConfigError("initial.state", f"expected {ndim} integer quantum number(s), got {st!r}")
        out["initial"] = {"state": list(st)}

    if "dirac" in raw:
        s = _table(raw, "dirac")
        _check_unknown(s, ("include_A2", "quadrature", "rk4", "dt", "euler_dt", "euler_steps"), "dirac")
        steps = s.get("euler_steps", 3)
        if isinstance(steps, bool) or not isinstance(steps, int) or steps < 1:
            raise ConfigError("dirac.euler_steps", f"expected a positive integer, got {steps!r}")
        out["dirac"] = {
            "include_A2": _bool(s, "include_A2", "dirac.include_A2", False),
            "quadrature": _choice(s, "quadrature", "dirac.quadrature", ("simpson", "adaptive"), "simpson"),
            "rk4": _bool(s, "rk4", "dirac.rk4", True),
            "dt": _num(s, "dt", "dirac.dt", dt, positive=True),
            "euler_dt": _num(s, "euler_dt", "dirac.euler_dt", 0.1, positive=True),
            "euler_steps": steps,
        }
    if "quasicanon" in raw:
        s = _table(raw, "quasicanon")
        _check_unknown(s, ("observables", "dt", "rule", "poisson_times"), "quasicanon")
        pt = s.get("poisson_times", [T * (k + 0.5) / 5 for k in range(5)])
        if not isinstance(pt, list) or any(isinstance(x, bool) or not isinstance(x, (int, float))
                                           or not 0 <= x <= T for x in pt):
            raise ConfigError("quasicanon.poisson_times", "expected a list of times in [0, T]")
        out["quasicanon"] = {
            "observables": _observables(s, "quasicanon.observables", ndim, ["energy"]),
            "dt": _num(s, "dt", "quasicanon.dt", dt, positive=True),
            "rule": _choice(s, "rule", "quasicanon.rule", ("left", "midpoint"), "left"),
            "poisson_times": [float(x) for x in pt],
        }
    if "oracle" in raw:
        s = _table(raw, "oracle")
        _check_unknown(s, ("observables", "dt", "method", "gauge", "include_A2"), "oracle")
        gauge = _choice(s, "gauge", "oracle.gauge", ("original", "transformed"), "original")
        if gauge == "transformed" and out["gauge"] is None:
            raise ConfigError("oracle.gauge", "'transformed' requires a [gauge] section")
        out["oracle"] = {
            "observables": _observables(s, "oracle.observables", ndim, ["energy"]),
            "dt": _num(s, "dt", "oracle.dt", dt, positive=True),
            "method": _choice(s, "method", "oracle.method",
                              ("crank_nicolson", "midpoint_exponential"), "crank_nicolson"),
            "gauge": gauge,
            "include_A2": _bool(s, "include_A2", "oracle.include_A2", False),
        }
    if "soperator" in raw:
        s = _table(raw, "soperator")
        _check_unknown(s, ("observable", "consistency", "quadrature"), "soperator")
        obs = _observables({"observables": [s.get("observable", "energy")]}, "soperator.observable",
                           ndim, None)[0]
        cons = s.get("consistency", None)
        if cons is not None:
            cons = _observables({"observables": cons}, "soperator.consistency", ndim, None)
            if len(cons) != 2:
                raise ConfigError("soperator.consistency", "expected exactly two observables")
        out["soperator"] = {
            "observable": obs,
            "consistency": cons,
            "quadrature": _choice(s, "quadrature", "soperator.quadrature", ("simpson", "adaptive"), "simpson"),
        }
    return out


def _profile_dict(d, name):
    return profile_to_dict(_profile(d, name))


def _resolve_field(f, ndim):
    _check_unknown(f, ("preset", "amplitude", "axis", "profile", "terms"), "field")
    preset = f.get("preset")
    if preset is None:
        terms = f.get("terms", [])
        if not isinstance(terms, list):
            raise ConfigError("field.terms", "expected an array of tables")
        out = []
        for i, t in enumerate(terms):
            name = f"field.terms[{i}]"
            if not isinstance(t, dict):
                raise ConfigError(name, "expected a table")
            _check_unknown(t, ("target", "poly", "profile"), name)
            target = _choice(t, "target", f"{name}.target", tuple(TARGETS), None)
            if target == "A_y" and ndim == 1:
                raise ConfigError(f"{name}.target", "A_y needs a 2D basis")
            out.append({"target": target, "poly": _poly_terms(t.get("poly"), ndim, f"{name}.poly"),
                        "profile": _profile_dict(t.get("profile"), f"{name}.profile")})
        return {"preset": None, "terms": out}
    if preset not in ("uniform_electric", "symmetric_magnetic"):
        raise ConfigError("field.preset", f"unknown preset {preset!r}")
    if preset == "symmetric_magnetic" and ndim != 2:
        raise ConfigError("field.preset", "symmetric_magnetic needs an HO2D basis")
    axis = f.get("axis", 0)
    if preset == "uniform_electric" and (not isinstance(axis, int) or not 0 <= axis < ndim):
        raise ConfigError("field.axis", f"expected an axis index below {ndim}")
    return {"preset": preset, "amplitude": _num(f, "amplitude", "field.amplitude", required=True),
            "axis": axis, "profile": _profile_dict(f.get("profile"), "field.profile")}


@dataclass(frozen=True, eq=False)
class Experiment:
    config: dict
    constants: Constants
    basis: Basis
    field: GaugeField
    gauge: GaugeFunction | None
    psi0: State
    initial_index: int | None

    @property
    def T(self):
        return self.config["experiment"]["T"]


def _field_from(cfg, ndim):
    if cfg["preset"] == "uniform_electric":
        return GaugeField.uniform_electric(cfg["amplitude"], profile_from_dict(cfg["profile"]),
                                           ndim=ndim, axis=cfg["axis"])
    if cfg["preset"] == "symmetric_magnetic":
        return GaugeField.symmetric_magnetic(cfg["amplitude"], profile_from_dict(cfg["profile"]))
    A = [[] for _ in range(ndim)]
    phi = []
    for t in cfg["terms"]:
        term = FieldTerm(Poly(ndim, [(tuple(e), c) for c, e in t["poly"]]), profile_from_dict(t["profile"]))
        kind, axis = TARGETS[t["target"]]
        (phi if kind == "phi" else A[axis]).append(term)
    return GaugeField(ndim, tuple(tuple(a) for a in A), tuple(phi))


def build(resolved: dict) -> Experiment:
    """Instantiate basis, field, gauge function and initial state from a resolved config."""
    cst = Constants(**resolved["constants"])
    b = resolved["basis"]
    basis = build_basis(b["kind"], b["omega0"], b["n_max"], cst)
    field = _field_from(resolved["field"], basis.ndim)
    gauge = None
    if resolved["gauge"] is not None:
        gauge = GaugeFunction(basis.ndim, tuple(
            FieldTerm(Poly(basis.ndim, [(tuple(e), c) for c, e in t["poly"]]), profile_from_dict(t["profile"]))
            for t in resolved["gauge"]["terms"]))
        for t in gauge.terms:
            if t.profile.jumps():
                raise ConfigError("gauge.terms", f"profile {t.profile!r} is discontinuous")
    ini = resolved["initial"]
    if "coherent" in ini:
        psi0 = State.coherent(basis, complex(*ini["coherent"]))
        index = None
    else:
        qn = tuple(ini["state"])
        if basis.ndim == 2:
            n_r, m = qn
            if n_r < 0:
                raise ConfigError("initial.state", "radial quantum number must be >= 0")
        try:
            index = basis.index_of(*qn)
        except ValueError:
            raise ConfigError("initial.state", f"{list(qn)} is not a basis state") from None
        if index >= basis.interior_dim:
            raise ConfigError("initial.state", f"{list(qn)} lies outside the interior block")
        psi0 = State.eigenstate(basis, index)
    return Experiment(resolved, cst, basis, field, gauge, psi0, index)
