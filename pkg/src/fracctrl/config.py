"""Experiment configuration: schema, validation, (de)serialization.

Configurations are YAML documents with fixed sections (``system``,
``control``, ``problem``, ``rhs``, optional ``nonlocal``, ``sweep``,
``numerics``, ``seed``).  Validation via :func:`parse_config` reports every
problem found, each tagged with its field path, rather than stopping at the
first.  Parsed configurations are immutable plain-value dataclasses, so
``parse_config(serialize_config(cfg)) == cfg`` exactly.
"""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass

import numpy as np
import yaml

from .errors import ConfigError
from .gramian import ControlMap
from .semilinear import RHS_PRESETS, SELECTIONS, InclusionRHS, NonlocalCondition
from .spectral import SpectralOperator

SYSTEM_PRESETS = ("diffusion",)
STATE_PROFILES = ("zero", "profile:inverse_squares")


@dataclass(frozen=True)
class SystemConfig:
    alpha: float
    N: int = None  # type: ignore[assignment]
    preset: str = None  # type: ignore[assignment]
    r: float = None  # type: ignore[assignment]
    eigenvalues: tuple = None  # type: ignore[assignment]


@dataclass(frozen=True)
class ControlConfig:
    B: object  # "identity" | "modes:[i,j,...]" | nested tuple matrix


@dataclass(frozen=True)
class ProblemConfig:
    x0: object  # profile name, "basis:k", or tuple of coefficients
    xb: object
    b: float


@dataclass(frozen=True)
class RHSConfig:
    preset: str = "zero"
    selection: str = "midpoint"
    scale: float = 0.0


@dataclass(frozen=True)
class NonlocalConfig:
    c: tuple
    t: tuple


@dataclass(frozen=True)
class SweepConfig:
    a_values: tuple


@dataclass(frozen=True)
class NumericsConfig:
    grid_K: int = 64
    quad_nodes: int = 64
    tol: float = 1e-8
    max_iter: int = 50


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig
    control: ControlConfig
    problem: ProblemConfig
    rhs: RHSConfig
    sweep: SweepConfig
    numerics: NumericsConfig
    nonlocal_condition: NonlocalConfig = None  # type: ignore[assignment]
    seed: int = 0


def _tupleize(value):
    if isinstance(value, (list, tuple)):
        return tuple(_tupleize(v) for v in value)
    return value


class _Validator:
    def __init__(self):
        self.errors: list[str] = []

    def error(self, path: str, message: str):
        self.errors.append(f"{path}: {message}")

    def section(self, doc: dict, name: str, allowed: set, required: bool = True):
        raw = doc.get(name)
        if raw is None:
            if required:
                self.error(name, "missing section")
            return None
        if not isinstance(raw, dict):
            self.error(name, "must be a mapping")
            return None
        for key in raw:
            if key not in allowed:
                self.error(f"{name}.{key}", "unknown key")
        return raw

    def number(self, raw, path, *, positive=False, nonneg=False):
        if not isinstance(raw, (int, float)) or isinstance(raw, bool):
            self.error(path, f"expected a number, got {raw!r}")
            return None
        v = float(raw)
        if positive and v <= 0.0:
            self.error(path, f"must be positive, got {v}")
            return None
        if nonneg and v < 0.0:
            self.error(path, f"must be nonnegative, got {v}")
            return None
        return v

    def integer(self, raw, path, minimum=None):
        if not isinstance(raw, int) or isinstance(raw, bool):
            self.error(path, f"expected an integer, got {raw!r}")
            return None
        if minimum is not None and raw < minimum:
            self.error(path, f"must be >= {minimum}, got {raw}")
            return None
        return raw


def _parse_system(v: _Validator, doc: dict):
    raw = v.section(doc, "system", {"preset", "eigenvalues", "r", "N", "alpha"})
    if raw is None:
        return None
    alpha = v.number(raw.get("alpha"), "system.alpha", positive=True)
    if alpha is not None and not (1.0 < alpha <= 2.0):
        v.error("system.alpha", f"must lie in (1, 2], got {alpha}")
        alpha = None
    preset = raw.get("preset")
    eigenvalues = raw.get("eigenvalues")
    if (preset is None) == (eigenvalues is None):
        v.error("system", "exactly one of preset or eigenvalues is required")
        return None
    n = None
    r = None
    if preset is not None:
        if preset not in SYSTEM_PRESETS:
            v.error("system.preset", f"unknown preset {preset!r}")
            return None
        n = v.integer(raw.get("N"), "system.N", minimum=1)
        r = v.number(raw.get("r"), "system.r", positive=True)
        eig_t = None
    else:
        if not isinstance(eigenvalues, list) or not eigenvalues:
            v.error("system.eigenvalues", "must be a nonempty list")
            return None
        vals = [v.number(e, f"system.eigenvalues[{i}]") for i, e in enumerate(eigenvalues)]
        if any(e is None for e in vals):
            return None
        if any(b > a for a, b in zip(vals, vals[1:])):
            v.error("system.eigenvalues", "must be non-increasing")
            return None
        n = len(vals)
        eig_t = tuple(vals)
        if "N" in raw and raw["N"] != n:
            v.error("system.N", f"inconsistent with {n} explicit eigenvalues")
        if "r" in raw:
            v.error("system.r", "not allowed with explicit eigenvalues")
    if alpha is None or n is None:
        return None
    return SystemConfig(preset=preset, eigenvalues=eig_t, r=r, N=n, alpha=alpha)


_MODES_RE = re.compile(r"^modes:\[(\d+(?:,\s*\d+)*)\]$")


def _parse_control(v: _Validator, doc: dict, dim):
    raw = v.section(doc, "control", {"B"})
    if raw is None:
        return None
    spec = raw.get("B")
    if spec is None:
        v.error("control.B", "missing")
        return None
    if isinstance(spec, str):
        if spec == "identity":
            return ControlConfig(B="identity")
        m = _MODES_RE.match(spec.replace(" ", ""))
        if m:
            modes = [int(tok) for tok in m.group(1).split(",")]
            if dim is not None:
                bad = [k for k in modes if not 1 <= k <= dim]
                if bad:
                    v.error("control.B", f"modes {bad} outside 1..{dim}")
                    return None
            if len(set(modes)) != len(modes):
                v.error("control.B", "modes must be distinct")
                return None
            return ControlConfig(B=spec.replace(" ", ""))
        v.error("control.B", f"unrecognized spec {spec!r}")
        return None
    if isinstance(spec, list):
        try:
            mat = np.asarray(spec, dtype=float)
        except (TypeError, ValueError):
            v.error("control.B", "matrix entries must be numbers")
            return None
        if mat.ndim != 2:
            v.error("control.B", f"matrix must be 2-d, got shape {mat.shape}")
            return None
        if dim is not None and mat.shape[0] != dim:
            v.error("control.B", f"matrix has {mat.shape[0]} rows, system has {dim}")
            return None
        return ControlConfig(B=_tupleize(spec))
    v.error("control.B", f"unrecognized spec {spec!r}")
    return None


_BASIS_RE = re.compile(r"^basis:(\d+)$")


def _parse_state(v: _Validator, raw, path, dim):
    if isinstance(raw, str):
        if raw in STATE_PROFILES:
            return raw
        m = _BASIS_RE.match(raw)
        if m:
            k = int(m.group(1))
            if dim is not None and not 1 <= k <= dim:
                v.error(path, f"basis index {k} outside 1..{dim}")
                return None
            return raw
        v.error(path, f"unknown state spec {raw!r}")
        return None
    if isinstance(raw, list):
        vals = [v.number(e, f"{path}[{i}]") for i, e in enumerate(raw)]
        if any(e is None for e in vals):
            return None
        if dim is not None and len(vals) != dim:
            v.error(path, f"has {len(vals)} coefficients, system has {dim}")
            return None
        return tuple(vals)
    v.error(path, f"unknown state spec {raw!r}")
    return None


def _parse_problem(v: _Validator, doc: dict, dim):
    raw = v.section(doc, "problem", {"x0", "xb", "b"})
    if raw is None:
        return None
    b = v.number(raw.get("b"), "problem.b", positive=True)
    x0 = _parse_state(v, raw.get("x0"), "problem.x0", dim)
    xb = _parse_state(v, raw.get("xb"), "problem.xb", dim)
    if b is None or x0 is None or xb is None:
        return None
    return ProblemConfig(x0=x0, xb=xb, b=b)


def _parse_rhs(v: _Validator, doc: dict):
    raw = v.section(doc, "rhs", {"preset", "selection", "scale"})
    if raw is None:
        return None
    preset = raw.get("preset", "zero")
    if preset not in RHS_PRESETS:
        v.error("rhs.preset", f"unknown preset {preset!r}")
        return None
    selection = raw.get("selection", "midpoint")
    if selection not in SELECTIONS:
        v.error("rhs.selection", f"must be one of {SELECTIONS}, got {selection!r}")
        return None
    scale = v.number(raw.get("scale", 0.0), "rhs.scale", nonneg=True)
    if scale is None:
        return None
    return RHSConfig(preset=preset, selection=selection, scale=scale)


def _parse_nonlocal(v: _Validator, doc: dict, horizon):
    raw = v.section(doc, "nonlocal", {"c", "t"}, required=False)
    if raw is None:
        return None
    cs = raw.get("c")
    ts = raw.get("t")
    if not isinstance(cs, list) or not isinstance(ts, list) or len(cs) != len(ts) or not cs:
        v.error("nonlocal", "c and t must be equal-length nonempty lists")
        return None
    cv = [v.number(c, f"nonlocal.c[{i}]") for i, c in enumerate(cs)]
    tv = [v.number(t, f"nonlocal.t[{i}]", positive=True) for i, t in enumerate(ts)]
    if any(x is None for x in cv + tv):
        return None
    if any(b <= a for a, b in zip(tv, tv[1:])):
        v.error("nonlocal.t", "must be strictly increasing")
        return None
    if horizon is not None and any(t > horizon for t in tv):
        v.error("nonlocal.t", f"times must lie in (0, {horizon}]")
        return None
    if sum(abs(c) for c in cv) >= 1.0:
        v.error("nonlocal.c", "sum of |c| must be < 1")
        return None
    return NonlocalConfig(c=tuple(cv), t=tuple(tv))


def _parse_sweep(v: _Validator, doc: dict):
    raw = v.section(doc, "sweep", {"a_values"})
    if raw is None:
        return None
    vals = raw.get("a_values")
    if not isinstance(vals, list) or not vals:
        v.error("sweep.a_values", "must be a nonempty list")
        return None
    av = [v.number(a, f"sweep.a_values[{i}]", positive=True) for i, a in enumerate(vals)]
    if any(a is None for a in av):
        return None
    if any(b >= a for a, b in zip(av, av[1:])):
        v.error("sweep.a_values", "not decreasing")
        return None
    return SweepConfig(a_values=tuple(av))


def _parse_numerics(v: _Validator, doc: dict):
    raw = v.section(doc, "numerics", {"grid_K", "quad_nodes", "tol", "max_iter"})
    if raw is None:
        return None
    grid_k = v.integer(raw.get("grid_K", 64), "numerics.grid_K", minimum=16)
    nodes = v.integer(raw.get("quad_nodes", 64), "numerics.quad_nodes", minimum=16)
    if nodes is not None and nodes % 8 != 0:
        v.error("numerics.quad_nodes", f"must be a multiple of 8, got {nodes}")
        nodes = None
    tol = v.number(raw.get("tol", 1e-8), "numerics.tol", positive=True)
    max_iter = v.integer(raw.get("max_iter", 50), "numerics.max_iter", minimum=1)
    if None in (grid_k, nodes, tol, max_iter):
        return None
    return NumericsConfig(grid_K=grid_k, quad_nodes=nodes, tol=tol, max_iter=max_iter)


_TOP_LEVEL = {"system", "control", "problem", "rhs", "nonlocal", "sweep", "numerics", "seed"}


def parse_config(text: str) -> ExperimentConfig:
    """Parse and fully validate a configuration document.

    Raises :class:`~fracctrl.errors.ConfigError` carrying every validation
    problem found (``exc.errors``), each prefixed with its field path.
    """
    v = _Validator()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"document: invalid YAML ({exc})"]) from exc
    if not isinstance(doc, dict):
        raise ConfigError(["document: top level must be a mapping"])
    for key in doc:
        if key not in _TOP_LEVEL:
            v.error(key, "unknown key")

    system = _parse_system(v, doc)
    dim = system.N if system else None
    control = _parse_control(v, doc, dim)
    problem = _parse_problem(v, doc, dim)
    rhs = _parse_rhs(v, doc)
    horizon = problem.b if problem else None
    nl = _parse_nonlocal(v, doc, horizon)
    sweep = _parse_sweep(v, doc)
    numerics = _parse_numerics(v, doc)
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        v.error("seed", f"expected an integer, got {seed!r}")
        seed = None

    if v.errors:
        raise ConfigError(v.errors)
    return ExperimentConfig(
        system=system,
        control=control,
        problem=problem,
        rhs=rhs,
        sweep=sweep,
        numerics=numerics,
        nonlocal_condition=nl,
        seed=seed,
    )


def serialize_config(config: ExperimentConfig) -> str:
    """Canonical YAML for a parsed configuration (round-trips exactly)."""
    doc: dict = {}
    sys_d = {}
    if config.system.preset is not None:
        sys_d["preset"] = config.system.preset
        sys_d["r"] = config.system.r
        sys_d["N"] = config.system.N
    else:
        sys_d["eigenvalues"] = list(config.system.eigenvalues)
    sys_d["alpha"] = config.system.alpha
    doc["system"] = sys_d
    b_spec = config.control.B
    doc["control"] = {"B": b_spec if isinstance(b_spec, str) else [list(r) for r in b_spec]}
    doc["problem"] = {
        "x0": config.problem.x0 if isinstance(config.problem.x0, str) else list(config.problem.x0),
        "xb": config.problem.xb if isinstance(config.problem.xb, str) else list(config.problem.xb),
        "b": config.problem.b,
    }
    doc["rhs"] = {
        "preset": config.rhs.preset,
        "selection": config.rhs.selection,
        "scale": config.rhs.scale,
    }
    if config.nonlocal_condition is not None:
        doc["nonlocal"] = {
            "c": list(config.nonlocal_condition.c),
            "t": list(config.nonlocal_condition.t),
        }
    doc["sweep"] = {"a_values": list(config.sweep.a_values)}
    doc["numerics"] = {
        "grid_K": config.numerics.grid_K,
        "quad_nodes": config.numerics.quad_nodes,
        "tol": config.numerics.tol,
        "max_iter": config.numerics.max_iter,
    }
    doc["seed"] = config.seed
    return yaml.safe_dump(doc, sort_keys=False)


# -- materialization -------------------------------------------------------

def build_operator(config: ExperimentConfig) -> SpectralOperator:
    sys_c = config.system
    if sys_c.preset == "diffusion":
        return SpectralOperator.dirichlet_diffusion(sys_c.N, shift=sys_c.r)
    return SpectralOperator(eigenvalues=np.array(sys_c.eigenvalues, dtype=float))


def build_control(config: ExperimentConfig) -> ControlMap:
    spec = config.control.B
    dim = config.system.N
    if spec == "identity":
        return ControlMap.identity(dim)
    if isinstance(spec, str):
        m = _MODES_RE.match(spec)
        return ControlMap.modes(dim, [int(tok) for tok in m.group(1).split(",")])
    return ControlMap(matrix=np.asarray(spec, dtype=float))


def build_state(spec, dim: int) -> np.ndarray:
    if spec == "zero":
        return np.zeros(dim)
    if spec == "profile:inverse_squares":
        n = np.arange(1, dim + 1, dtype=float)
        return 1.0 / (n * n)
    if isinstance(spec, str):
        m = _BASIS_RE.match(spec)
        out = np.zeros(dim)
        out[int(m.group(1)) - 1] = 1.0
        return out
    return np.asarray(spec, dtype=float)


def build_rhs(config: ExperimentConfig) -> InclusionRHS:
    rc = config.rhs
    return RHS_PRESETS[rc.preset](config.system.N, rc.scale, rc.selection)


def build_nonlocal(config: ExperimentConfig):
    nc = config.nonlocal_condition
    if nc is None:
        return None
    return NonlocalCondition(coefficients=np.array(nc.c), times=np.array(nc.t))
