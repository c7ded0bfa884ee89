"""Run configuration: TOML files merged with command-line overrides.

Layout::

    [structure]
    builtin = "heisenberg-gauged(tau=x1, theta=0)"   # or the explicit form:
    coordinates = ["x", "y", "u"]                     # optional renaming of x1, x2, x3
    mu = ["1", "I", "0"]
    lambda = ["-y", "x", "1"]
    [structure.defs]
    z = "x + I*y"

    [gauge]
    tau = "x1/3"
    theta = "0"

    [parameters]            # either P or (a, s); or psi for the converse construction
    a = "1"
    s = "0"
    x = "0"
    H = "0"

    [samples]
    count = 5
    seed = 7
    box = 1.0
    points = [[0.1, 0.2, 0.3, 0.4]]

    [tolerance]
    check = 1e-8
    invariance = 1e-9

    [output]
    format = "json"
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .cr import VARIABLES, CoordinateCRStructure, GaugedCoordinateCR, builtin_structure

__all__ = ["ConfigError", "RunConfig", "load_config", "structure_from_block"]

DEFAULT_TOLERANCES = {"check": 1e-8, "invariance": 1e-9, "curvature": 1e-9}
PARAMETER_KEYS = ("P", "a", "s", "x", "H", "psi")


class ConfigError(ValueError):
    """Invalid configuration (exit code 2 on the command line)."""


@dataclass
class RunConfig:
    structure: object = "heisenberg"
    gauge: dict = None
    parameters: dict = field(default_factory=dict)
    count: int = 5
    seed: int = 0
    box: float = 1.0
    points: list = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    format: str = "text"
    out: str = None

    def tolerance(self, command: str) -> float:
        return float(self.tolerances.get(command, DEFAULT_TOLERANCES.get(command, 1e-9)))

    def build_structure(self) -> CoordinateCRStructure:
        s = self.structure
        if isinstance(s, dict):
            return structure_from_block(s)
        try:
            return builtin_structure(s)
        except KeyError as e:
            raise ConfigError(str(e.args[0])) from None
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad structure {s!r}: {e}") from None


def structure_from_block(block: dict) -> CoordinateCRStructure:
    if "builtin" in block:
        base = RunConfig(structure=block["builtin"]).build_structure()
    else:
        try:
            mu, lam = block["mu"], block["lambda"]
        except KeyError as e:
            raise ConfigError(f"structure block needs 'mu' and 'lambda' (missing {e.args[0]!r})") from None
        defs = dict(block.get("defs", {}))
        names = block.get("coordinates", ["x1", "x2", "x3"])
        if len(names) != 3:
            raise ConfigError("structure.coordinates must list three names")
        for name, var in zip(names, ("x1", "x2", "x3")):
            if name != var:
                if name in VARIABLES:
                    raise ConfigError(f"coordinate name {name!r} clashes with a builtin variable")
                defs[name] = var
        real = tuple(names) + ("x1", "x2", "x3", "u")
        from .kernel.parser import AtomTable

        try:
            base = CoordinateCRStructure(
                block.get("name", "custom"), tuple(mu), tuple(lam), defs, AtomTable(real=real)
            )
        except ValueError as e:
            raise ConfigError(f"structure: {e}") from None
    gauge = block.get("gauge")
    if gauge:
        base = GaugedCoordinateCR(base, str(gauge.get("tau", "0")), str(gauge.get("theta", "0")))
    return base


def _as_text(v):
    if isinstance(v, bool):
        raise ConfigError("boolean is not an expression")
    return str(v)


def load_config(path: str) -> RunConfig:
    """Read a TOML run configuration."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path!r}: {e.strerror}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"config {path!r}: {e}") from None
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> RunConfig:
    known = {"structure", "gauge", "parameters", "samples", "tolerance", "output"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    cfg = RunConfig()
    st = raw.get("structure")
    if isinstance(st, str):
        cfg.structure = st
    elif isinstance(st, dict):
        cfg.structure = st.get("builtin") if set(st) == {"builtin"} else dict(st)
    elif st is not None:
        raise ConfigError("structure must be a name or a table")
    if "gauge" in raw:
        g = raw["gauge"]
        cfg.gauge = {"tau": _as_text(g.get("tau", "0")), "theta": _as_text(g.get("theta", "0"))}
    params = raw.get("parameters", {})
    bad = set(params) - set(PARAMETER_KEYS)
    if bad:
        raise ConfigError(f"unknown parameter(s): {', '.join(sorted(bad))}")
    cfg.parameters = {k: _as_text(v) for k, v in params.items()}
    smp = raw.get("samples", {})
    cfg.count = int(smp.get("count", cfg.count))
    cfg.seed = int(smp.get("seed", cfg.seed))
    cfg.box = float(smp.get("box", cfg.box))
    if "points" in smp:
        pts = [tuple(float(v) for v in p) for p in smp["points"]]
        if any(len(p) != 4 for p in pts):
            raise ConfigError("sample points need four entries (x1, x2, x3, r)")
        cfg.points = pts
    cfg.tolerances.update({k: float(v) for k, v in raw.get("tolerance", {}).items()})
    out = raw.get("output", {})
    cfg.format = out.get("format", cfg.format)
    cfg.out = out.get("file", cfg.out)
    return cfg
