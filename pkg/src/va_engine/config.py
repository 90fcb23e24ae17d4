"""Run configuration read from INI-style text.

Sections and keys (all optional, defaults give the benchmark contract)::

    [contract]  T r sigma c g x0
    [penalty]   kind = exponential | cubic ; K ; knots = t:k, t:k, ...
    [mortality] law = gompertz-makeham | constant ; A B C mu0 eta hazard_factor
    [solver]    n eps rule scheme
    [mc]        n_paths n_steps seed antithetic
    [dp]        n_time n_space
    [output]    dir

Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .boundary import RULES, SCHEMES
from .contract import ContractSpec, ExponentialPenalty, PiecewiseCubicPenalty
from .mc_oracle import McConfig
from .mortality import ConstantForce, GompertzMakeham, MortalityModel

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "apply_override", "SCHEMA"]


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


SCHEMA = {
    "contract": {"T": float, "r": float, "sigma": float, "c": float, "g": float, "x0": float},
    "penalty": {"kind": str, "K": float, "knots": str},
    "mortality": {"law": str, "A": float, "B": float, "C": float, "mu0": float, "eta": float, "hazard_factor": float},
    "solver": {"n": int, "eps": float, "rule": str, "scheme": str},
    "mc": {"n_paths": int, "n_steps": int, "seed": int, "antithetic": _bool},
    "dp": {"n_time": int, "n_space": int},
    "output": {"dir": str},
}

DEFAULTS = {
    "contract": {"T": 10.0, "r": 0.05, "sigma": 0.20, "c": 0.025, "g": 0.0, "x0": 100.0},
    "penalty": {"kind": "exponential", "K": 0.014, "knots": ""},
    "mortality": {"law": "gompertz-makeham", "A": 0.0001, "B": 0.00035, "C": 1.075, "mu0": 0.0, "eta": 50.0,
                  "hazard_factor": 0.0},
    "solver": {"n": 200, "eps": 1e-2, "rule": "trapezoid", "scheme": "auto"},
    "mc": {"n_paths": 100_000, "n_steps": 200, "seed": 20_240_601, "antithetic": True},
    "dp": {"n_time": 400, "n_space": 801},
    "output": {"dir": "."},
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: {s: dict(v) for s, v in DEFAULTS.items()})
    source: Optional[str] = None

    def get(self, section: str, key: str):
        return self.values[section][key]

    def contract(self) -> ContractSpec:
        c = self.values["contract"]
        return ContractSpec(T=c["T"], r=c["r"], sigma=c["sigma"], c=c["c"], g=c["g"], x0=c["x0"],
                            penalty=self.penalty())

    def penalty(self):
        p = self.values["penalty"]
        kind = p["kind"].strip().lower()
        if kind == "exponential":
            return ExponentialPenalty(p["K"])
        if kind == "cubic":
            if not p["knots"].strip():
                raise ConfigError("[penalty] kind = cubic needs knots")
            try:
                knots = tuple(tuple(float(v) for v in item.split(":")) for item in p["knots"].split(","))
            except ValueError as exc:
                raise ConfigError(f"[penalty] knots: expected 't:k, t:k, ...' ({exc})") from None
            if any(len(k) != 2 for k in knots):
                raise ConfigError("[penalty] knots: each knot must be 't:k'")
            return PiecewiseCubicPenalty(knots)
        raise ConfigError(f"[penalty] kind: unknown penalty {p['kind']!r}")

    def mortality(self) -> MortalityModel:
        m = self.values["mortality"]
        law = m["law"].strip().lower()
        if law == "gompertz-makeham":
            law_obj = GompertzMakeham(m["A"], m["B"], m["C"])
        elif law == "constant":
            law_obj = ConstantForce(m["mu0"])
        else:
            raise ConfigError(f"[mortality] law: unknown law {m['law']!r}")
        return MortalityModel(law=law_obj, eta=m["eta"], hazard_factor=m["hazard_factor"])

    def mc(self) -> McConfig:
        m = self.values["mc"]
        return McConfig(n_paths=m["n_paths"], n_steps=m["n_steps"], seed=m["seed"], antithetic=m["antithetic"])

    def scheme(self, multi_solve: bool = False) -> str:
        s = self.values["solver"]["scheme"]
        if s == "auto":
            return "gauss-seidel" if multi_solve else "jacobi"
        return s

    def validate(self) -> "RunConfig":
        """Build every model object once so bad values surface as ConfigError."""
        try:
            self.contract()
            self.mortality()
            self.mc()
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        sv = self.values["solver"]
        if sv["rule"] not in RULES:
            raise ConfigError(f"[solver] rule: must be one of {RULES}")
        if sv["scheme"] not in SCHEMES + ("auto",):
            raise ConfigError(f"[solver] scheme: must be one of {SCHEMES + ('auto',)}")
        if sv["n"] < 2 or sv["eps"] <= 0:
            raise ConfigError("[solver] needs n >= 2 and eps > 0")
        if self.values["dp"]["n_time"] < 50 or self.values["dp"]["n_space"] < 200:
            raise ConfigError("[dp] needs n_time >= 50 and n_space >= 200")
        return self

    def with_value(self, section: str, key: str, value) -> "RunConfig":
        vals = {s: dict(v) for s, v in self.values.items()}
        vals[section][key] = value
        return replace(self, values=vals)


def _line_of(text: str, section: str, key: Optional[str] = None) -> int:
    current = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if key is None and current == section:
                return no
        elif key is not None and current == section and line.split("=")[0].split(":")[0].strip() == key:
            return no
    return 0


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    cfg = RunConfig(source=source)
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}:{_line_of(text, section)}: unknown section [{section}]")
        for key, raw in parser.items(section):
            where = f"{source}:{_line_of(text, section, key)}"
            if key not in SCHEMA[section]:
                raise ConfigError(f"{where}: unknown key '{key}' in [{section}]")
            try:
                cfg.values[section][key] = SCHEMA[section][key](raw.strip())
            except ValueError:
                raise ConfigError(f"{where}: bad value for {section}.{key}: {raw!r}") from None
    try:
        return cfg.validate()
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig().validate()
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(p.read_text(encoding="utf-8"), source=str(p))


def resolve_key(key: str):
    """Map ``section.key`` or a bare key unique across sections to ``(section, key)``."""
    if "." in key:
        section, name = key.split(".", 1)
        if section in SCHEMA and name in SCHEMA[section]:
            return section, name
        raise ConfigError(f"unknown config key {key!r}")
    hits = [(s, key) for s, keys in SCHEMA.items() if key in keys]
    if len(hits) != 1:
        raise ConfigError(f"config key {key!r} is unknown or ambiguous; use section.key")
    return hits[0]


def apply_override(cfg: RunConfig, key: str, value) -> RunConfig:
    section, name = resolve_key(key)
    try:
        value = SCHEMA[section][name](str(value)) if not isinstance(value, (int, float)) else SCHEMA[section][name](value)
    except ValueError:
        raise ConfigError(f"bad value for {section}.{name}: {value!r}") from None
    return cfg.with_value(section, name, value).validate()
