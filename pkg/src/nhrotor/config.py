"""Experiment configuration: INI-style sections, schema validation, presets.

Every key has a type and either a default or is required; unknown sections
or keys are rejected.  The resolved configuration is hashed (SHA-256 of its
canonical JSON) and that hash is stamped on every output file.
"""
from __future__ import annotations

import configparser
import copy
import hashlib
import json
from dataclasses import dataclass

REQUIRED = object()


class ConfigError(ValueError):
    pass


def _bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s):
    if s is None or str(s).strip().lower() in ("none", "off", ""):
        return None
    return float(s)


def _int_list(s):
    if isinstance(s, (list, tuple)):
        return [int(x) for x in s]
    return [int(x) for x in str(s).replace(",", " ").split()]


def _float_pair(s):
    vals = [float(x) for x in (s if isinstance(s, (list, tuple)) else str(s).replace(",", " ").split())]
    if len(vals) != 2:
        raise ValueError(f"expected two numbers, got {s!r}")
    return vals


def _choice(*options):
    def parse(s):
        v = str(s).strip()
        if v not in options:
            raise ValueError(f"{v!r} not one of {', '.join(options)}")
        return v
    return parse


SCHEMA = {
    "params": {
        "K1": (float, REQUIRED),
        "K2": (float, REQUIRED),
        "lambda1": (float, REQUIRED),
        "lambda2": (float, REQUIRED),
        "eps": (float, REQUIRED),
        "hbar": (float, REQUIRED),
    },
    "grid": {
        "M": (int, REQUIRED),
    },
    "run": {
        "steps": (int, REQUIRED),
        "initial_state": (_choice("ground_product", "entangled_gaussian"), "ground_product"),
        "sigma": (float, 12000.0),
        "alias_tol": (_opt_float, 1e-8),
        "band_fraction": (float, 0.05),
    },
    "observers": {
        "scalars_every": (int, 1),
        "entropy_every": (int, 1),
        "distributions_every": (int, 10),
        "spectrum_steps": (_int_list, []),
        "support_tol": (float, 1e-20),
    },
    "classical": {
        "enabled": (_bool, False),
        "n_trajectories": (int, 100000),
        "seed": (int, 20240101),
    },
    "spectral": {
        "enabled": (_bool, False),
        "mode": (_choice("full", "dominant"), "full"),
        "cap": (int, 4096),
        "fidelity_every": (int, 1),
    },
    "fits": {
        "diffusion_window": (_float_pair, [5.0, 30.0]),
        "tail_fraction": (float, 0.2),
        "floor": (float, 1e-12),
    },
}


@dataclass
class ExperimentConfig:
    """Resolved configuration: ``values[section][key]`` with every key present."""

    values: dict
    name: str = "custom"

    def __getitem__(self, section):
        return self.values[section]

    def canonical(self) -> dict:
        return copy.deepcopy(self.values)

    @property
    def hash(self) -> str:
        blob = json.dumps(self.values, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def override(self, assignments) -> "ExperimentConfig":
        """Apply ``section.key=value`` strings (or a mapping of them)."""
        raw = {s: dict(v) for s, v in self.values.items()}
        items = assignments.items() if isinstance(assignments, dict) else (_split_assignment(a) for a in assignments)
        for dotted, value in items:
            if "." not in dotted:
                raise ConfigError(f"override {dotted!r} must be section.key")
            section, key = dotted.split(".", 1)
            if section not in SCHEMA or key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {dotted!r}")
            raw[section][key] = value
        return validate(raw, self.name)

    def to_ini(self) -> str:
        lines = []
        for section in SCHEMA:
            lines.append(f"[{section}]")
            for key in SCHEMA[section]:
                v = self.values[section][key]
                if isinstance(v, list):
                    v = ", ".join(repr(x) for x in v)
                elif v is None:
                    v = "none"
                else:
                    v = repr(v) if isinstance(v, float) else str(v)
                lines.append(f"{key} = {v}")
            lines.append("")
        return "\n".join(lines)


def _split_assignment(text):
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not key=value")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def validate(raw: dict, name: str = "custom") -> ExperimentConfig:
    if not raw or not any(raw.values()):
        raise ConfigError("empty configuration")
    unknown = set(raw) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    values = {}
    for section, fields in SCHEMA.items():
        given = dict(raw.get(section, {}))
        bad = set(given) - set(fields)
        if bad:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(bad))}")
        out = {}
        for key, (parse, default) in fields.items():
            if key in given:
                try:
                    out[key] = parse(given[key])
                except (TypeError, ValueError) as err:
                    raise ConfigError(f"[{section}] {key}: {err}") from None
            elif default is REQUIRED:
                raise ConfigError(f"missing required key [{section}] {key}")
            else:
                out[key] = copy.copy(default)
        values[section] = out
    _check_ranges(values)
    return ExperimentConfig(values, name)


def _check_ranges(v):
    p = v["params"]
    if p["hbar"] <= 0:
        raise ConfigError("hbar must be positive")
    if p["lambda1"] < 0 or p["lambda2"] < 0:
        raise ConfigError("lambda1 and lambda2 must be non-negative")
    M = v["grid"]["M"]
    if M < 2 or (2 * M) & (2 * M - 1):
        raise ConfigError(f"grid M={M}: need M >= 2 and 2M a power of two")
    if v["run"]["steps"] < 1:
        raise ConfigError("run.steps must be >= 1")
    if v["run"]["sigma"] <= 0:
        raise ConfigError("run.sigma must be positive")
    if v["classical"]["enabled"] and (p["lambda1"] or p["lambda2"]):
        raise ConfigError("classical ensemble requires lambda1 = lambda2 = 0")
    if v["classical"]["n_trajectories"] < 1:
        raise ConfigError("classical.n_trajectories must be >= 1")
    for key in ("scalars_every", "entropy_every", "distributions_every"):
        if v["observers"][key] < 0:
            raise ConfigError(f"observers.{key} must be >= 0")


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as err:
        raise ConfigError(f"cannot parse {path}: {err}") from None
    raw = {s: dict(parser.items(s)) for s in parser.sections()}
    return validate(raw, name=str(path))


REFERENCE_PARAMS = {"K1": 5.0, "K2": 5.0, "eps": 0.3, "hbar": 0.06}


def _preset_raw(lam, M, steps, **sections):
    raw = {
        "params": dict(REFERENCE_PARAMS, lambda1=lam, lambda2=lam),
        "grid": {"M": M},
        "run": {"steps": steps},
    }
    for section, entries in sections.items():
        raw.setdefault(section, {}).update(entries)
    return raw


def _fig1a(lam):
    if lam == 0:
        return _preset_raw(0.0, 2048, 30, classical={"enabled": True},
                           observers={"entropy_every": 10})
    if lam >= 1:
        return _preset_raw(lam, 1024, 100, observers={"entropy_every": 10})
    return _preset_raw(lam, 2048, 100, observers={"entropy_every": 10})


PRESETS = {
    "fig1a_lambda0": lambda: _fig1a(0.0),
    "fig1a_lambda0.05": lambda: _fig1a(0.05),
    "fig1a_lambda0.07": lambda: _fig1a(0.07),
    "fig1a_lambda0.1": lambda: _fig1a(0.1),
    "fig1a_lambda2.0": lambda: _fig1a(2.0),
    "fig1b_profiles": lambda: _preset_raw(
        0.1, 2048, 100, observers={"entropy_every": 0, "distributions_every": 100}),
    "fig2_ground": lambda: _preset_raw(
        0.1, 2048, 30, observers={"entropy_every": 5, "spectrum_steps": [30]}),
    "fig2_maxent": lambda: _preset_raw(
        0.1, 2048, 50, run={"initial_state": "entangled_gaussian", "sigma": 12000.0},
        observers={"entropy_every": 5, "spectrum_steps": [50]}),
    "fig3_spectral": lambda: _preset_raw(
        2.0, 16, 100, run={"alias_tol": None},
        spectral={"enabled": True, "mode": "full"}, observers={"spectrum_steps": [100]}),
}
ALIASES = {"fig2e_maxent": "fig2_maxent"}


def preset(name: str, overrides=()) -> ExperimentConfig:
    key = ALIASES.get(name, name)
    if key not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    cfg = validate(PRESETS[key](), name=key)
    return cfg.override(overrides) if overrides else cfg
