"""INI-style run configuration: plain [section] blocks of key=value pairs.

Unknown sections or keys are rejected, naming the offending key and line.
Numbers accept scientific notation.  A parsed configuration can be rendered
back to text (``to_ini_text``) and re-parsed to an equivalent object, which
is how runs embed their resolved configuration in every output file.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field

from .model import PowerModel, QosConstraints, StageConstants, WirelessScenario, Workload
from .solver import SolverOptions
from . import presets


class ConfigError(ValueError):
    def __init__(self, message, key=None, line=None):
        loc = f" (line {line})" if line else ""
        super().__init__(f"{message}{loc}")
        self.key = key
        self.line = line


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_list(text):
    return tuple(int(tok) for tok in re.split(r"[,\s]+", text.strip()) if tok)


def _q_rule(text):
    t = text.strip().lower()
    return t if t == "full" else int(t)


# section -> key -> parser
_SCHEMA = {
    "scenario": {"preset": str, "name": str, "r_hat": float, "e_setup": float,
                 "k0": float, "alpha": float},
    "workload": {"m0": float, "dirty_rate": float},
    "qos": {"delta_tm": float, "delta_dt": float, "beta": float, "theta": int},
    "stages": {"t_pm": float, "t_re": float, "t_cm": float, "t_at": float},
    "partition": {"i_max": int, "q": int, "round_search": _bool, "q_rule": _q_rule},
    "solver": {"max_iterations": int, "tolerance": float, "step_init": float,
               "round_cap": int, "floor_frac": float},
    "tracker": {"a_max": float, "horizon": int, "settle_tolerance": float, "profile": str},
    "oracle": {"grid_points": int},
    "compare": {"xen_rounds": _int_list, "xen_r_max": float, "cap": float},
    "sweep": {"i_max_xen": int},
    "run": {"seed": int, "jobs": int, "out": str},
}


@dataclass
class RunConfig:
    """Typed view over the parsed sections; missing keys stay absent."""

    values: dict = field(default_factory=dict)  # {section: {key: parsed value}}

    def get(self, section, key, default=None):
        return self.values.get(section, {}).get(key, default)

    def set(self, section, key, value):
        if value is not None:
            self.values.setdefault(section, {})[key] = value

    def require(self, section, key):
        value = self.get(section, key)
        if value is None:
            raise ConfigError(f"{section}.{key} required", key=key)
        return value

    # -- builders ------------------------------------------------------------

    def scenario(self):
        preset = self.get("scenario", "preset")
        base = presets.scenario(preset) if preset else None
        keys = ("name", "r_hat", "e_setup", "k0", "alpha")
        if base is None and not all(self.get("scenario", k) is not None
                                    for k in ("r_hat", "e_setup", "k0", "alpha")):
            raise ConfigError("scenario.preset or explicit scenario constants required",
                              key="preset")
        name = self.get("scenario", "name", base.name if base else "custom")
        r_hat = self.get("scenario", "r_hat", base.r_hat if base else None)
        e_setup = self.get("scenario", "e_setup", base.e_setup if base else None)
        k0 = self.get("scenario", "k0", base.power.k0 if base else None)
        alpha = self.get("scenario", "alpha", base.power.alpha if base else None)
        return WirelessScenario(name, r_hat, e_setup, PowerModel(k0, alpha))

    def workload(self):
        preset = self.get("scenario", "preset")
        m0 = self.get("workload", "m0")
        if m0 is None:
            raise ConfigError("workload.m0 required", key="m0")
        dirty = self.get("workload", "dirty_rate")
        if dirty is None:
            if preset is None:
                raise ConfigError("workload.dirty_rate required", key="dirty_rate")
            dirty = presets.BASE_DIRTY_RATE[preset.lower()]
        return Workload(m0=m0, dirty_rate=dirty)

    def qos(self):
        preset = self.get("scenario", "preset")
        base = presets.qos_defaults(preset) if preset else None
        delta_tm = self.get("qos", "delta_tm", base.delta_tm if base else None)
        delta_dt = self.get("qos", "delta_dt", base.delta_dt if base else None)
        beta = self.get("qos", "beta", base.beta if base else None)
        theta = self.get("qos", "theta", base.theta if base else 1)
        for key, val in (("delta_tm", delta_tm), ("delta_dt", delta_dt), ("beta", beta)):
            if val is None:
                raise ConfigError(f"qos.{key} required", key=key)
        return QosConstraints(delta_tm=delta_tm, delta_dt=delta_dt, beta=beta, theta=theta)

    def stages(self):
        return StageConstants(
            t_pm=self.get("stages", "t_pm", 0.0),
            t_re=self.get("stages", "t_re", 0.0),
            t_cm=self.get("stages", "t_cm", 0.0),
            t_at=self.get("stages", "t_at", 0.0),
        )

    def solver_options(self):
        defaults = SolverOptions()
        return SolverOptions(
            max_iterations=self.get("solver", "max_iterations", defaults.max_iterations),
            tolerance=self.get("solver", "tolerance", defaults.tolerance),
            step_init=self.get("solver", "step_init", defaults.step_init),
            round_cap=self.get("solver", "round_cap", defaults.round_cap),
            floor_frac=self.get("solver", "floor_frac", defaults.floor_frac),
        )

    # -- rendering -------------------------------------------------------------

    def to_ini_text(self):
        lines = []
        for section in _SCHEMA:
            block = self.values.get(section)
            if not block:
                continue
            lines.append(f"[{section}]")
            for key in _SCHEMA[section]:
                if key in block:
                    value = block[key]
                    if isinstance(value, tuple):
                        value = ",".join(str(v) for v in value)
                    elif isinstance(value, bool):
                        value = "true" if value else "false"
                    elif isinstance(value, float):
                        value = repr(value)
                    lines.append(f"{key} = {value}")
            lines.append("")
        return "\n".join(lines)


def _line_of(text, section, key):
    in_section = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("["):
            in_section = stripped == f"[{section}]"
        elif in_section and re.match(rf"^{re.escape(key)}\s*[=:]", stripped):
            return lineno
    return None


def parse_config_text(text):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    config = RunConfig()
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", key=section,
                              line=_line_of(text, section, "") or None)
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}", key=key,
                                  line=_line_of(text, section, key))
            try:
                config.set(section, key, _SCHEMA[section][key](raw))
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {exc}", key=key,
                                  line=_line_of(text, section, key)) from None
    return config


def parse_config_file(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())
