"""Sectioned key = value run configuration.

Example::

    [model]
    D = 1
    delta = 1
    p = exp(2)
    a = 1
    r = 1

    [wave]
    c = critical        # or a number, or e.g. 1.2*critical

    [grid]
    L = 100
    n = 4096

    [experiment]
    t_end = 200

Numbers are decimal or scientific; ``exp(x)`` is accepted as a convenience
for values like p = e^2. ``#`` and ``;`` start comments. Unknown sections
or keys are errors.
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field

from .errors import ConfigError
from .model import E2, ModelParams

_NUM = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_EXP = re.compile(r"^exp\((.+)\)$")
_CRIT = re.compile(r"^(?:(.+)\*)?critical$")

PERTURBATION_KINDS = ("bump", "shift", "packet", "large", "random")
EVOLVE_FORMS = ("lab", "perturbation", "antiweighted", "comparison")


def parse_number(text: str) -> float:
    s = text.strip()
    m = _EXP.match(s)
    if m:
        return math.exp(parse_number(m.group(1)))
    if not _NUM.match(s):
        raise ValueError(f"not a number: {text!r}")
    return float(s)


def _pos_int(text):
    v = int(text.strip())
    if v <= 0:
        raise ValueError("must be a positive integer")
    return v


def _bool(text):
    s = text.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(options):
    def parse(text):
        s = text.strip()
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s

    return parse


def _speed(text):
    s = text.strip().replace(" ", "")
    m = _CRIT.match(s)
    if m:
        return ("critical", 1.0 if m.group(1) is None else parse_number(m.group(1)))
    return ("absolute", parse_number(s))


def _num_list(text):
    return tuple(parse_number(t) for t in text.split(",") if t.strip())


SCHEMA = {
    "model": {
        "D": (parse_number, 1.0),
        "delta": (parse_number, 1.0),
        "p": (parse_number, E2),
        "a": (parse_number, 1.0),
        "r": (parse_number, 1.0),
    },
    "wave": {
        "c": (_speed, ("critical", 1.0)),
        "lambda": (parse_number, None),
        "scheme": (_choice(("central", "upwind2")), "central"),
    },
    "grid": {
        "L": (parse_number, 100.0),
        "n": (_pos_int, 4096),
        "dt": (parse_number, None),
        "snap": (_bool, True),
    },
    "experiment": {
        "t_end": (parse_number, 200.0),
        "perturbation": (_choice(PERTURBATION_KINDS), "bump"),
        "amplitude": (parse_number, 0.1),
        "center": (parse_number, 0.0),
        "width": (parse_number, 5.0),
        "record_dt": (parse_number, 0.25),
        "snapshot_dt": (parse_number, 1.0),
        "fit_lo": (parse_number, None),
        "fit_hi": (parse_number, None),
        "x0": (parse_number, None),
        "form": (_choice(EVOLVE_FORMS), "perturbation"),
        "k_bar": (parse_number, 1.0),
        "t_min": (parse_number, -2.0),
        "t_max": (parse_number, 10.0),
        "samples": (_pos_int, 241),
        "z0": (parse_number, None),
        "ode_dt": (parse_number, None),
        "blowup_factor": (parse_number, 10.0),
        "sweep_r": (_num_list, ()),
        "sweep_c": (_num_list, (1.0, 1.2, 1.5)),
        "stride": (_pos_int, 1),
    },
}


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    wave: dict
    grid: dict
    experiment: dict
    source: str = ""
    explicit: dict = field(default_factory=dict)

    def snapshot(self) -> dict:
        return {
            "model": asdict(self.model),
            "wave": dict(self.wave),
            "grid": dict(self.grid),
            "experiment": {k: list(v) if isinstance(v, tuple) else v
                           for k, v in self.experiment.items()},
        }


def parse_config_text(text: str, source: str = "<string>") -> RunConfig:
    values = {sec: {} for sec in SCHEMA}
    where = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = re.split(r"[#;]", raw, maxsplit=1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"{source}:{lineno}: malformed section header {raw.strip()!r}")
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"{source}:{lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {raw.strip()!r}")
        if section is None:
            raise ConfigError(f"{source}:{lineno}: key outside any section")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r} in [{section}]")
        if key in values[section]:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} in [{section}]")
        parser, _ = SCHEMA[section][key]
        try:
            values[section][key] = parser(val)
        except (ValueError, OverflowError) as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
        where[(section, key)] = lineno

    full = {}
    for sec, keys in SCHEMA.items():
        full[sec] = {k: values[sec].get(k, default) for k, (_, default) in keys.items()}
    try:
        mp = ModelParams(**full["model"])
    except ConfigError as exc:
        bad = next((k for k in full["model"] if k in str(exc).split()[0:1]), None)
        line = where.get(("model", bad))
        prefix = f"{source}:{line}: " if line else f"{source}: "
        raise ConfigError(prefix + str(exc)) from None
    _validate(full, where, source)
    _check_speed(mp, full["wave"], where, source)
    explicit = {sec: sorted(values[sec]) for sec in values}
    return RunConfig(mp, full["wave"], full["grid"], full["experiment"], source, explicit)


def _fail(where, source, sec, key, msg):
    line = where.get((sec, key))
    prefix = f"{source}:{line}: " if line else f"{source}: "
    raise ConfigError(f"{prefix}{key}: {msg}")


def _validate(full, where, source):
    g, e, w = full["grid"], full["experiment"], full["wave"]
    if not g["L"] > 0:
        _fail(where, source, "grid", "L", "must be positive")
    if g["n"] < 3:
        _fail(where, source, "grid", "n", "must be at least 3")
    if g["dt"] is not None and not g["dt"] > 0:
        _fail(where, source, "grid", "dt", "must be positive")
    for key in ("t_end", "record_dt", "snapshot_dt", "width", "blowup_factor"):
        if not e[key] > 0:
            _fail(where, source, "experiment", key, "must be positive")
    if e["t_max"] <= e["t_min"]:
        _fail(where, source, "experiment", "t_max", "must exceed t_min")
    if w["c"][1] <= 0:
        _fail(where, source, "wave", "c", "must be positive")


def _check_speed(mp, wave, where, source):
    kind, value = wave["c"]
    if kind == "critical" and value < 1.0 - 1e-12:
        _fail(where, source, "wave", "c", "c below critical speed")
    if kind != "absolute" or mp.ratio() <= 1.0:
        return
    from .charspec import min_speed

    c_star = min_speed(mp)[0]
    if value < c_star * (1 - 1e-9):
        _fail(where, source, "wave", "c", f"c below critical speed (c* = {c_star:.17g})")


def parse_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, str(path))
