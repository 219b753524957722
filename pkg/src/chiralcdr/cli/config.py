"""INI-style suite configuration with forms written in the expression language."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Optional

from ..cdr import Patch, TwistData, field_to_form
from ..courant import ReductionData
from ..forms import DiffForm
from .lang import LoweringError, ParseError, evaluate


class ConfigError(ValueError):
    """Invalid configuration; reported before any check runs."""


DEFAULT_CONFIG = """\
[patch]
n = 3
m = 0

[forms]
H = (gamma[1]^2 + gamma[2]) * :c[1] c[2] c[3]:
F_A = (gamma[1] + 1) * :c[1] c[2]:
F_Ahat = 2 * :c[1] c[3]: + gamma[2] * :c[2] c[3]:
H3 = (gamma[1]^2 + gamma[2]) * :c[1] c[2] c[3]:

[run]
seed = 7
samples = 100
max_weight = 2
poly_degree = 1
witnesses = 20
order = 6
corrupt = false
"""

_FORM_DEGREES = {"H": 3, "F_A": 2, "F_Ahat": 2, "H3": 3}


@dataclass
class SuiteConfig:
    n: int
    m: int
    forms: Dict[str, DiffForm]
    seed: int = 7
    samples: int = 100
    max_weight: int = 2
    poly_degree: int = 1
    witnesses: int = 20
    order: int = 6
    corrupt: bool = False
    source: str = "<built-in>"
    raw_forms: Dict[str, str] = field(default_factory=dict)

    @cached_property
    def patch(self) -> Patch:
        return Patch.standard(self.n, self.m)

    def form(self, name: str) -> DiffForm:
        return self.forms.get(name) or DiffForm.zero(self.patch.coords)

    @property
    def twist(self) -> TwistData:
        return TwistData(self.form("H"))

    @property
    def reduction(self) -> ReductionData:
        return ReductionData(self.form("F_A"), self.form("H3"), self.form("F_Ahat"))


def _parse_form(patch: Patch, name: str, text: str) -> DiffForm:
    try:
        e = evaluate(text, patch.ctx)
    except (ParseError, LoweringError) as exc:
        raise ConfigError(f"[forms] {name}: {exc}") from None
    try:
        w = field_to_form(e)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[forms] {name} is not a differential form: {exc}") from None
    deg = _FORM_DEGREES[name]
    if not w.is_zero() and w.degrees() != {deg}:
        raise ConfigError(f"[forms] {name} must be a {deg}-form, got degrees {sorted(w.degrees())}")
    if name != "H3" and not w.is_closed():
        raise ConfigError(f"[forms] {name} is not closed: d{name} = {w.d()}")
    return w


def _int(sec: configparser.SectionProxy, key: str, default: int, low: int = 0) -> int:
    try:
        v = sec.getint(key, fallback=default)
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key} must be an integer") from None
    if v < low:
        raise ConfigError(f"[{sec.name}] {key} must be >= {low}")
    return v


_KEYS = {
    "patch": {"n", "m"},
    "run": {"seed", "samples", "max_weight", "poly_degree", "witnesses", "order", "corrupt"},
}


def parse_config(text: str, source: str = "<string>") -> SuiteConfig:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # form names are case sensitive
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    for sec in cp.sections():
        if sec not in ("patch", "forms", "run"):
            raise ConfigError(f"unknown section [{sec}]")
        extra = set(cp[sec]) - _KEYS.get(sec, set(cp[sec]))
        if extra:
            raise ConfigError(f"[{sec}] unknown key(s) {sorted(extra)}")
    patch_sec = cp["patch"] if cp.has_section("patch") else cp[cp.default_section]
    n = _int(patch_sec, "n", 3)
    m = _int(patch_sec, "m", 0)
    run = cp["run"] if cp.has_section("run") else cp[cp.default_section]
    try:
        corrupt = run.getboolean("corrupt", fallback=False)
    except ValueError:
        raise ConfigError("[run] corrupt must be a boolean") from None
    cfg = SuiteConfig(
        n=n,
        m=m,
        forms={},
        seed=_int(run, "seed", 7),
        samples=_int(run, "samples", 100, 1),
        max_weight=_int(run, "max_weight", 2),
        poly_degree=_int(run, "poly_degree", 1),
        witnesses=_int(run, "witnesses", 20),
        order=_int(run, "order", 6, 1),
        corrupt=corrupt,
        source=source,
    )
    if cp.has_section("forms"):
        for name, text_value in cp["forms"].items():
            if name not in _FORM_DEGREES:
                raise ConfigError(f"[forms] unknown form {name!r}; expected one of {sorted(_FORM_DEGREES)}")
            cfg.forms[name] = _parse_form(cfg.patch, name, text_value)
            cfg.raw_forms[name] = text_value
    if any(cfg.forms.get(k) for k in ("F_A", "F_Ahat", "H3")):
        try:
            cfg.reduction
        except ValueError as exc:
            raise ConfigError(f"[forms] {exc}") from None
    return cfg


def load_config(path: Optional[str]) -> SuiteConfig:
    if path is None:
        return parse_config(DEFAULT_CONFIG, "<built-in>")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, path)
