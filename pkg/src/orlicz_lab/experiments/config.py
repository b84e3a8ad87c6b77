"""Flat ``key = value`` scenario configuration.

Blank lines and ``#`` comments are ignored. Values are parsed as numbers
where possible; comma-separated values become lists. Unknown keys are a
configuration error, so typos do not silently fall back to defaults.
"""

from dataclasses import dataclass, field

__all__ = ["ConfigError", "ScenarioConfig", "load_config", "parse_config", "DEFAULTS"]


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "scenario": "",
    "geometry.kind": "ball",
    "geometry.n": 3,
    "geometry.radius": 1.0,
    "geometry.cells": 64,
    "refine.levels": 3,
    "operator.kind": "uniform",
    "operator.alpha": 1.0,
    "sigma": None,              # default: Sobolev gain of the geometry
    "young.p": None,            # must equal sigma' when given
    "young.q": 2.0,
    "data.kind": "family",
    "solver.rtol": 1e-10,
    "solver.method": "cg",
    "spike.L": [2, 4, 8, 16, 32, 64, 128, 220],
    "spike.per_efold": 60,
    "counterexample.k_min": 2,
    "counterexample.k_max": 16,
    "counterexample.q_low": 0.0,
    "counterexample.q_high": 2.0,
    "counterexample.solver_k_max": 6,
    "counterexample.per_octave": 48,
    "expint.gamma_factor": 2.0,
    "degiorgi.grid": 10,
    "degiorgi.K": 100000,
    "degiorgi.samples": 1000,
    "degiorgi.seed": 12345,
    "scaling.N": [10, 1000],
    "scaling.naive_exponent": 2.0,
    "output.dir": "out",
}


def _parse_value(text):
    text = text.strip()
    if "," in text:
        return [_parse_value(t) for t in text.split(",") if t.strip()]
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def parse_config(text, source="<string>"):
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("%s:%d: expected key = value" % (source, lineno))
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError("%s:%d: unknown key %r" % (source, lineno, key))
        out[key] = _parse_value(val)
    return out


@dataclass
class ScenarioConfig:
    values: dict = field(default_factory=dict)
    source: str = "<defaults>"

    def __getitem__(self, key):
        if key not in DEFAULTS:
            raise KeyError(key)
        return self.values.get(key, DEFAULTS[key])

    def get_list(self, key):
        v = self[key]
        return list(v) if isinstance(v, (list, tuple)) else [v]

    def with_overrides(self, **kw):
        vals = dict(self.values)
        for k, v in kw.items():
            vals[k.replace("__", ".")] = v
        cfg = ScenarioConfig(vals, self.source)
        cfg.validate()
        return cfg

    @property
    def n(self):
        return int(self["geometry.n"])

    @property
    def alpha(self):
        return float(self["operator.alpha"]) if self["operator.kind"] == "a2" else 0.0

    @property
    def sigma(self):
        s = self["sigma"]
        if s is not None:
            return float(s)
        nn = self.n + self.alpha
        if nn <= 2:
            raise ConfigError("sigma needs n + alpha > 2 or an explicit value")
        return nn / (nn - 2)

    @property
    def sigma_conj(self):
        s = self.sigma
        return s / (s - 1)

    @property
    def young(self):
        return (self.sigma_conj, float(self["young.q"]))

    def validate(self):
        kind = self["geometry.kind"]
        if kind not in ("ball", "interval", "box"):
            raise ConfigError("geometry.kind must be ball, interval or box")
        if kind == "ball" and self.n < 3:
            raise ConfigError("ball scenarios need geometry.n >= 3")
        if int(self["geometry.cells"]) < 16:
            raise ConfigError("geometry.cells must be >= 16")
        if int(self["refine.levels"]) < 1:
            raise ConfigError("refine.levels must be >= 1")
        if self["operator.kind"] not in ("uniform", "a2"):
            raise ConfigError("operator.kind must be uniform or a2")
        if self["operator.kind"] == "a2" and not 0 <= self.alpha < self.n:
            raise ConfigError("a2 weight needs 0 <= alpha < n")
        if not self.sigma > 1:
            raise ConfigError("sigma must exceed 1")
        p = self["young.p"]
        if p is not None and abs(float(p) - self.sigma_conj) > 1e-9:
            raise ConfigError("young.p=%g must equal sigma'=%g" % (float(p), self.sigma_conj))
        if float(self["young.q"]) < 0:
            raise ConfigError("young.q must be >= 0")
        if self["solver.method"] not in ("cg", "direct"):
            raise ConfigError("solver.method must be cg or direct")
        rtol = float(self["solver.rtol"])
        if not 0 < rtol <= 1e-4:
            raise ConfigError("solver.rtol must lie in (0, 1e-4]")
        return self


def load_config(path=None):
    """Read and validate ``path``; ``None`` gives the defaults."""
    if path is None:
        return ScenarioConfig().validate()
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc.strerror)) from exc
    return ScenarioConfig(parse_config(text, str(path)), str(path)).validate()
