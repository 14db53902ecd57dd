"""Run configuration: TOML documents with sections [model] [window] [limits] [run].

Every key is checked against a schema.  Errors name the offending key path
in a single line, e.g. ``model.beta: expected a number, got 'x'``.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import tomli
import tomli_w

from .clan import Limits
from .continuous import Grain, LengthLaw, NonIntegrable, area_model, lossnet_model, strauss_model
from .discrete import ContourModel, RandomClusterModel, ToyModel
from .model import Ball, Box, LabelSet, ModelError, ModelSpec


class ConfigError(ValueError):
    """A configuration document that cannot be turned into a RunSpec."""


REQUIRED = object()


def _num(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    return float(v)


def _int(v, path):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    return v


def _bool(v, path):
    if not isinstance(v, bool):
        raise ConfigError(f"{path}: expected true or false, got {v!r}")
    return v


def _str(v, path):
    if not isinstance(v, str):
        raise ConfigError(f"{path}: expected a string, got {v!r}")
    return v


def _numlist(v, path):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{path}: expected a nonempty list of numbers, got {v!r}")
    return [_num(x, f"{path}[{i}]") for i, x in enumerate(v)]


def _weights(v, path):
    if not isinstance(v, dict) or not v:
        raise ConfigError(f"{path}: expected a table of label = weight")
    return {k: _num(x, f"{path}.{k}") for k, x in v.items()}


def _sizes(v, path):
    if not isinstance(v, dict):
        raise ConfigError(f"{path}: expected a table of label = size")
    return {k: _num(x, f"{path}.{k}") for k, x in v.items()}


def _pairs(v, path):
    if not isinstance(v, list):
        raise ConfigError(f"{path}: expected a list of [label, label] pairs")
    out = []
    for i, p in enumerate(v):
        if not (isinstance(p, list) and len(p) == 2 and all(isinstance(x, str) for x in p)):
            raise ConfigError(f"{path}[{i}]: expected a pair of labels, got {p!r}")
        out.append(list(p))
    return out


def _length(v, path):
    if not isinstance(v, dict):
        raise ConfigError(f"{path}: expected a table")
    kind = _str(v.get("kind", "fixed"), f"{path}.kind")
    keys = {"fixed": ("L",), "uniform": ("lmax",), "truncexp": ("mean", "lmax")}
    if kind not in keys:
        raise ConfigError(f"{path}.kind: unknown length law {kind!r}")
    out = {"kind": kind}
    for k in v:
        if k != "kind" and k not in keys[kind]:
            raise ConfigError(f"{path}.{k}: unknown key for length law {kind!r}")
    for k in keys[kind]:
        if k not in v:
            raise ConfigError(f"{path}.{k}: missing")
        out[k] = _num(v[k], f"{path}.{k}")
    return out


MODEL_KEYS = {
    "toy": {"weights": (_weights, REQUIRED), "pairs": (_pairs, []),
            "sizes": (_sizes, {}), "free": (_bool, False)},
    "contour": {"beta": (_num, REQUIRED), "cutoff": (_int, 10)},
    "random_cluster": {"p": (_num, REQUIRED), "q": (_num, REQUIRED), "grid": (_numlist, [2, 2])},
    "area": {"kappa": (_num, REQUIRED), "phi": (_num, REQUIRED), "shape": (_str, "disc"),
             "r": (_num, REQUIRED), "dim": (_int, 2)},
    "strauss": {"beta1": (_num, REQUIRED), "beta2": (_num, REQUIRED), "r": (_num, REQUIRED),
                "base_rate": (_num, 1.0), "dim": (_int, 2)},
    "lossnet": {"kappa": (_num, REQUIRED), "C": (_int, 1), "length": (_length, REQUIRED)},
}

LIMIT_KEYS = {"max_depth": (_num, 1e3), "max_size": (_int, 10**6), "size_cutoff": (_num, None)}

RUN_KEYS = {"seed": (_int, 0), "n": (_int, 1000), "jobs": (_int, 1), "force": (_bool, False),
            "biased": (_bool, False), "cap": (_int, 6), "level": (_num, 0.01),
            "oracle": (_str, None), "domain_margin": (_num, 0.0)}


def _section(doc: dict, name: str, schema: dict) -> dict:
    raw = doc.get(name, {})
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected a table")
    for k in raw:
        if k not in schema:
            raise ConfigError(f"{name}.{k}: unknown key")
    out = {}
    for k, (conv, default) in schema.items():
        if k in raw:
            out[k] = conv(raw[k], f"{name}.{k}")
        elif default is REQUIRED:
            raise ConfigError(f"{name}.{k}: missing")
        elif default is not None:
            out[k] = copy.deepcopy(default)
    return out


@dataclass
class RunSpec:
    model: dict
    window: dict = field(default_factory=dict)
    limits: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)

    def build_model(self) -> ModelSpec:
        return build_model(self.model)

    def build_window(self):
        return build_window(self.window)

    def build_limits(self) -> Limits:
        return Limits(self.limits["max_depth"], self.limits["max_size"],
                      self.limits.get("size_cutoff"))

    def build_domain(self):
        """Window grown by ``run.domain_margin`` (finite-volume oracle region)."""
        w = self.build_window()
        margin = self.run.get("domain_margin", 0.0)
        if w is None or margin == 0:
            return w
        if isinstance(w, Ball):
            return Ball(w.center, w.radius + margin)
        return w.grow(margin)

    def to_dict(self) -> dict:
        out = {"model": self.model, "window": self.window, "limits": self.limits, "run": self.run}
        return copy.deepcopy(out)


def build_model(md: dict) -> ModelSpec:
    k = md["kind"]
    if k == "toy":
        return ToyModel(md["weights"], [tuple(p) for p in md.get("pairs", [])],
                        md.get("sizes") or None, md.get("free", False))
    if k == "contour":
        return ContourModel(md["beta"], md.get("cutoff", 10))
    if k == "random_cluster":
        return RandomClusterModel(md["p"], md["q"], tuple(int(v) for v in md.get("grid", [2, 2])))
    if k == "area":
        return area_model(md["kappa"], md["phi"], Grain(md.get("shape", "disc"), md["r"], md.get("dim", 2)))
    if k == "strauss":
        return strauss_model(md["beta1"], md["beta2"], md["r"], md.get("base_rate", 1.0), md.get("dim", 2))
    if k == "lossnet":
        ln = md["length"]
        law = LengthLaw(ln["kind"], L=ln.get("L", 0.0), lmax=ln.get("lmax", 0.0), mean=ln.get("mean", 0.0))
        return lossnet_model(md["kappa"], law, md.get("C", 1))
    raise ConfigError(f"model.kind: unknown model {k!r}")


def build_window(wd: dict):
    if not wd:
        return None
    if "labels" in wd:
        return LabelSet(wd["labels"])
    if "center" in wd:
        return Ball(tuple(wd["center"]), wd["radius"])
    return Box(tuple(wd["lo"]), tuple(wd["hi"]))


def _window_section(doc: dict) -> dict:
    raw = doc.get("window", {})
    if not isinstance(raw, dict):
        raise ConfigError("window: expected a table")
    keys = set(raw)
    if not keys:
        return {}
    if keys == {"labels"}:
        v = raw["labels"]
        if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
            raise ConfigError("window.labels: expected a list of labels")
        return {"labels": list(v)}
    if keys == {"lo", "hi"}:
        lo, hi = _numlist(raw["lo"], "window.lo"), _numlist(raw["hi"], "window.hi")
        if len(lo) != len(hi):
            raise ConfigError("window.hi: dimension differs from window.lo")
        for i, (a, b) in enumerate(zip(lo, hi)):
            if not (math.isfinite(a) and math.isfinite(b) and a < b):
                raise ConfigError(f"window.hi[{i}]: window must be bounded and nondegenerate")
        return {"lo": lo, "hi": hi}
    if keys == {"center", "radius"}:
        c = _numlist(raw["center"], "window.center")
        r = _num(raw["radius"], "window.radius")
        if not (math.isfinite(r) and r > 0):
            raise ConfigError("window.radius: must be positive and finite")
        return {"center": c, "radius": r}
    for k in sorted(keys):
        if k not in ("labels", "lo", "hi", "center", "radius"):
            raise ConfigError(f"window.{k}: unknown key")
    raise ConfigError("window: give either labels, lo+hi, or center+radius")


def parse_config(text: str) -> RunSpec:
    """Parse and validate a TOML document."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as e:
        raise ConfigError(f"parse error: {e}") from None
    for k in doc:
        if k not in ("model", "window", "limits", "run"):
            raise ConfigError(f"{k}: unknown section")
    m = doc.get("model")
    if not isinstance(m, dict):
        raise ConfigError("model: missing section")
    kind = m.get("kind")
    if kind not in MODEL_KEYS:
        raise ConfigError(f"model.kind: expected one of {sorted(MODEL_KEYS)}, got {kind!r}")
    model = {"kind": kind, **_section({"model": {k: v for k, v in m.items() if k != "kind"}},
                                      "model", MODEL_KEYS[kind])}
    spec = RunSpec(model, _window_section(doc), _section(doc, "limits", LIMIT_KEYS),
                   _section(doc, "run", RUN_KEYS))
    validate(spec)
    return spec


def validate(spec: RunSpec) -> None:
    lim = spec.limits
    if not lim["max_depth"] > 0:
        raise ConfigError("limits.max_depth: must be positive")
    if not lim["max_size"] > 0:
        raise ConfigError("limits.max_size: must be positive")
    if "size_cutoff" in lim and not lim["size_cutoff"] > 0:
        raise ConfigError("limits.size_cutoff: must be positive")
    run = spec.run
    if not 0 <= run["seed"] < 2**64:
        raise ConfigError("run.seed: must be a 64-bit unsigned integer")
    if run["n"] < 0:
        raise ConfigError("run.n: must be nonnegative")
    if run["jobs"] < 1:
        raise ConfigError("run.jobs: must be at least 1")
    if run["cap"] < 1:
        raise ConfigError("run.cap: must be at least 1")
    if not 0 < run["level"] < 1:
        raise ConfigError("run.level: must lie in (0, 1)")
    if run.get("oracle") not in (None, "exact", "stationary"):
        raise ConfigError("run.oracle: expected 'exact' or 'stationary'")
    if run["domain_margin"] < 0:
        raise ConfigError("run.domain_margin: must be nonnegative")
    try:
        m = spec.build_model()
    except NonIntegrable as e:
        raise ConfigError(f"model.beta2: {e}") from None
    except ModelError as e:
        raise ConfigError(f"model: {e}") from None
    w = spec.build_window()
    if w is None and not m.finite_family:
        raise ConfigError("window: this model needs a bounded window")
    if isinstance(w, LabelSet) and m.kind != "toy":
        raise ConfigError("window.labels: label windows are for toy models only")
    if isinstance(w, (Box, Ball)) and m.kind not in ("toy",):
        d = w.dim
        want = {"contour": 2, "random_cluster": 2, "lossnet": 1,
                "area": spec.model.get("dim", 2), "strauss": spec.model.get("dim", 2)}[m.kind]
        if d != want:
            raise ConfigError(f"window: expected dimension {want}, got {d}")


def serialize_config(spec: RunSpec) -> str:
    """TOML text that parses back to ``spec``."""
    return tomli_w.dumps(spec.to_dict())


def load_config(path) -> RunSpec:
    with open(path, encoding="utf-8") as f:
        return parse_config(f.read())
