"""Run configuration: one INI file per experiment, presets shipped with the package."""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .grid import GridFunction
from .inputs import random_pair, smooth_bump, spike
from .kernels import KernelFamily, SphericalFunction, br_family, dini_kernel, lacunary_omega, rough_family, sign_omega

KERNEL_TYPES = ("dini", "rough", "br")
DINI_PROFILES = {"hilbert": 1, "riesz": 2}
INPUT_KINDS = ("random", "spike", "bump", "zero")
WEIGHT_FAMILIES = ("power", "constant", "piecewise")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    name: str = "custom"
    dim: int = 1
    m: int = 10
    sizes: tuple[int, ...] = ()
    kernel: str = "dini"
    profile: str = "hilbert"
    omega: str = "sign"
    omega_seed: int = 0
    q: float = math.inf
    p1: float = 1.0
    p2: float = 2.0
    t: float = 2.0
    r: float = 2.0
    lam: float | None = None
    retries: int = 2
    weight: str = "power"
    weight_params: tuple[float, ...] = ()
    weight_values: tuple[float, ...] = ()
    f1: str = "random"
    f2: str = "random"
    trials: dict[str, int] = field(default_factory=dict)
    seed: int = 0
    out: str = "runs"

    @property
    def n(self) -> int:
        return 1 << self.m

    @property
    def nu(self) -> int:
        return max(self.m - 3, 1)

    @property
    def grid_sizes(self) -> tuple[int, ...]:
        return self.sizes or (self.m,)

    def trial_count(self, suite: str, default: int) -> int:
        return self.trials.get(suite, default)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sizes"] = list(self.sizes)
        d["weight_params"] = list(self.weight_params)
        d["weight_values"] = list(self.weight_values)
        d["q"] = _fmt(self.q)
        d["trials"] = dict(sorted(self.trials.items()))
        d.pop("out")
        return d

    def hash(self) -> str:
        """Digest of every setting that affects results (the output directory is excluded)."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def validate(self) -> "RunConfig":
        if self.dim not in (1, 2):
            raise ConfigError(f"dim must be 1 or 2, got {self.dim}")
        top = 14 if self.dim == 1 else 10
        for m in (self.m,) + self.sizes:
            if not 4 <= m <= top:
                raise ConfigError(f"grid exponent {m} outside [4, {top}] for d = {self.dim}")
        if self.kernel not in KERNEL_TYPES:
            raise ConfigError(f"kernel type must be one of {KERNEL_TYPES}, got {self.kernel!r}")
        if self.kernel == "dini":
            need = DINI_PROFILES.get(self.profile)
            if need is None:
                raise ConfigError(f"unknown dini profile {self.profile!r}")
            if need != self.dim:
                raise ConfigError(f"dini profile {self.profile!r} lives in d = {need}")
        if self.kernel == "rough":
            if self.omega == "sign" and self.dim != 1:
                raise ConfigError("omega = sign needs d = 1")
            if self.omega == "lacunary" and self.dim != 2:
                raise ConfigError("omega = lacunary needs d = 2")
        if not self.q >= 1:
            raise ConfigError(f"q must be at least 1, got {self.q}")
        for key in ("p1", "p2"):
            if not 1 <= getattr(self, key) < math.inf:
                raise ConfigError(f"{key} must lie in [1, inf)")
        if not self.t > 1 or not self.r > 1:
            raise ConfigError("t and r must exceed 1")
        if self.kernel == "rough" and not math.isinf(self.q):
            qd = self.q / (self.q - 1.0) if self.q > 1 else math.inf
            if self.p2 < qd:
                raise ConfigError(f"rough kernel with q = {self.q} requires p2 >= q' = {qd:g}, got p2 = {self.p2}")
            if self.t <= qd:
                raise ConfigError(f"rough kernel with q = {self.q} requires t > q' = {qd:g}, got t = {self.t}")
        if self.lam is not None and not self.lam > 1:
            raise ConfigError("lambda must exceed 1")
        if self.retries < 0:
            raise ConfigError("retries must be nonnegative")
        if self.weight not in WEIGHT_FAMILIES:
            raise ConfigError(f"weight family must be one of {WEIGHT_FAMILIES}, got {self.weight!r}")
        if self.weight == "piecewise":
            if self.dim != 1:
                raise ConfigError("piecewise weights need d = 1")
            if len(self.weight_values) != len(self.weight_params) + 1:
                raise ConfigError("piecewise weights need one more value than breakpoints")
            if any(v <= 0 for v in self.weight_values):
                raise ConfigError("weight values must be positive")
        if self.weight == "constant" and len(self.weight_params) > 1:
            raise ConfigError("a constant weight takes at most one parameter")
        for key in ("f1", "f2"):
            v = getattr(self, key)
            if v not in INPUT_KINDS and not Path(v).exists():
                raise ConfigError(f"{key} = {v!r} is neither a generator {INPUT_KINDS} nor an existing file")
        if any(v < 0 for v in self.trials.values()):
            raise ConfigError("trial counts must be nonnegative")
        return self

    # -- construction

    def omega_function(self) -> SphericalFunction:
        if self.omega == "sign":
            return sign_omega()
        if self.omega == "lacunary":
            return lacunary_omega(seed=self.omega_seed, q=self.q)
        return SphericalFunction.load(self.omega, self.dim, self.q)

    def family(self, m: int | None = None) -> KernelFamily:
        nu = max((self.m if m is None else m) - 3, 1)
        if self.kernel == "dini":
            if self.profile == "hilbert":
                return dini_kernel(lambda x: 1.0 / x, 1, 0, nu)
            return dini_kernel(lambda x, y: x / np.power(x * x + y * y, 1.5), 2, 0, nu)
        if self.kernel == "rough":
            return rough_family(self.omega_function(), 0, nu)
        return br_family(self.dim, 0, nu)

    def inputs(self, rng: np.random.Generator, m: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        n = 1 << (self.m if m is None else m)
        pair = random_pair(rng, n, self.dim)
        out = []
        for kind, rand in zip((self.f1, self.f2), pair):
            if kind == "random":
                out.append(rand)
            elif kind == "spike":
                out.append(spike(n, self.dim))
            elif kind == "bump":
                out.append(smooth_bump(n, self.dim))
            elif kind == "zero":
                out.append(np.zeros((n,) * self.dim))
            else:
                g = GridFunction.load(kind).values
                if g.shape != (n,) * self.dim:
                    raise ConfigError(f"{kind}: shape {g.shape} does not match the grid")
                out.append(g)
        return out[0], out[1]


def _fmt(x: float | None):
    if x is None:
        return None
    return "inf" if math.isinf(x) else x


def _float(v: str) -> float:
    v = v.strip().lower()
    return math.inf if v in ("inf", "infinity") else float(v)


def _floats(v: str) -> tuple[float, ...]:
    return tuple(float(x) for x in v.replace(",", " ").split())


_FIELDS = {
    # (section, key): (attribute, parser)
    ("run", "name"): ("name", str),
    ("run", "seed"): ("seed", int),
    ("run", "out"): ("out", str),
    ("grid", "dim"): ("dim", int),
    ("grid", "m"): ("m", int),
    ("grid", "sizes"): ("sizes", lambda v: tuple(int(x) for x in v.replace(",", " ").split())),
    ("kernel", "type"): ("kernel", str),
    ("kernel", "profile"): ("profile", str),
    ("kernel", "omega"): ("omega", str),
    ("kernel", "omega_seed"): ("omega_seed", int),
    ("kernel", "q"): ("q", _float),
    ("exponents", "p1"): ("p1", _float),
    ("exponents", "p2"): ("p2", _float),
    ("exponents", "t"): ("t", _float),
    ("exponents", "r"): ("r", _float),
    ("sparsifier", "lambda"): ("lam", lambda v: None if v.strip() in ("", "default") else float(v)),
    ("sparsifier", "retries"): ("retries", int),
    ("weights", "family"): ("weight", str),
    ("weights", "params"): ("weight_params", _floats),
    ("weights", "values"): ("weight_values", _floats),
    ("inputs", "f1"): ("f1", str),
    ("inputs", "f2"): ("f2", str),
}


def parse_config(text: str, base: Path | None = None) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    kw: dict = {}
    trials: dict[str, int] = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            if section == "trials":
                try:
                    trials[key] = int(value)
                except ValueError:
                    raise ConfigError(f"[trials] {key} = {value!r} is not an integer") from None
                continue
            spec = _FIELDS.get((section, key))
            if spec is None:
                raise ConfigError(f"unknown setting [{section}] {key}")
            attr, conv = spec
            try:
                kw[attr] = conv(value)
            except ValueError:
                raise ConfigError(f"[{section}] {key} = {value!r} could not be parsed") from None
    cfg = RunConfig(**kw, trials=trials)
    # relative input and omega paths are taken relative to the config file
    if base is not None:
        for attr in ("f1", "f2", "omega"):
            v = getattr(cfg, attr)
            if v not in INPUT_KINDS + ("sign", "lacunary") and not Path(v).is_absolute():
                cfg = replace(cfg, **{attr: str(base / v)})
    return cfg.validate()


def preset_names() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files("sparsedom.presets").iterdir() if p.name.endswith(".ini"))


def load_config(spec: str) -> RunConfig:
    """A path to an INI file or the name of a shipped preset."""
    path = Path(spec)
    if path.exists():
        return parse_config(path.read_text(), path.parent)
    res = resources.files("sparsedom.presets") / f"{spec}.ini"
    if res.is_file():
        return parse_config(res.read_text())
    raise ConfigError(f"no config file or preset named {spec!r} (presets: {', '.join(preset_names())})")


def dump_config(cfg: RunConfig) -> str:
    """INI text that parses back to ``cfg``."""
    lines = []
    sections: dict[str, list[str]] = {}
    for (section, key), (attr, _) in _FIELDS.items():
        v = getattr(cfg, attr)
        if attr == "sizes":
            v = " ".join(str(x) for x in v)
        elif attr in ("weight_params", "weight_values"):
            v = " ".join(repr(x) for x in v)
        elif attr == "lam":
            v = "default" if v is None else repr(v)
        elif isinstance(v, float):
            v = "inf" if math.isinf(v) else repr(v)
        sections.setdefault(section, []).append(f"{key} = {v}")
    for section, body in sections.items():
        lines.append(f"[{section}]")
        lines.extend(body)
        lines.append("")
    if cfg.trials:
        lines.append("[trials]")
        lines.extend(f"{k} = {v}" for k, v in sorted(cfg.trials.items()))
        lines.append("")
    return "\n".join(lines)
