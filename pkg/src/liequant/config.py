"""Experiment configuration: key=value text and JSON, parsed to one dataclass."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError, InvalidFamilyError
from .families import FAMILIES
from .groups import GroupSpec, SU2, torus

STAGES = ("positivity", "garding", "decay", "corollaries")


@dataclass
class ExperimentConfig:
    """Inputs of one experiment run.

    Parameters
    ----------
    group : str
        ``"su2"`` or ``"torus<n>"``.
    cutoffs : list of float
        Ascending truncation levels: spins ``l`` on SU(2), frequency radii on
        the torus.
    quadrature_level : float, optional
        Exactness level of the sampling grid. Defaults to the smallest level
        that resolves every cutoff.
    mollifier_r : float, optional
        Support radius of the mollifier at weight one.
    family : str
        Built-in symbol family.
    params : dict
        Family parameters.
    m : float, optional
        Order used for Gårding scaling and decay bounds. Defaults to the
        family's order.
    s_values : list of float
        Sobolev indices for the norm estimate.
    out : str
        Output directory.
    seed : int
        Seed for random families.
    tol : float
        Relative eigenvalue tolerance.
    stages : list of str
        Pipeline stages to run.
    decay_cutoff : float, optional
        Amplitude cutoff for decay fits. Defaults to the largest cutoff.
    eta_factor : float
        Amplitude cutoff of ``P`` relative to the matrix cutoff; ``P_L`` is
        the compression of the amplitude operator with this larger cutoff.
    """

    group: str = "su2"
    cutoffs: list = field(default_factory=lambda: [3.0, 4.0, 5.0])
    quadrature_level: float | None = None
    mollifier_r: float | None = None
    family: str = "const_identity"
    params: dict = field(default_factory=dict)
    m: float | None = None
    s_values: list = field(default_factory=lambda: [0.0, 1.0])
    out: str = "liequant_out"
    seed: int = 0
    tol: float = 1e-8
    stages: list = field(default_factory=lambda: list(STAGES))
    decay_cutoff: float | None = None
    eta_factor: float = 3.0

    def __post_init__(self):
        self.validate()

    # -----------------------------------------------------------------
    def validate(self) -> None:
        group_spec(self.group)
        self.cutoffs = [float(c) for c in self.cutoffs]
        if not self.cutoffs:
            raise ConfigError("at least one cutoff is required")
        if any(b <= a for a, b in zip(self.cutoffs[:-1], self.cutoffs[1:])):
            raise ConfigError("cutoffs must be strictly ascending")
        if self.family not in FAMILIES:
            raise InvalidFamilyError(f"unknown symbol family {self.family!r}")
        self.s_values = [float(s) for s in self.s_values]
        bad = [s for s in self.stages if s not in STAGES]
        if bad:
            raise ConfigError(f"unknown stages {bad}; choose from {', '.join(STAGES)}")
        self.seed = int(self.seed)
        self.tol = float(self.tol)
        self.eta_factor = float(self.eta_factor)
        if self.eta_factor < 1.0:
            raise ConfigError("eta_factor must be >= 1")
        for name in ("quadrature_level", "mollifier_r", "m", "decay_cutoff"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, float(v))

    @property
    def spec(self) -> GroupSpec:
        return group_spec(self.group)

    def family_params(self) -> dict:
        p = dict(self.params)
        if self.family == "random_psd":
            p.setdefault("seed", self.seed)
        return p

    def to_dict(self) -> dict:
        return asdict(self)


def group_spec(name: str) -> GroupSpec:
    name = str(name).strip().lower()
    if name == "su2":
        return SU2
    if name.startswith("torus"):
        tail = name[5:] or "1"
        if tail.isdigit() and int(tail) >= 1:
            return torus(int(tail))
    raise ConfigError(f"unknown group {name!r}; use su2 or torus<n>")


# ---------------------------------------------------------------------------
# parsing

_LIST_KEYS = {"cutoffs", "s_values", "stages"}
_KEYS = {f.name for f in fields(ExperimentConfig)}


def _scalar(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _value(key: str, text: str):
    if key in _LIST_KEYS:
        text = text.strip()
        if text.startswith("["):
            return json.loads(text)
        return [_scalar(t) for t in text.split(",") if t.strip()]
    v = _scalar(text)
    return None if v == "none" else v


def parse_keyvalue(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment, ``params.<k>`` sets a family parameter."""
    data: dict = {"params": {}}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key.startswith("params."):
            data["params"][key[7:]] = _scalar(val)
        elif key in _KEYS and key != "params":
            data[key] = _value(key, val)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    return ExperimentConfig(**data)


def parse_json(text: str) -> ExperimentConfig:
    data = json.loads(text)
    if not isinstance(data, dict):
        raise ConfigError("JSON config must be an object")
    unknown = set(data) - _KEYS
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    return ExperimentConfig(**data)


def load_config(path) -> ExperimentConfig:
    """Load a config file; JSON when the content starts with ``{``."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        return parse_json(text)
    return parse_keyvalue(text)
