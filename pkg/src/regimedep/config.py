"""Pipeline configuration (YAML)."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .bootstrap import BootstrapPlan
from .copulas import FAMILIES as COPULA_FAMILIES
from .marginals.innovations import FAMILIES as INNOVATION_FAMILIES

MODES = ("parametric", "semiparametric", "both")


class ConfigError(ValueError):
    pass


@dataclass
class DataConfig:
    prices: str | None = None  # None: generate the bundled synthetic dataset
    announcements: str | None = None
    layout: str = "wide"
    synthetic_seed: int = 2028


@dataclass
class ChangepointConfig:
    override: str | None = None
    window: int = 4
    alpha: float = 0.05


@dataclass
class DiagnosticsConfig:
    lags: list[int] = field(default_factory=lambda: [1, 5, 10, 20])
    acf_max_lag: int = 40
    hill_k_min: int = 10
    hill_k_max: int = 200


@dataclass
class MarginalConfig:
    p_grid: list[int] = field(default_factory=lambda: [1, 2])
    q_grid: list[int] = field(default_factory=lambda: [0, 1, 2])
    families: list[str] = field(default_factory=lambda: list(INNOVATION_FAMILIES))
    restarts: int = 3
    init: str = "unconditional"  # or "sample": pre-sample variance seed


@dataclass
class CopulaConfig:
    families: list[str] = field(default_factory=lambda: list(COPULA_FAMILIES))


@dataclass
class FunctionalConfig:
    nodes: int = 128
    mc_tau_n: int = 200_000


@dataclass
class BootstrapConfig:
    scheme: str = "moving_block"
    block_length: int | None = None
    replicates: int = 50
    dump_replicates: bool = False

    def plan(self, seed: int) -> BootstrapPlan:
        return BootstrapPlan(self.scheme, self.block_length, self.replicates, seed)


@dataclass
class IndependenceConfig:
    permutations: int = 999


@dataclass
class PlotConfig:
    n_sim: int | None = None  # None: T of the period
    hill_k_step: int = 5


@dataclass
class PipelineConfig:
    seed: int = 12345
    output: str = "out"
    mode: str = "both"
    data: DataConfig = field(default_factory=DataConfig)
    changepoint: ChangepointConfig = field(default_factory=ChangepointConfig)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    marginals: MarginalConfig = field(default_factory=MarginalConfig)
    copulas: CopulaConfig = field(default_factory=CopulaConfig)
    functionals: FunctionalConfig = field(default_factory=FunctionalConfig)
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)
    independence: IndependenceConfig = field(default_factory=IndependenceConfig)
    plots: PlotConfig = field(default_factory=PlotConfig)

    def validate(self) -> "PipelineConfig":
        if self.seed is None:
            raise ConfigError("seed is required")
        if not str(self.output):
            raise ConfigError("output directory must be nonempty")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if (self.data.prices is None) != (self.data.announcements is None):
            raise ConfigError("give both price and announcement paths, or neither")
        for name in ("prices", "announcements"):
            v = getattr(self.data, name)
            if v is not None and not str(v):
                raise ConfigError(f"empty {name} path")
        m = self.marginals
        if not m.p_grid or not m.q_grid or not m.families:
            raise ConfigError("marginal grids must be nonempty")
        bad = set(m.families) - set(INNOVATION_FAMILIES)
        if bad:
            raise ConfigError(f"unknown innovation families {sorted(bad)}")
        fams = self.copulas.families
        if len(set(fams)) < 2 or set(fams) - set(COPULA_FAMILIES):
            raise ConfigError("copula families: at least two, from the known set")
        if self.changepoint.window < 2 or not 0 < self.changepoint.alpha < 1:
            raise ConfigError("invalid changepoint settings")
        if self.independence.permutations < 99:
            raise ConfigError("need at least 99 permutations")
        if m.init not in ("unconditional", "sample"):
            raise ConfigError("marginals.init must be 'unconditional' or 'sample'")
        try:
            self.bootstrap.plan(self.seed)
        except ValueError as exc:
            raise ConfigError(f"bootstrap: {exc}") from exc
        return self

    @property
    def modes(self) -> tuple[str, ...]:
        return ("parametric", "semiparametric") if self.mode == "both" else (self.mode,)

    @property
    def primary_mode(self) -> str:
        return "parametric" if self.mode == "both" else self.mode

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        """Hash of every setting except the output directory."""
        d = self.to_dict()
        d.pop("output")
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_SECTIONS = {f.name: f.type for f in fields(PipelineConfig)}
_CLASSES = {
    "data": DataConfig, "changepoint": ChangepointConfig, "diagnostics": DiagnosticsConfig,
    "marginals": MarginalConfig, "copulas": CopulaConfig, "functionals": FunctionalConfig,
    "bootstrap": BootstrapConfig, "independence": IndependenceConfig, "plots": PlotConfig,
}


def config_from_dict(raw: dict | None) -> PipelineConfig:
    raw = copy.deepcopy(raw or {})
    unknown = set(raw) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    kwargs = {}
    for key, value in raw.items():
        cls = _CLASSES.get(key)
        if cls is None:
            kwargs[key] = value
            continue
        if not isinstance(value, dict):
            raise ConfigError(f"section {key!r} must be a mapping")
        names = {f.name for f in fields(cls)}
        bad = set(value) - names
        if bad:
            raise ConfigError(f"unknown keys in {key!r}: {sorted(bad)}")
        kwargs[key] = cls(**value)
    return PipelineConfig(**kwargs).validate()


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"missing config file {path}")
    with path.open() as fh:
        raw = yaml.safe_load(fh)
    cfg = config_from_dict(raw)
    # relative data paths resolve against the config file
    for name in ("prices", "announcements"):
        v = getattr(cfg.data, name)
        if v is not None and not Path(v).is_absolute():
            setattr(cfg.data, name, str((path.parent / v).resolve()))
    return cfg


def dump_config(cfg: PipelineConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
