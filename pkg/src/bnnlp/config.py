"""Run configuration: dataclasses plus YAML/JSON (de)serialization."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .exceptions import ConfigError
from .mcmc import ChainConfig
from .structural_id import VarSpec

TRANSFORMS = ("level", "log_diff_pct", "diff")

FRED_MD_TRANSFORMS = {
    "EBP": "level",
    "CPIAUCSL": "log_diff_pct",
    "INDPRO": "log_diff_pct",
    "CE16OV": "log_diff_pct",
    "FEDFUNDS": "level",
    "S.P.500": "log_diff_pct",
}
FRED_MD_ORDER = ["EBP", "CPIAUCSL", "INDPRO", "CE16OV", "FEDFUNDS", "S.P.500"]
FRED_MD_TARGETS = ["CPIAUCSL", "INDPRO", "CE16OV"]


@dataclass
class DatasetConfig:
    csv_path: str = "data.csv"
    date_column: str = "date"
    transforms: dict[str, str] = field(default_factory=lambda: dict(FRED_MD_TRANSFORMS))
    variable_order: list[str] = field(default_factory=lambda: list(FRED_MD_ORDER))
    sample_start: str = "1960-01"
    sample_end: str = "2020-12"

    def validate(self) -> None:
        if not self.variable_order:
            raise ConfigError("dataset.variable_order must not be empty")
        bad = {k: v for k, v in self.transforms.items() if v not in TRANSFORMS}
        if bad:
            raise ConfigError(f"unknown transforms {bad}; expected one of {TRANSFORMS}")
        missing = [c for c in self.variable_order if c not in self.transforms]
        if missing:
            raise ConfigError(f"no transform given for {missing}")


@dataclass
class RunConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    var: VarSpec = field(default_factory=VarSpec)
    hidden_layers: int = 1
    neurons: int | str = "K"
    chain: ChainConfig = field(default_factory=ChainConfig)
    horizons: int = 24
    shock_sizes: list[float] = field(default_factory=lambda: [1.0, -1.0, 3.0])
    n_paths: int = 400
    n_lags: int = 3
    targets: list[str] = field(default_factory=lambda: list(FRED_MD_TARGETS))
    use_network: bool = True
    standardize: bool = True
    output_dir: str = "results"

    def validate(self) -> None:
        self.dataset.validate()
        if not self.shock_sizes:
            raise ConfigError("shock_sizes must not be empty")
        if self.horizons < 0 or self.n_paths < 1 or self.n_lags < 1 or self.hidden_layers < 1:
            raise ConfigError("horizons >= 0, n_paths >= 1, n_lags >= 1 and hidden_layers >= 1 are required")
        if not (self.neurons == "K" or (isinstance(self.neurons, int) and self.neurons >= 1)):
            raise ConfigError(f"neurons must be 'K' or a positive integer, got {self.neurons!r}")
        if not self.targets:
            raise ConfigError("at least one target variable is required")
        missing = [t for t in self.targets if t not in self.dataset.transforms]
        if missing:
            raise ConfigError(f"no transform given for target(s) {missing}")
        order = self.var.variable_order or tuple(self.dataset.variable_order)
        if self.var.variable_order and list(self.var.variable_order) != list(self.dataset.variable_order):
            raise ConfigError("var.variable_order disagrees with dataset.variable_order")
        if not order:
            raise ConfigError("VAR variable order is empty")

    @property
    def variable_order(self) -> list[str]:
        return list(self.var.variable_order or self.dataset.variable_order)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["var"]["variable_order"] = list(d["var"]["variable_order"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d or {})
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "dataset" in d:
                d["dataset"] = _build(DatasetConfig, d["dataset"], "dataset")
            if "var" in d:
                d["var"] = _build(VarSpec, d["var"], "var")
            if "chain" in d:
                d["chain"] = _build(ChainConfig, d["chain"], "chain")
            if "shock_sizes" in d:
                d["shock_sizes"] = [float(t) for t in d["shock_sizes"]]
            cfg = cls(**d)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg


def _build(klass, value, name):
    if not isinstance(value, dict):
        raise ConfigError(f"{name} must be a mapping")
    known = {f.name for f in fields(klass)}
    unknown = set(value) - known
    if unknown:
        raise ConfigError(f"unknown {name} keys: {sorted(unknown)}")
    return klass(**value)


def load_config(path) -> RunConfig:
    """Read a YAML (or JSON) config file; a run manifest is accepted as well."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if isinstance(data, dict) and "config" in data and "input_hash" in data:
        data = data["config"]
    return RunConfig.from_dict(data)


def dump_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))
