"""
Run config files for compare and sweep.

INI format, one section per concern; every key is optional and falls back
to the module defaults. Unknown sections or keys are rejected.

    [dataset]
    manifest = lab/manifest.jsonl     ; relative to the config file

    [arch]
    preset = desk                     ; desk | full | tiny
    dropout = 0.5

    [train]
    epochs = 30
    batch_size = 64
    lr_start = 0.01
    lr_end = 0.001
    momentum = 0.9
    weight_decay = 0.0001
    seed = 0

    [encoder]
    beta = 64
    m = 5
    anchors = uniform                 ; uniform | lloyd_max
    distance = squared_euclidean
    ridge = 1e-8

    [eval]
    fractions = 0.8, 0.2              ; or 0.6, 0.2, 0.2 with a validation split
    repetitions = 10
    stride = 32

    [experiment]
    head = pqr
    seed = 0
    workers = 1
    beta_values = 1, 2, 4             ; sweep grids (default: full grids)
    m_values = 2, 3, 4
    methods = uniform, lloyd_max
"""

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from pqriqa.errors import ConfigError, PqrError
from pqriqa.harness import ExperimentConfig
from pqriqa.network import TrainConfig


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _words(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


# section -> key -> (target field, parser)
SCHEMA: dict[str, dict[str, tuple[str, Callable]]] = {
    "dataset": {"manifest": ("manifest", str)},
    "arch": {"preset": ("arch", str), "dropout": ("dropout_rate", float)},
    "train": {
        "epochs": ("epochs", int),
        "batch_size": ("batch_size", int),
        "lr_start": ("lr_start", float),
        "lr_end": ("lr_end", float),
        "momentum": ("momentum", float),
        "weight_decay": ("weight_decay", float),
        "seed": ("seed", int),
    },
    "encoder": {
        "beta": ("beta", float),
        "m": ("m", int),
        "anchors": ("anchor_method", str),
        "distance": ("distance", str),
        "ridge": ("ridge", float),
    },
    "eval": {
        "fractions": ("fractions", _floats),
        "repetitions": ("repetitions", int),
        "stride": ("stride", int),
    },
    "experiment": {
        "head": ("head", str),
        "seed": ("seed", int),
        "workers": ("workers", int),
        "beta_values": ("beta_values", _floats),
        "m_values": ("m_values", _ints),
        "methods": ("methods", _words),
    },
}

SWEEP_KEYS = ("beta_values", "m_values", "methods")


@dataclass
class RunConfigFile:
    """A parsed config: the experiment plus optional sweep grids."""
    experiment: ExperimentConfig
    sweep_grids: dict = field(default_factory=dict)
    path: Optional[Path] = None

    def grid(self, parameter: str):
        return self.sweep_grids.get("beta_values" if parameter == "beta" else "m_values")

    @property
    def methods(self):
        return self.sweep_grids.get("methods")


def parse_config_text(text: str, base_dir=".", source: str = "<config>",
                      overrides: Optional[dict] = None) -> RunConfigFile:
    """
    Parse INI text into a RunConfigFile.

    Args:
        text: Config contents
        base_dir: Directory relative manifest paths are resolved against
        source: Name used in error messages
        overrides: Experiment fields that win over the file (e.g. CLI flags)

    Raises:
        ConfigError: Unknown section/key, unparseable value, missing manifest
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigError(f"{source}: {e}") from e

    exp: dict = {}
    train: dict = {}
    grids: dict = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{source}: unknown key {key!r} in [{section}]")
            name, conv = SCHEMA[section][key]
            try:
                value = conv(raw.strip())
            except ValueError as e:
                raise ConfigError(f"{source}: [{section}] {key} = {raw!r} is invalid: {e}") from e
            if section == "train":
                train[name] = value
            elif name in SWEEP_KEYS:
                grids[name] = value
            else:
                exp[name] = value

    exp.update(overrides or {})
    if "manifest" not in exp:
        raise ConfigError(f"{source}: [dataset] manifest is required")
    manifest = Path(exp["manifest"])
    if not manifest.is_absolute():
        manifest = Path(base_dir) / manifest
    exp["manifest"] = manifest

    try:
        exp["train"] = TrainConfig(**train)
        experiment = ExperimentConfig(**exp)
    except PqrError as e:
        raise ConfigError(f"{source}: {e}") from e
    return RunConfigFile(experiment=experiment, sweep_grids=grids)


def load_config(path, overrides: Optional[dict] = None) -> RunConfigFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    cfg = parse_config_text(text, base_dir=path.parent, source=str(path), overrides=overrides)
    cfg.path = path
    return cfg
