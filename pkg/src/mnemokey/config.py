"""Pipeline configuration loaded from a JSON file.

Relative paths in the file are resolved against the file's directory.
Credentials never live here: the client section names the environment
variable that holds the key.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from . import assets
from .errors import ConfigError
from .retrieve import DEFAULT_SCORE_FLOOR, StructuralWeights

PATH_KEYS = ("features", "inventory_en", "inventory_ko", "codas", "rules", "lexicon", "prompt", "bigrams")
_BUNDLED = {
    "features": assets.FEATURES,
    "inventory_en": assets.INVENTORY_EN,
    "inventory_ko": assets.INVENTORY_KO,
    "codas": assets.CODAS_KO,
    "rules": assets.RULES,
    "lexicon": assets.LEXICON,
    "prompt": assets.PROMPT,
    "bigrams": assets.BIGRAMS,
}
_SECRET_KEYS = {"api_key", "apikey", "key", "token", "secret", "password", "authorization"}


@dataclass(frozen=True)
class Paths:
    features: Path
    inventory_en: Path
    inventory_ko: Path
    codas: Path
    rules: Path
    lexicon: Path
    prompt: Path
    bigrams: Path

    @classmethod
    def bundled(cls):
        return cls(**{k: assets.asset_path(v) for k, v in _BUNDLED.items()})

    def all_bundled(self) -> bool:
        return all(getattr(self, k) == assets.asset_path(v) for k, v in _BUNDLED.items())


@dataclass(frozen=True)
class ClientSettings:
    endpoint: Optional[str] = None
    model: Optional[str] = None
    api_key_env: str = "MNEMOKEY_API_KEY"
    timeout: float = 60.0
    retries: int = 2
    backoff: float = 0.5


@dataclass(frozen=True)
class PipelineConfig:
    paths: Paths = field(default_factory=Paths.bundled)
    weights: StructuralWeights = field(default_factory=StructuralWeights)
    max_k: int = 2
    overgenerate_n: int = 5
    temperature: float = 0.7
    concurrency: int = 4
    seed: int = 0
    score_floor: float = DEFAULT_SCORE_FLOOR
    embed_dim: int = 64
    client: ClientSettings = field(default_factory=ClientSettings)

    def validate(self) -> "PipelineConfig":
        for key in PATH_KEYS:
            path = getattr(self.paths, key)
            if not Path(path).is_file():
                raise ConfigError(f"{key}: no such file {path}")
        if self.max_k < 1:
            raise ConfigError("max_k must be at least 1")
        if self.overgenerate_n < 1:
            raise ConfigError("overgenerate_n must be at least 1")
        if self.concurrency < 1:
            raise ConfigError("concurrency must be at least 1")
        if self.embed_dim < 1:
            raise ConfigError("embed_dim must be at least 1")
        if self.client.retries < 0:
            raise ConfigError("client.retries must be non-negative")
        return self

    def with_overrides(self, **kw) -> "PipelineConfig":
        """Copy with non-None keyword overrides; path keys go into ``paths``."""
        path_kw = {k: Path(v) for k, v in kw.items() if k in PATH_KEYS and v is not None}
        other = {k: v for k, v in kw.items() if k not in PATH_KEYS and v is not None}
        cfg = replace(self, **other)
        if path_kw:
            cfg = replace(cfg, paths=replace(cfg.paths, **path_kw))
        return cfg.validate()

    def to_dict(self):
        d = asdict(self)
        d["paths"] = {k: str(v) for k, v in d["paths"].items()}
        return d


def _check_keys(section: str, data: dict, allowed):
    for key in data:
        if key.lower() in _SECRET_KEYS:
            raise ConfigError(f"{section}{key}: credentials must come from the environment, "
                              "set client.api_key_env instead")
        if key not in allowed:
            raise ConfigError(f"{section}{key}: unknown setting")


def config_from_dict(data: dict, base_dir: Optional[Path] = None) -> PipelineConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    top = {f.name for f in fields(PipelineConfig)}
    _check_keys("", data, top)
    kw = {}
    default_paths = Paths.bundled()
    paths_in = data.get("paths", {})
    _check_keys("paths.", paths_in, PATH_KEYS)
    resolved = {}
    for key in PATH_KEYS:
        if key in paths_in:
            p = Path(paths_in[key]).expanduser()
            if not p.is_absolute() and base_dir is not None:
                p = base_dir / p
            resolved[key] = p
        else:
            resolved[key] = getattr(default_paths, key)
    kw["paths"] = Paths(**resolved)
    if "weights" in data:
        _check_keys("weights.", data["weights"], {f.name for f in fields(StructuralWeights)})
        try:
            kw["weights"] = StructuralWeights(**data["weights"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"weights: {exc}") from None
    if "client" in data:
        _check_keys("client.", data["client"], {f.name for f in fields(ClientSettings)})
        kw["client"] = ClientSettings(**data["client"])
    for key in ("max_k", "overgenerate_n", "concurrency", "seed", "embed_dim"):
        if key in data:
            if not isinstance(data[key], int) or isinstance(data[key], bool):
                raise ConfigError(f"{key} must be an integer")
            kw[key] = data[key]
    for key in ("temperature", "score_floor"):
        if key in data:
            if not isinstance(data[key], (int, float)) or isinstance(data[key], bool):
                raise ConfigError(f"{key} must be a number")
            kw[key] = float(data[key])
    return PipelineConfig(**kw).validate()


def load_config(path=None) -> PipelineConfig:
    """Read a JSON config file; with no path, return the bundled defaults."""
    if path is None:
        return PipelineConfig().validate()
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(data, path.parent)
