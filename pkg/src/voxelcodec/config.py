"""Codec run configuration: dataclass + flat key=value file parsing.

File format: one `key = value` per line; `#` starts a comment; blank
lines ignored. Model weight paths use keys `model.<size>` (for example
`model.64 = weights/m64.vxdw`). Command-line flags override file
values. Unknown keys are rejected rather than ignored.
"""

from dataclasses import dataclass, field

from .errors import ConfigError

_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}

_MODEL_SIZES = (8, 16, 32, 64, 128)


@dataclass
class CodecConfig:
    depth: int = 9
    max_level: int = 5
    use_extension: bool = False
    single_model: bool = False
    model_paths: dict = field(default_factory=dict)  # size -> path
    seed: int = 0

    def validate(self):
        if not 7 <= self.depth <= 16:
            raise ConfigError(f"depth must be in 7..16, got {self.depth}")
        if not 1 <= self.max_level <= 5:
            raise ConfigError(f"max_level must be in 1..5, "
                              f"got {self.max_level}")
        if self.use_extension and self.single_model:
            raise ConfigError("extension and single_model are mutually "
                              "exclusive")
        for size in self.model_paths:
            if size not in _MODEL_SIZES:
                raise ConfigError(f"model.{size}: unsupported block size")
        return self


def _parse_bool(key, raw):
    low = raw.strip().lower()
    if low in _BOOL_TRUE:
        return True
    if low in _BOOL_FALSE:
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _parse_int(key, raw):
    try:
        return int(raw.strip(), 0)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}")


def parse_config_text(text):
    """Parse config text into a key -> raw-string dict."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = body.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        values[key] = raw.strip()
    return values


def config_from_values(values):
    """Typed CodecConfig from raw key/value strings."""
    cfg = CodecConfig()
    for key, raw in values.items():
        if key == "depth":
            cfg.depth = _parse_int(key, raw)
        elif key == "max_level":
            cfg.max_level = _parse_int(key, raw)
        elif key == "extension":
            cfg.use_extension = _parse_bool(key, raw)
        elif key == "single_model":
            cfg.single_model = _parse_bool(key, raw)
        elif key == "seed":
            cfg.seed = _parse_int(key, raw)
        elif key.startswith("model."):
            size_txt = key[len("model."):]
            try:
                size = int(size_txt)
            except ValueError:
                raise ConfigError(f"{key}: bad model size {size_txt!r}")
            cfg.model_paths[size] = raw
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    return cfg.validate()


def load_config(path):
    with open(path, "r", encoding="utf-8") as f:
        return config_from_values(parse_config_text(f.read()))
