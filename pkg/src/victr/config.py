"""Pipeline configuration: key = value text files with CLI overrides."""

from dataclasses import dataclass, fields


@dataclass
class PipelineConfig:
    conllu: str | None = None
    captions: str | None = None
    instances: str | None = None
    quantifier_lexicon: str | None = None
    superclass_lexicon: str | None = None
    alias_table: str | None = None
    out_dir: str = "out"
    basic_width: int = 200
    positional_width: int = 50
    text_width: int = 256
    learning_rate: float = 0.02
    epochs: int = 200
    seed: int = 7
    init_scale: float = 1.0
    max_duplication: int = 10
    many_value: int = 3
    caption_mode: str = "all"
    mirror_attributes: bool = False

    def __post_init__(self):
        for name in ("basic_width", "positional_width", "text_width",
                     "epochs", "max_duplication", "many_value"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.caption_mode not in ("all", "richest"):
            raise ValueError(
                f"caption_mode must be 'all' or 'richest', got {self.caption_mode!r}"
            )


def _type_name(ftype) -> str:
    return ftype if isinstance(ftype, str) else getattr(ftype, "__name__", str(ftype))


_FIELD_TYPES = {f.name: _type_name(f.type) for f in fields(PipelineConfig)}


def _coerce(name: str, raw: str):
    ftype = _FIELD_TYPES[name]
    if ftype == "int":
        return int(raw)
    if ftype == "float":
        return float(raw)
    if ftype == "bool":
        lowered = raw.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    return raw


def load_config(path) -> PipelineConfig:
    values = {}
    with open(path, encoding="utf-8") as f:
        for ln, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected 'key = value'")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in _FIELD_TYPES:
                raise ValueError(f"{path}:{ln}: unknown config key {key!r}")
            values[key] = _coerce(key, value)
    return PipelineConfig(**values)
