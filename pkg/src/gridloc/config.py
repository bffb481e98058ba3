"""Run and lattice configuration files (``key = value`` lines, ``#`` comments)."""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields, replace
from importlib import resources

from .corpus import DEFAULT_SPAM_THRESHOLD, Variant
from .geo_grid import US_BBOX, GeoBoundingBox, LatticeSpec


class ConfigError(ValueError):
    pass


def _read_pairs(text: str, source: str) -> dict[str, str]:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",),
                                       delimiters=("=",))
    try:
        parser.read_string("[run]\n" + text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return dict(parser["run"])


def _int_list(value: str) -> tuple[int, ...]:
    return tuple(int(v) for v in value.replace(" ", "").split(",") if v)


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def load_lattice(path) -> LatticeSpec:
    """Lattice from a file holding ``lat_max, lat_min, lon_max, lon_min`` and ``n``."""
    with open(path, encoding="utf-8") as fh:
        pairs = _read_pairs(fh.read(), os.fspath(path))
    return _lattice_from(pairs, os.fspath(path))


def default_lattice() -> LatticeSpec:
    text = resources.files("gridloc").joinpath("data/lattice_us.cfg").read_text(encoding="utf-8")
    return _lattice_from(_read_pairs(text, "lattice_us.cfg"), "lattice_us.cfg")


def _lattice_from(pairs: dict[str, str], source: str) -> LatticeSpec:
    try:
        bbox = GeoBoundingBox(*(float(pairs[k]) for k in ("lat_max", "lat_min", "lon_max", "lon_min")))
        return LatticeSpec(bbox, int(pairs["n"]))
    except KeyError as exc:
        raise ConfigError(f"{source}: missing key {exc.args[0]}") from None
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


@dataclass(frozen=True)
class RunConfig:
    lat_max: float = US_BBOX.lat_max
    lat_min: float = US_BBOX.lat_min
    lon_max: float = US_BBOX.lon_max
    lon_min: float = US_BBOX.lon_min
    lattices: tuple[int, ...] = (8, 11, 16, 32)
    variants: tuple[Variant, ...] = (Variant.TEXT_ONLY,)
    alpha: float = 1.0
    train_fraction: float = 0.75
    seed: int = 42
    spam_k: int = DEFAULT_SPAM_THRESHOLD
    min_df: int = 2
    min_token_length: int = 2
    stem: bool = False
    top_k: int = 5
    stopwords: str | None = None
    gazetteer: str | None = None
    corpus: str | None = None
    model: str | None = None
    reports: str | None = None
    rejects: str | None = None

    @property
    def bbox(self) -> GeoBoundingBox:
        return GeoBoundingBox(self.lat_max, self.lat_min, self.lon_max, self.lon_min)

    def lattice(self, n: int | None = None) -> LatticeSpec:
        return LatticeSpec(self.bbox, self.lattices[0] if n is None else n)

    def validate(self) -> "RunConfig":
        try:
            self.bbox
            for n in self.lattices:
                LatticeSpec(self.bbox, n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.lattices:
            raise ConfigError("at least one lattice size is required")
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if not 0 < self.train_fraction < 1:
            raise ConfigError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.min_df < 1 or self.min_token_length < 1 or self.spam_k < 0 or self.top_k < 1:
            raise ConfigError("min_df, min_token_length and top_k must be >= 1; spam_k >= 0")
        return self

    def with_overrides(self, **kwargs) -> "RunConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None}).validate()

    def to_text(self) -> str:
        lines = ["# resolved gridloc run configuration"]
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if f.name == "lattices":
                value = ",".join(str(n) for n in value)
            elif f.name == "variants":
                value = ",".join(v.value for v in value)
            elif isinstance(value, bool):
                value = str(value).lower()
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


_CONVERTERS = {
    "lat_max": float, "lat_min": float, "lon_max": float, "lon_min": float,
    "alpha": float, "train_fraction": float,
    "seed": int, "spam_k": int, "min_df": int, "min_token_length": int, "top_k": int,
    "stem": _bool,
    "lattices": _int_list, "n": _int_list,
    "variants": lambda v: tuple(Variant(s.strip()) for s in v.split(",") if s.strip()),
    "variant": lambda v: tuple(Variant(s.strip()) for s in v.split(",") if s.strip()),
}
_ALIASES = {"n": "lattices", "variant": "variants"}


def parse_run_config(text: str, source: str = "<config>") -> RunConfig:
    pairs = _read_pairs(text, source)
    known = {f.name for f in fields(RunConfig)} | set(_ALIASES)
    kwargs = {}
    for key, raw in pairs.items():
        if key not in known:
            raise ConfigError(f"{source}: unknown setting {key!r}")
        try:
            value = _CONVERTERS.get(key, str)(raw)
        except ValueError as exc:
            raise ConfigError(f"{source}: bad value for {key}: {exc}") from None
        kwargs[_ALIASES.get(key, key)] = value
    return RunConfig(**kwargs).validate()


def load_run_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_run_config(fh.read(), os.fspath(path))
