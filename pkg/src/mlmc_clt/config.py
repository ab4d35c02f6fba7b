"""Experiment configuration: JSON document validated against the shipped schema."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import jsonschema
from referencing import Registry, Resource

from .families import ConstantFamily, GaussianFamily, HeavyFailureFamily, LevelFamily, PartitionFamily
from .rates import RateTriplet

SCHEMA_NAMES = ("config", "plan", "regime", "normality", "diagnostics")

FAMILY_KINDS = {
    "gaussian": GaussianFamily,
    "partition": PartitionFamily,
    "heavy": HeavyFailureFamily,
    "constant": ConstantFamily,
}


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps it to exit code 2."""


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("mlmc_clt").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


@lru_cache(maxsize=None)
def _registry() -> Registry:
    return Registry().with_resources(
        (f"{name}.schema.json", Resource.from_contents(load_schema(name))) for name in SCHEMA_NAMES
    )


def validator(name: str) -> jsonschema.Draft202012Validator:
    return jsonschema.Draft202012Validator(load_schema(name), registry=_registry())


def validate(document: dict, name: str) -> None:
    """Raise ``jsonschema.ValidationError`` if ``document`` violates schema ``name``."""
    validator(name).validate(document)


@dataclass
class ExperimentConfig:
    family: dict
    rates: dict = field(default_factory=dict)
    epsilon: float | None = None
    epsilons: list[float] = field(default_factory=lambda: [1e-1, 1e-2, 1e-3])
    replications: int = 2000
    seed: int = 0
    nu: list[float] = field(default_factory=lambda: [0.25, 1.0, 4.0])
    output_dir: str = "out"
    threads: int = 1
    sweep: bool = False
    ui_x: float = 2.0
    max_level: int = 40
    witness_levels: list[int] = field(default_factory=lambda: list(range(8, 17)))

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        errors = sorted(validator("config").iter_errors(raw), key=lambda e: list(e.path))
        if errors:
            where = "/".join(str(p) for p in errors[0].path) or "<root>"
            raise ConfigError(f"invalid config at {where}: {errors[0].message}")
        return cls(**raw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw)

    def build_family(self) -> LevelFamily:
        params = {k: v for k, v in self.family.items() if k != "kind"}
        try:
            return FAMILY_KINDS[self.family["kind"]](**params)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def build_rates(self, family: LevelFamily) -> RateTriplet:
        """Family rates with config overrides applied; may raise InadmissibleRatesError."""
        return RateTriplet(**{**family.rates().as_dict(), **self.rates})

    def raw_rates(self, family: LevelFamily) -> tuple[float, float, float, float]:
        merged = {**family.rates().as_dict(), **self.rates}
        return merged["alpha"], merged["beta"], merged["gamma"], merged["c_alpha"]
