"""One JSON document carrying every module's parameters.

The document is versioned, validated strictly (unknown keys anywhere are
rejected so typos cannot silently fall back to defaults), and reproduced
verbatim into run manifests so any run can be repeated from its manifest
alone.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .diffusion import GuidancePolicy
from .errors import InvalidInputError
from .geodesic import SpeedParams
from .levelset import EnergyWeights, HeavisideParams
from .par import ParParams

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ScheduleParams:
    steps: int = 1000
    beta1: float = 1e-4
    betaT: float = 0.02
    kind: str = "linear"


@dataclass(frozen=True)
class AreaParams:
    """Targets for the area prior; None means derive a1 from the run's mask."""

    a1_target: float | None = None
    a2_target: float | None = None
    overridden: bool = False


@dataclass(frozen=True)
class SamplerParams:
    ensemble: int = 1
    distance_refresh: int = 50
    noise_scale: float = 0.1
    guidance_space: str = "noise"


@dataclass(frozen=True)
class EvolveParams:
    dt: float = 0.1
    steps: int = 200
    stats_refresh: int = 1


@dataclass(frozen=True)
class NumericsParams:
    var_floor: float = 1e-6
    grad_floor: float = 1e-8
    mapping: str = "offset"


@dataclass(frozen=True)
class LossParams:
    eta1: float = 0.5
    eta2: float = 0.005
    w_t: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    heaviside: HeavisideParams = field(default_factory=HeavisideParams)
    weights: EnergyWeights = field(default_factory=EnergyWeights)
    area: AreaParams = field(default_factory=AreaParams)
    speed: SpeedParams = field(default_factory=SpeedParams)
    par: ParParams = field(default_factory=ParParams)
    schedule: ScheduleParams = field(default_factory=ScheduleParams)
    guidance: GuidancePolicy = field(default_factory=GuidancePolicy)
    sampler: SamplerParams = field(default_factory=SamplerParams)
    evolve: EvolveParams = field(default_factory=EvolveParams)
    numerics: NumericsParams = field(default_factory=NumericsParams)
    losses: LossParams = field(default_factory=LossParams)

    def to_dict(self) -> dict:
        d = {"schema_version": SCHEMA_VERSION, "seed": self.seed}
        for f in fields(self):
            if f.name == "seed":
                continue
            d[f.name] = asdict(getattr(self, f.name))
        return d


_SECTION_TYPES = {
    "heaviside": HeavisideParams,
    "weights": EnergyWeights,
    "area": AreaParams,
    "speed": SpeedParams,
    "par": ParParams,
    "schedule": ScheduleParams,
    "guidance": GuidancePolicy,
    "sampler": SamplerParams,
    "evolve": EvolveParams,
    "numerics": NumericsParams,
    "losses": LossParams,
}


def config_from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise InvalidInputError("config document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise InvalidInputError(
            f"config schema_version {version!r} not supported (expected {SCHEMA_VERSION})"
        )
    known = set(_SECTION_TYPES) | {"schema_version", "seed"}
    unknown = set(doc) - known
    if unknown:
        raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
    kwargs: dict = {"seed": doc.get("seed", 0)}
    for name, cls in _SECTION_TYPES.items():
        section = doc.get(name, {})
        if not isinstance(section, dict):
            raise InvalidInputError(f"config section {name!r} must be an object")
        allowed = {f.name for f in fields(cls)}
        bad = set(section) - allowed
        if bad:
            raise InvalidInputError(f"unknown keys in config section {name!r}: {sorted(bad)}")
        try:
            kwargs[name] = cls(**section)
        except TypeError as exc:
            raise InvalidInputError(f"bad config section {name!r}: {exc}") from None
    return ExperimentConfig(**kwargs)


def load_config_document(path) -> tuple[ExperimentConfig, dict | None]:
    """Load a config file; manifests are accepted and yield their saved args.

    Returns (config, manifest_args) where manifest_args is None for plain
    config files.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"config {path} is not valid JSON: {exc}") from None
    if isinstance(doc, dict) and "artifacts" in doc and "command" in doc:
        return config_from_dict(doc["config"]), dict(doc.get("args", {}))
    return config_from_dict(doc), None
