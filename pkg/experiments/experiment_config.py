import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

logger = logging.getLogger(__name__)

EXPERIMENT_TAGS = (
    "validate",
    "arithmetic-suite",
    "norms",
    "fejer",
    "abel-poisson",
    "approx-net",
    "decay-probe",
    "content-probe",
    "commutative-inequality",
    "ideals",
    "psl-preset",
)

PRESETS_DIR = Path(__file__).resolve().parent.parent / "presets"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GroupConfig(_Strict):
    family: Literal["finite-cyclic", "finite-dihedral", "product-of-finite", "Z^d", "free-F2", "free-product-Z2-Z3"]
    n: Optional[int] = Field(default=None, ge=1)
    orders: Optional[List[int]] = None
    d: int = Field(default=1, ge=1)
    length: Optional[str] = None

    @model_validator(mode="after")
    def _check_params(self):
        if self.family in ("finite-cyclic", "finite-dihedral") and self.n is None:
            raise ValueError(f"Group family {self.family} needs n")
        if self.family == "product-of-finite" and not self.orders:
            raise ValueError("Group family product-of-finite needs orders")
        return self

    def params(self) -> Dict[str, Any]:
        if self.family == "product-of-finite":
            return {"orders": self.orders}
        if self.family == "Z^d":
            return {"d": self.d}
        if self.n is not None:
            return {"n": self.n}
        return {}


def _check_turns(value):
    if isinstance(value, (int, float)):
        return value
    try:
        Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"Phases must be p/q or a decimal number of turns, got {value!r}")
    return str(value).strip()


class AutomorphismConfig(_Strict):
    """One table entry: a block permutation and optional diagonal conjugators in turns."""

    permutation: List[int]
    phases: Optional[List[List[Union[str, float]]]] = None

    @field_validator("phases")
    @classmethod
    def _parse_phases(cls, value):
        if value is None:
            return value
        return [[_check_turns(t) for t in block] for block in value]


class ActionConfig(_Strict):
    """
    trivial | permutation (block permutation per generator letter) |
    inner-phases (Ad of a diagonal unitary per letter, given in turns per block) |
    table (one automorphism per group element word, finite groups only).
    """

    kind: Literal["trivial", "permutation", "inner-phases", "table"] = "trivial"
    permutations: Dict[str, List[int]] = Field(default_factory=dict)
    phases: Dict[str, List[List[float]]] = Field(default_factory=dict)
    table: Dict[str, AutomorphismConfig] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_table(self):
        if self.kind == "table" and not self.table:
            raise ValueError("A table action needs a table")
        return self


class PerturbationConfig(_Strict):
    g: str
    h: str
    phase: float


class CocycleEntryConfig(_Strict):
    """σ(g, h) as turns: one value for a scalar, or one value per block."""

    g: str
    h: str
    turns: Union[str, float, List[Union[str, float]]]

    @field_validator("turns")
    @classmethod
    def _parse_turns(cls, value):
        if isinstance(value, list):
            return [_check_turns(t) for t in value]
        return _check_turns(value)


class CocycleConfig(_Strict):
    kind: Literal["trivial", "theta", "section", "table"] = "trivial"
    theta: Optional[Union[str, float]] = None
    extension: Literal["sl2z"] = "sl2z"
    table: List[CocycleEntryConfig] = Field(default_factory=list)
    perturb: Optional[PerturbationConfig] = None

    @field_validator("theta")
    @classmethod
    def _parse_theta(cls, value):
        if value is None or isinstance(value, float):
            return value
        try:
            Fraction(str(value).strip())
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"θ must be p/q or a decimal, got {value!r}")
        return str(value).strip()

    @model_validator(mode="after")
    def _check_theta(self):
        if self.kind == "theta" and self.theta is None:
            raise ValueError("A theta cocycle needs θ")
        if self.kind == "table" and not self.table:
            raise ValueError("A table cocycle needs at least one entry")
        return self


class SystemConfig(_Strict):
    """The section cocycle builds its own group and algebra; `group`/`algebra` are then ignored."""

    name: Optional[str] = None
    algebra: List[int] = Field(default_factory=lambda: [1])
    group: Optional[GroupConfig] = None
    action: ActionConfig = Field(default_factory=ActionConfig)
    cocycle: CocycleConfig = Field(default_factory=CocycleConfig)

    @model_validator(mode="after")
    def _check_group(self):
        if self.cocycle.kind != "section" and self.group is None:
            raise ValueError("The system block needs a group")
        if any(d < 1 for d in self.algebra):
            raise ValueError(f"Algebra block dimensions must be >= 1, got {self.algebra}")
        return self


class OutputConfig(_Strict):
    dir: Optional[str] = None
    stem: Optional[str] = None
    csv: bool = True


class ExperimentConfig(_Strict):
    experiment: Literal[EXPERIMENT_TAGS]
    seed: int
    description: Optional[str] = None
    system: Optional[SystemConfig] = None
    parameters: Dict[str, Any] = Field(default_factory=dict)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @model_validator(mode="after")
    def _check_system(self):
        if self.experiment != "psl-preset" and self.system is None:
            raise ValueError(f"Experiment {self.experiment} needs a system block")
        return self

    def stem(self, source: Optional[Path] = None) -> str:
        if self.output.stem:
            return self.output.stem
        return source.stem if source is not None else self.experiment


def resolve_config_path(name: str) -> Path:
    """A config path, or the name of a shipped preset."""
    path = Path(name)
    if path.exists():
        return path
    preset = PRESETS_DIR / f"{name}.yaml"
    if preset.exists():
        return preset
    raise ValueError(f"No config file or preset named {name!r}")


def load_config(name: str) -> ExperimentConfig:
    path = resolve_config_path(name)
    with open(path) as f:
        raw = yaml.safe_load(f)
    if not isinstance(raw, dict):
        raise ValueError(f"{path} does not hold a key/value experiment config")
    config = ExperimentConfig.model_validate(raw)
    logger.info(f"Loaded {config.experiment} config from {path}")
    return config


def list_presets() -> List[Dict[str, str]]:
    presets = []
    for path in sorted(PRESETS_DIR.glob("*.yaml")):
        with open(path) as f:
            raw = yaml.safe_load(f) or {}
        presets.append(
            {"name": path.stem, "experiment": str(raw.get("experiment", "?")), "description": str(raw.get("description") or "")}
        )
    return presets
