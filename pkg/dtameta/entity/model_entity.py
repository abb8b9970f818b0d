from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

from dtameta.constant.meta_pipeline import (
    COPULA_CLAYTON_THETA_MAX,
    ESTIMATION_START_GAMMA,
    ESTIMATION_START_SIGMA,
)
from dtameta.exception import DomainError, ValidationError


class CopulaFamily(str, Enum):
    BVN = "bvn"
    FRANK = "frank"
    CLAYTON = "clayton"


class MarginKind(str, Enum):
    NORMAL_LOGIT = "normal"
    BETA = "beta"


class Variant(str, Enum):
    COPULA_MIXED = "copula_mixed"
    KHS = "khs"
    SARMANOV = "sarmanov"


ROTATIONS = (0, 90, 180, 270)


@dataclass(frozen=True)
class StudyRecord:
    """One study's 2x2 table: y1 true positives out of n1 diseased, y2 true negatives out of n2 healthy."""
    y1: int
    n1: int
    y2: int
    n2: int

    def __post_init__(self):
        for name in ("y1", "n1", "y2", "n2"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ValidationError(f"{name}={value!r} is not an integer count")
        if self.n1 < 1 or self.n2 < 1:
            raise ValidationError(f"empty study arm (n1={self.n1}, n2={self.n2})")
        if not 0 <= self.y1 <= self.n1 or not 0 <= self.y2 <= self.n2:
            raise ValidationError(
                f"counts out of range: y1={self.y1}, n1={self.n1}, y2={self.y2}, n2={self.n2}")

    @property
    def false_negatives(self) -> int:
        return self.n1 - self.y1

    @property
    def false_positives(self) -> int:
        return self.n2 - self.y2


@dataclass
class Dataset:
    name: str
    studies: list
    source: Optional[str] = None
    # study identifiers in file order; empty when the studies were generated
    labels: tuple = ()

    def __post_init__(self):
        if len(self.studies) < 1:
            raise ValidationError(f"dataset {self.name!r} holds no studies")
        if self.labels and len(self.labels) != len(self.studies):
            raise ValidationError(f"dataset {self.name!r} has {len(self.labels)} labels for {len(self.studies)} studies")
        self.labels = tuple(str(label) for label in self.labels)

    def __len__(self) -> int:
        return len(self.studies)


def study_arrays(studies) -> tuple:
    """(y1, n1, y2, n2) integer arrays in study order."""
    table = np.array([(s.y1, s.n1, s.y2, s.n2) for s in studies], dtype=np.int64).reshape(-1, 4)
    return table[:, 0], table[:, 1], table[:, 2], table[:, 3]


@dataclass(frozen=True)
class CopulaSpec:
    family: CopulaFamily
    rotation: int = 0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "family", CopulaFamily(self.family))
        object.__setattr__(self, "theta", float(self.theta))
        if self.rotation not in ROTATIONS:
            raise DomainError(f"rotation must be one of {ROTATIONS}, got {self.rotation}")
        if self.family is not CopulaFamily.CLAYTON and self.rotation != 0:
            raise DomainError(f"{self.family.value} copula takes no rotation, got {self.rotation}")
        if not np.isfinite(self.theta):
            raise DomainError(f"{self.label} theta must be finite, got {self.theta}")
        if self.family is CopulaFamily.BVN and abs(self.theta) > 1.0:
            raise DomainError(f"BVN theta must lie in [-1, 1], got {self.theta}")
        if self.family is CopulaFamily.CLAYTON and not 0.0 <= self.theta <= COPULA_CLAYTON_THETA_MAX:
            raise DomainError(
                f"{self.label} theta must lie in [0, {COPULA_CLAYTON_THETA_MAX:g}], got {self.theta}")

    @property
    def label(self) -> str:
        if self.family is CopulaFamily.CLAYTON:
            return f"clayton{self.rotation}"
        return self.family.value

    @property
    def negative_dependence(self) -> bool:
        """True for the rotations that can only model tau <= 0."""
        return self.rotation in (90, 270)

    def with_theta(self, theta: float) -> "CopulaSpec":
        return replace(self, theta=theta)


@dataclass(frozen=True)
class MarginSpec:
    """Random-effects margin: NormalLogit(pi, sigma) on the logit scale or Beta(pi, gamma)."""
    kind: MarginKind
    pi: float
    scale: float

    def __post_init__(self):
        object.__setattr__(self, "kind", MarginKind(self.kind))
        if not 0.0 < self.pi < 1.0:
            raise DomainError(f"margin mean pi must lie in (0, 1), got {self.pi}")
        if self.kind is MarginKind.NORMAL_LOGIT and not self.scale > 0.0:
            raise DomainError(f"NormalLogit sigma must be positive, got {self.scale}")
        if self.kind is MarginKind.BETA and not 0.0 < self.scale < 1.0:
            raise DomainError(f"Beta dispersion gamma must lie in (0, 1), got {self.scale}")

    @property
    def scale_name(self) -> str:
        return "sigma" if self.kind is MarginKind.NORMAL_LOGIT else "gamma"


@dataclass(frozen=True)
class ModelSpec:
    margin1: MarginSpec
    margin2: MarginSpec
    copula: Optional[CopulaSpec] = None
    variant: Variant = Variant.COPULA_MIXED
    sarmanov_theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.variant in (Variant.KHS, Variant.SARMANOV):
            if self.margin1.kind is not MarginKind.BETA or self.margin2.kind is not MarginKind.BETA:
                raise DomainError(f"{self.variant.value} likelihood requires beta margins")
        if self.variant is not Variant.SARMANOV and self.copula is None:
            raise DomainError(f"{self.variant.value} model requires a copula")

    @property
    def label(self) -> str:
        if self.variant is Variant.SARMANOV:
            return "sarmanov"
        if self.variant is Variant.KHS:
            return f"khs-{self.copula.label}"
        return f"{self.margin1.kind.value}-{self.copula.label}"

    @property
    def parameter_names(self) -> tuple:
        scale = self.margin1.scale_name
        return ("pi1", "pi2", f"{scale}1", f"{scale}2", "theta")

    def parameter_vector(self) -> np.ndarray:
        dependence = self.sarmanov_theta if self.variant is Variant.SARMANOV else self.copula.theta
        return np.array([self.margin1.pi, self.margin2.pi, self.margin1.scale, self.margin2.scale, dependence])

    def with_parameters(self, values) -> "ModelSpec":
        """Same model structure at the original-scale vector (pi1, pi2, scale1, scale2, theta)."""
        pi1, pi2, scale1, scale2, theta = (float(v) for v in values)
        margin1 = MarginSpec(self.margin1.kind, pi1, scale1)
        margin2 = MarginSpec(self.margin2.kind, pi2, scale2)
        if self.variant is Variant.SARMANOV:
            return replace(self, margin1=margin1, margin2=margin2, sarmanov_theta=theta)
        return replace(self, margin1=margin1, margin2=margin2, copula=self.copula.with_theta(theta))


def copula_from_label(label: str, theta: float = 0.0) -> CopulaSpec:
    """'bvn', 'frank' or 'clayton<rotation>' to a CopulaSpec."""
    label = label.strip().lower()
    if label in (CopulaFamily.BVN.value, CopulaFamily.FRANK.value):
        return CopulaSpec(CopulaFamily(label), 0, theta)
    if label.startswith(CopulaFamily.CLAYTON.value):
        rotation = label[len(CopulaFamily.CLAYTON.value):] or "0"
        if not rotation.isdigit():
            raise DomainError(f"unknown copula {label!r}")
        return CopulaSpec(CopulaFamily.CLAYTON, int(rotation), theta)
    raise DomainError(f"unknown copula {label!r}")


def model_template(label: str) -> ModelSpec:
    """
    Model structure from its identifier, parameters at neutral placeholder values.

    Identifiers: '<margin>-<copula>' with margin normal|beta, 'khs-<copula>', 'sarmanov'.
    """
    label = label.strip().lower()
    beta = MarginSpec(MarginKind.BETA, 0.5, ESTIMATION_START_GAMMA)
    if label == Variant.SARMANOV.value:
        return ModelSpec(beta, beta, None, Variant.SARMANOV)
    head, _, copula_label = label.partition("-")
    if not copula_label:
        raise DomainError(f"model identifier {label!r} is not of the form <margin>-<copula>")
    copula = copula_from_label(copula_label)
    if head == Variant.KHS.value:
        return ModelSpec(beta, beta, copula, Variant.KHS)
    if head == MarginKind.BETA.value:
        return ModelSpec(beta, beta, copula)
    if head == MarginKind.NORMAL_LOGIT.value:
        normal = MarginSpec(MarginKind.NORMAL_LOGIT, 0.5, ESTIMATION_START_SIGMA)
        return ModelSpec(normal, normal, copula)
    raise DomainError(f"unknown margin {head!r} in model identifier {label!r}")
