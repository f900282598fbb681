"""Experiment configuration schema.

A config file is YAML with an optional master ``seed`` and a list of
``experiments``; each entry has an ``id`` and a ``kind`` plus
kind-specific fields.  Rationals may be written as numbers or as strings
such as ``"1/3"``.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..particle_system import RateField


def _to_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, bool):
        raise ValueError("expected a number")
    try:
        return Fraction(str(v).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational number: {v!r}") from exc


Rational = Annotated[Fraction, BeforeValidator(_to_fraction)]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)


# -- rate fields ------------------------------------------------------------

class ConstantRates(_Model):
    preset: Literal["constant"]
    rate: float = Field(1.0, ge=0)

    def build(self) -> RateField:
        return RateField.constant(self.rate)


class SinusoidalRates(_Model):
    preset: Literal["sinusoidal"]
    base: float = Field(ge=0)
    amplitude: float
    frequency: float = 1.0
    phase: float = 0.0

    def build(self) -> RateField:
        return RateField.sinusoidal(self.base, self.amplitude, self.frequency, self.phase)


class SplitSinusoidRates(_Model):
    """Separate ``base + amplitude * sin(frequency t + phase)`` left and right of ``z0``."""

    preset: Literal["split-sinusoid"]
    z0: int = 0
    left_base: float
    left_amplitude: float = 0.0
    right_base: float
    right_amplitude: float = 0.0
    frequency: float = 1.0
    phase: float = 0.0

    def build(self) -> RateField:
        return RateField.split_sinusoid(self.z0, self.left_base, self.left_amplitude, self.right_base,
                                        self.right_amplitude, self.frequency, self.phase)


class StepInSpaceRates(_Model):
    preset: Literal["step-in-space"]
    left: float = Field(ge=0)
    right: float = Field(ge=0)
    z0: int = 0

    def build(self) -> RateField:
        return RateField.step_in_space(self.left, self.right, self.z0)


class TwoSpeedRates(_Model):
    preset: Literal["two-speed"]
    slow: float = Field(ge=0)
    fast: float = Field(ge=0)
    switch_time: float = Field(ge=0)
    z0: Optional[int] = None

    def build(self) -> RateField:
        return RateField.two_speed(self.slow, self.fast, self.switch_time, self.z0)


class PiecewiseRates(_Model):
    preset: Literal["piecewise"]
    breakpoints: List[float]
    values: List[float]
    values_right: Optional[List[float]] = None
    z0: int = 0

    @model_validator(mode="after")
    def _lengths(self):
        n = len(self.breakpoints) + 1
        if len(self.values) != n or (self.values_right is not None and len(self.values_right) != n):
            raise ValueError("need exactly one more value than breakpoints")
        if any(v < 0 for v in self.values + (self.values_right or [])):
            raise ValueError("rates must be nonnegative")
        return self

    def build(self) -> RateField:
        return RateField.piecewise_time(self.breakpoints, self.values, self.z0, self.values_right)


RatesSpec = Annotated[Union[ConstantRates, SinusoidalRates, SplitSinusoidRates, StepInSpaceRates,
                            TwoSpeedRates, PiecewiseRates], Field(discriminator="preset")]


# -- experiments ------------------------------------------------------------

class _Experiment(_Model):
    id: str = Field(min_length=1, pattern=r"^[A-Za-z0-9_.\-]+$")
    enabled: bool = True

    @property
    def monte_carlo(self) -> bool:
        return hasattr(self, "replicas")


class SymmetryExperiment(_Experiment):
    kind: Literal["symmetry"]
    n: int = Field(4, ge=2, le=6)
    cases: int = Field(100, ge=1)
    max_swaps: int = Field(6, ge=0)
    q_values: List[Rational] = [Fraction(0), Fraction(1, 3), Fraction(1)]
    denominator: int = Field(12, ge=1)


class RecursionExperiment(_Experiment):
    kind: Literal["recursion"]
    n: int = Field(4, ge=2, le=6)
    cases: int = Field(200, ge=1)
    invalid_cases: int = Field(20, ge=0)
    max_swaps: int = Field(6, ge=0)
    q_values: List[Rational] = [Fraction(0), Fraction(1, 3), Fraction(1)]
    denominator: int = Field(12, ge=1)


class AsepReversalExperiment(_Experiment):
    kind: Literal["asep-reversal"]
    window: Tuple[int, int] = (-20, 20)
    pre_swaps: List[int] = [-1, 0, 1]
    rates: RatesSpec
    t: float = Field(gt=0)
    q: float = Field(ge=0, le=1)
    replicas: int = Field(ge=10)
    site: int = 0
    alpha: float = Field(1e-3, gt=0, lt=1)
    max_discard_fraction: float = Field(1e-4, ge=0)

    @field_validator("window")
    @classmethod
    def _window(cls, v):
        if v[0] >= v[1]:
            raise ValueError("window must be (lo, hi) with lo < hi")
        return v


class DiagramSpec(_Model):
    outer: List[int] = Field(min_length=1)
    inner: List[int] = []


class S6vRotationExperiment(_Experiment):
    kind: Literal["s6v-rotation"]
    diagrams: List[DiagramSpec] = Field(min_length=1)
    q_values: List[Rational] = [Fraction(0), Fraction(1, 2)]
    denominator: int = Field(10, ge=1)
    draws: int = Field(1, ge=1)


class PerturbedStepExperiment(_Experiment):
    kind: Literal["perturbed-step"]
    perturbation: str = Field(description="colors of sites -L..L, e.g. '2,1,inf'")
    q: float = Field(ge=0, lt=1)
    t: float = Field(gt=0)
    replicas: int = Field(ge=10)
    xs: List[float] = [-0.25, 0.0, 0.25]
    ks: Optional[List[int]] = None
    tolerance: float = Field(0.03, gt=0)
    cdf_grid: int = Field(41, ge=0)


class InhomogeneousIdentityExperiment(_Experiment):
    kind: Literal["inhomogeneous-identity"]
    rates: RatesSpec
    tau: float = Field(gt=0)
    xs: List[int] = [-2, 0, 2]
    q: float = Field(ge=0, le=1)
    replicas: int = Field(ge=10)
    alpha: float = Field(1e-3, gt=0, lt=1)


class ShockIdentityExperiment(_Experiment):
    kind: Literal["shock-identity"]
    L: int = Field(ge=0)
    t: float = Field(gt=0)
    xs: List[int] = [-5, 0, 5]
    replicas: int = Field(ge=10)
    alpha: float = Field(1e-3, gt=0, lt=1)
    check_t0: bool = True


class HLMatchExperiment(_Experiment):
    kind: Literal["hl-match"]
    sign_string: str = Field(pattern=r"^\+[+\-]*-$")
    a: List[Rational]
    b: List[Rational]
    t_values: List[Rational] = [Fraction(0), Fraction(1, 2)]
    tolerance: float = Field(1e-10, gt=0)

    @model_validator(mode="after")
    def _counts(self):
        plus, minus = self.sign_string.count("+"), self.sign_string.count("-")
        if len(self.a) != plus or len(self.b) != minus:
            raise ValueError(f"sign string needs {plus} a-values and {minus} b-values")
        if any(v < 0 for v in self.a + self.b):
            raise ValueError("a and b must be nonnegative")
        if max(x * y for x in self.a for y in self.b) >= 1:
            raise ValueError("need a_i * b_j < 1")
        if any(not 0 <= t < 1 for t in self.t_values):
            raise ValueError("t must lie in [0, 1)")
        return self


class DensitySpotcheckExperiment(_Experiment):
    kind: Literal["density-spotcheck"]
    q: float = Field(ge=0, lt=1)
    t: float = Field(gt=0)
    replicas: int = Field(ge=10)
    site: int = 0
    tolerance: float = Field(0.02, gt=0)


Experiment = Annotated[Union[SymmetryExperiment, RecursionExperiment, AsepReversalExperiment,
                             S6vRotationExperiment, PerturbedStepExperiment, InhomogeneousIdentityExperiment,
                             ShockIdentityExperiment, HLMatchExperiment, DensitySpotcheckExperiment],
                       Field(discriminator="kind")]

KIND_DESCRIPTIONS = {
    "symmetry": "exact f(e->pi) = f~(e->pi^-1) over random swap words",
    "recursion": "exact one-step recursion, plus rejection of invalid inputs",
    "asep-reversal": "chi-square: ASEP coloring vs. inverse of the time-reversed process",
    "s6v-rotation": "exact law of pi(S) vs. inverse law on the rotated diagram",
    "perturbed-step": "second class particle CDFs at time t vs. the Bernoulli-recipe limit",
    "inhomogeneous-identity": "second class CDF vs. reversed-rate step density at the origin",
    "shock-identity": "TASEP shock second class CDF vs. step-IC particle counts",
    "hl-match": "colored corner heights vs. rim heights vs. Hall-Littlewood lengths",
    "density-spotcheck": "step-IC occupation and neighbor correlation at a site",
}


class RunConfig(_Model):
    seed: int = Field(0, ge=0)
    experiments: List[Experiment] = Field(min_length=1)

    @model_validator(mode="after")
    def _unique_ids(self):
        ids = [e.id for e in self.experiments]
        dup = sorted({i for i in ids if ids.count(i) > 1})
        if dup:
            raise ValueError(f"duplicate experiment ids: {', '.join(dup)}")
        return self


class ConfigError(Exception):
    """Invalid configuration; the message names the offending field."""


def format_validation_error(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "\n".join(lines)


def parse_config(data) -> RunConfig:
    if isinstance(data, dict) and "experiments" not in data and "kind" in data:
        data = {"seed": data.pop("seed", 0), "experiments": [data]}
    try:
        return RunConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(format_validation_error(err)) from None


def load_config(path: Path) -> RunConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as err:
        raise ConfigError(f"<file>: not valid YAML ({err})") from None
    return parse_config(data)
