import enum
from decimal import Decimal
from fractions import Fraction

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_serializer,
    field_validator,
    model_validator,
)

SIGMA_DIGITS = 2


def to_fraction(value) -> Fraction:
    """Exact rational from '0.25', '2/15', Decimal, int or a float's shortest repr."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, (int, Decimal)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot read {value!r} as an exact number")


def fraction_text(value: Fraction) -> str:
    """Decimal text when the value terminates, 'p/q' otherwise."""
    places = decimal_places(value)
    if places is None:
        return f"{value.numerator}/{value.denominator}"
    if places == 0:
        return str(value.numerator)
    scaled = abs(value.numerator) * 10**places // value.denominator
    sign = "-" if value < 0 else ""
    digits = str(scaled).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def decimal_places(value: Fraction) -> int | None:
    """Digits after the decimal point (trailing zeros excluded); None if non-terminating."""
    denominator = value.denominator
    twos = fives = 0
    while denominator % 2 == 0:
        denominator //= 2
        twos += 1
    while denominator % 5 == 0:
        denominator //= 5
        fives += 1
    if denominator != 1:
        return None
    return max(twos, fives)


class ValueRecord(BaseModel):
    """One data value x with its group densities rho_g(x) and Bayes probability sigma(x)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    id: str
    rho1: Fraction
    rho2: Fraction
    sigma: Fraction

    @field_validator("rho1", "rho2", "sigma", mode="before")
    @classmethod
    def _parse_exact(cls, value):
        return to_fraction(value)

    @field_validator("rho1", "rho2", "sigma")
    @classmethod
    def _check_unit_interval(cls, value):
        if not 0 <= value <= 1:
            raise ValueError(f"{value} lies outside [0, 1]")
        return value

    @field_serializer("rho1", "rho2", "sigma")
    def _write_exact(self, value: Fraction) -> str:
        return fraction_text(value)


class FullInfoInstance(BaseModel):
    """
    A full-information LDA problem over finitely many data values.

    `digits` is the decimal precision of the densities; rational instances built
    by the Subset-Sum reduction have no decimal precision and carry None.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: list[ValueRecord] = Field(min_length=1)
    lam: Fraction
    baseline: list[str]
    digits: int | None = None

    @field_validator("lam", mode="before")
    @classmethod
    def _parse_lam(cls, value):
        return to_fraction(value)

    @field_validator("lam")
    @classmethod
    def _check_lam(cls, value):
        if value <= 0:
            raise ValueError("lambda must be positive")
        return value

    @field_validator("baseline")
    @classmethod
    def _sort_baseline(cls, value):
        return sorted(set(value))

    @field_serializer("lam")
    def _write_lam(self, value: Fraction) -> str:
        return fraction_text(value)

    @model_validator(mode="after")
    def _check_instance(self):
        ids = [value.id for value in self.values]
        if len(set(ids)) != len(ids):
            raise ValueError("value ids must be unique")
        for density in ("rho1", "rho2"):
            total = sum(getattr(value, density) for value in self.values)
            if total != 1:
                raise ValueError(f"{density} sums to {total}, not 1")
        unknown = set(self.baseline) - set(ids)
        if unknown:
            raise ValueError(f"baseline names unknown values {sorted(unknown)}")
        if self.digits is not None:
            for value in self.values:
                for density in (value.rho1, value.rho2):
                    if (density * 10**self.digits).denominator != 1:
                        raise ValueError(
                            f"{value.id}: density {density} has more than {self.digits} decimals"
                        )
                if (value.sigma * 10**SIGMA_DIGITS).denominator != 1:
                    raise ValueError(
                        f"{value.id}: sigma {value.sigma} has more than {SIGMA_DIGITS} decimals"
                    )
        return self

    @property
    def ids(self) -> list[str]:
        return [value.id for value in self.values]


class ValueScores(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    id: str
    d: Fraction
    u: Fraction


class LdaStatus(str, enum.Enum):
    FOUND = "found"
    NONE_EXISTS = "none_exists"
    NOT_FOUND_AT_EPSILON = "not_found_at_epsilon"


class LdaSolution(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    status: LdaStatus
    selection: list[str]
    delta: Fraction
    utility: Fraction
    baseline_delta: Fraction
    baseline_utility: Fraction
    algorithm: str
    note: str | None = None

    @field_serializer("delta", "utility", "baseline_delta", "baseline_utility")
    def _write_number(self, value: Fraction) -> float:
        return float(value)


class SubsetSumInstance(BaseModel):
    """Integers W; the question is whether a nonempty subset sums to 0."""

    model_config = ConfigDict(frozen=True)

    weights: list[int] = Field(min_length=1)

    @field_validator("weights")
    @classmethod
    def _check_nonzero(cls, value):
        if 0 in value:
            raise ValueError("zero weights trivialize the instance")
        return value


class InstanceSidecar(BaseModel):
    """The JSON written next to an instance CSV."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lam: str = Field(alias="lambda")
    baseline: list[str]
    digits: int | None = None
