"""Value-with-error records and estimator configuration."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

from .errors import InvalidParameter

METHODS = ("analytic", "monte_carlo", "quadrature")
INNER_METHODS = ("auto", "analytic", "monte_carlo", "pullback", "superset")
OUTER_METHODS = ("auto", "uniform", "stratified", "quadrature")


@dataclass(frozen=True)
class MeasureEstimate:
    """A measure value with its standard error.

    ``std_error`` is zero for analytic answers.  Monte Carlo answers carry the
    sample standard error (which is also zero in the degenerate case where
    every sample evaluated exactly to the same value).
    """

    value: float
    std_error: float = 0.0
    n_samples: int = 0
    method: str = "analytic"

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameter(f"unknown estimate method {self.method!r}")
        if not self.std_error >= 0:
            raise InvalidParameter("std_error must be nonnegative")
        if self.method == "analytic" and self.std_error != 0:
            raise InvalidParameter("analytic estimates have zero std_error")

    def ci(self, z: float = 1.96) -> tuple[float, float]:
        return (self.value - z * self.std_error, self.value + z * self.std_error)

    def scaled(self, c: float) -> "MeasureEstimate":
        return replace(self, value=c * self.value, std_error=abs(c) * self.std_error)

    def __add__(self, other: "MeasureEstimate") -> "MeasureEstimate":
        method = self.method if self.method == other.method else "monte_carlo"
        if method == "analytic" and (self.std_error or other.std_error):
            method = "monte_carlo"
        return MeasureEstimate(self.value + other.value, math.hypot(self.std_error, other.std_error),
                               self.n_samples + other.n_samples, method)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EstimatorConfig:
    """Budgets, seed and r schedule shared by all estimators.

    ``r0=None`` means one tenth of the surface feature scale.
    """

    outer: int = 4096
    inner: int = 4096
    seed: int = 0
    r0: float | None = None
    ratio: float = 0.5
    count: int = 7
    budget: int = 100_000
    inner_method: str = "auto"
    outer_method: str = "auto"
    workers: int = 1
    chi2_quantile: float = 0.999
    quad_limit: int = 200
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("outer", "inner", "count", "budget", "workers"):
            if int(getattr(self, name)) < 1:
                raise InvalidParameter(f"{name} must be >= 1")
        if not (0 < self.ratio < 1):
            raise InvalidParameter("ratio must lie in (0, 1)")
        if self.r0 is not None and not self.r0 > 0:
            raise InvalidParameter("r0 must be positive")
        if self.inner_method not in INNER_METHODS:
            raise InvalidParameter(f"inner_method must be one of {INNER_METHODS}")
        if self.outer_method not in OUTER_METHODS:
            raise InvalidParameter(f"outer_method must be one of {OUTER_METHODS}")

    def with_(self, **kw) -> "EstimatorConfig":
        return replace(self, **kw)

    def schedule(self, feature_scale: float) -> list[float]:
        r0 = self.r0 if self.r0 is not None else feature_scale / 10.0
        return [r0 * self.ratio ** j for j in range(self.count)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        return d
