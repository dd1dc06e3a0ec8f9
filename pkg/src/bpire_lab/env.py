"""Parametric i.i.d. random-environment families.

One environment step is a pair (offspring law, immigration law). The
offspring law is fractional-linear (geometric on {0,1,...} with success
parameter q), so its log conditional mean is x = ln((1-q)/q) and sums of
offspring can be drawn as single negative-binomial variates. Immigration
is Poisson, so mu equals the rate. The step law is driven by the law of
x: we draw x from a named family and couple q = 1/(1+e^x), which keeps
the law of x exactly the declared family.

Shipped x families:

* ``normal``  -- Normal(0, sigma^2); stable index 2, positivity 1/2.
* ``pareto``  -- symmetric two-sided Pareto, density (a/2)|x|^{-a-1} on
  |x| >= 1, tail index a in (0, 2); positivity 1/2.

Shipped rate families: ``constant`` and ``lognormal``. Both have finite
(ln^+ rate)^p moments of every order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "OffspringLaw",
    "ImmigrationLaw",
    "EnvironmentStep",
    "EnvironmentModel",
    "EnvSteps",
    "ValidationCheck",
    "ValidationReport",
    "InvalidModelError",
    "normal_model",
    "pareto_model",
    "draw_step",
    "draw_steps",
    "log_mean",
    "immigration_mean",
    "validate_model",
]

X_FAMILIES = ("normal", "pareto")
RATE_FAMILIES = ("constant", "lognormal")


class InvalidModelError(ValueError):
    """Raised when an environment model fails validation."""


@dataclass(frozen=True)
class OffspringLaw:
    """Fractional-linear (geometric) offspring law.

    ``q`` is the success parameter of a geometric law on {0, 1, ...};
    the mean number of offspring is (1-q)/q.
    """

    q: float
    family: str = "geometric"

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise InvalidModelError(f"offspring q must lie in (0,1), got {self.q}")

    @property
    def mean(self) -> float:
        return (1.0 - self.q) / self.q


@dataclass(frozen=True)
class ImmigrationLaw:
    """Poisson immigration law with rate ``rate`` > 0."""

    rate: float
    family: str = "poisson"

    def __post_init__(self):
        if not (self.rate > 0.0 and math.isfinite(self.rate)):
            raise InvalidModelError(f"immigration rate must be positive finite, got {self.rate}")

    @property
    def mean(self) -> float:
        return self.rate


@dataclass(frozen=True)
class EnvironmentStep:
    """One realized environment step.

    ``x`` is the log mean of the offspring law and ``mu`` the expected
    number of immigrants; both are redundant with the laws themselves but
    kept explicit because every downstream computation runs on them.
    """

    offspring: OffspringLaw
    immigration: ImmigrationLaw
    x: float
    mu: float


@dataclass(frozen=True)
class EnvSteps:
    """A batch of realized steps in array form (the sampler workhorse)."""

    x: np.ndarray
    mu: np.ndarray

    def __len__(self) -> int:
        return len(self.x)

    @property
    def q(self) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(self.x))


@dataclass(frozen=True)
class EnvironmentModel:
    """Declared law of one environment step.

    Fields:
        x_family: name of the law of the offspring log mean.
        x_param: sigma for ``normal``, tail index for ``pareto``.
        rate_family: name of the law of the immigration rate.
        rate_params: (value,) for ``constant``; (m, s) for ``lognormal``
            meaning exp(Normal(m, s^2)).
        alpha: declared stable index in (0, 2].
        rho: declared positivity parameter in (0, 1).
        eps: moment-condition exponent slack, > 0.
    """

    x_family: str = "normal"
    x_param: float = 1.0
    rate_family: str = "constant"
    rate_params: tuple = (2.0,)
    alpha: float = 2.0
    rho: float = 0.5
    eps: float = 1.0

    def draw_x(self, rng: np.random.Generator, size=None) -> np.ndarray:
        if self.x_family == "normal":
            return rng.normal(0.0, self.x_param, size)
        if self.x_family == "pareto":
            sign = rng.choice([-1.0, 1.0], size)
            return sign * rng.uniform(0.0, 1.0, size) ** (-1.0 / self.x_param)
        raise InvalidModelError(f"unknown x family {self.x_family!r}")

    def draw_rate(self, rng: np.random.Generator, size=None) -> np.ndarray:
        if self.rate_family == "constant":
            value = self.rate_params[0]
            return np.full(size, value) if size is not None else value
        if self.rate_family == "lognormal":
            m, s = self.rate_params
            return np.exp(rng.normal(m, s, size))
        raise InvalidModelError(f"unknown rate family {self.rate_family!r}")

    def mean_rate(self) -> float:
        if self.rate_family == "constant":
            return float(self.rate_params[0])
        m, s = self.rate_params
        return math.exp(m + 0.5 * s * s)

    def stable_scale(self) -> float:
        """Scale c such that walk sums obey S_n / (c n^{1/alpha}) -> W(1).

        W(1) is the standard strictly stable variate produced by
        :func:`bpire_lab.limit.stable_standard` (characteristic function
        exp(-|t|^alpha) in the symmetric case; Normal(0, 2) at alpha=2).
        For ``normal`` steps, S_n ~ Normal(0, sigma^2 n), so c = sigma/sqrt(2).
        For ``pareto`` steps with tail P(|X|>x) = x^{-a}, the classical
        tail-to-scale constant is c = (Gamma(2-a) cos(pi a/2) / (1-a))^{1/a},
        with the a=1 limit pi/2.
        """
        if self.x_family == "normal":
            return self.x_param / math.sqrt(2.0)
        a = self.x_param
        if abs(a - 1.0) < 1e-12:
            return math.pi / 2.0
        c_a = math.gamma(2.0 - a) * math.cos(math.pi * a / 2.0) / (1.0 - a)
        return c_a ** (1.0 / a)


def normal_model(sigma: float = 1.0, rate: float = 2.0, eps: float = 1.0) -> EnvironmentModel:
    """Normal(0, sigma^2) log-mean steps with constant Poisson rate."""
    return EnvironmentModel(
        x_family="normal", x_param=sigma, rate_family="constant",
        rate_params=(rate,), alpha=2.0, rho=0.5, eps=eps,
    )


def pareto_model(alpha: float, rate: float = 2.0, eps: float = 1.0) -> EnvironmentModel:
    """Symmetric two-sided Pareto log-mean steps with tail index alpha."""
    return EnvironmentModel(
        x_family="pareto", x_param=alpha, rate_family="constant",
        rate_params=(rate,), alpha=alpha, rho=0.5, eps=eps,
    )


def draw_step(model: EnvironmentModel, rng: np.random.Generator) -> EnvironmentStep:
    """Draw one environment step; q is coupled to x as q = 1/(1+e^x)."""
    x = float(model.draw_x(rng))
    lam = float(model.draw_rate(rng))
    q = 1.0 / (1.0 + math.exp(x))
    return EnvironmentStep(
        offspring=OffspringLaw(q=q),
        immigration=ImmigrationLaw(rate=lam),
        x=x,
        mu=lam,
    )


def draw_steps(model: EnvironmentModel, n: int, rng: np.random.Generator) -> EnvSteps:
    """Draw ``n`` i.i.d. steps as arrays."""
    x = model.draw_x(rng, n)
    mu = np.asarray(model.draw_rate(rng, n), dtype=float)
    return EnvSteps(x=np.asarray(x, dtype=float), mu=mu)


def log_mean(step: EnvironmentStep) -> float:
    """ln((1-q)/q) of the step's offspring law."""
    q = step.offspring.q
    return math.log((1.0 - q) / q)


def immigration_mean(step: EnvironmentStep) -> float:
    """Expected number of immigrants under the step's immigration law."""
    return step.immigration.rate


@dataclass(frozen=True)
class ValidationCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)


def validate_model(model: EnvironmentModel, strict: bool = False) -> ValidationReport:
    """Check a model against the structural hypotheses.

    Confirms finite positive offspring/immigration means by construction,
    consistency of the declared (alpha, rho) with the x family (both
    shipped families are symmetric, hence rho = 1/2 and the limit law is
    two-sided), and the moment condition E(ln^+ mu)^{alpha+eps} < inf,
    which holds analytically for constant and lognormal rates.

    With ``strict=True`` raises :class:`InvalidModelError` on any failing
    check instead of returning the report.
    """
    checks: list[ValidationCheck] = []

    def add(name, passed, detail=""):
        checks.append(ValidationCheck(name, bool(passed), detail))

    add("x family known", model.x_family in X_FAMILIES, model.x_family)
    add("rate family known", model.rate_family in RATE_FAMILIES, model.rate_family)
    add("eps positive", model.eps > 0, f"eps={model.eps}")

    if model.x_family == "normal":
        add("x scale positive", model.x_param > 0, f"sigma={model.x_param}")
        add("alpha matches family", model.alpha == 2.0,
            f"normal family has stable index 2, declared {model.alpha}")
    elif model.x_family == "pareto":
        add("tail index in (0,2)", 0.0 < model.x_param < 2.0, f"alpha={model.x_param}")
        add("alpha matches family", model.alpha == model.x_param,
            f"declared {model.alpha}, family tail index {model.x_param}")

    # Both shipped families are symmetric: the attracting stable law is
    # two-sided (not one-sided) and the positivity parameter is 1/2.
    add("rho in (0,1)", 0.0 < model.rho < 1.0, f"rho={model.rho}")
    add("rho matches symmetric family", model.rho == 0.5,
        f"symmetric x family forces rho=1/2, declared {model.rho}")
    add("limit law two-sided", 0.0 < model.rho < 1.0,
        "rho in the open interval excludes one-sided limits")

    if model.rate_family == "constant":
        value = model.rate_params[0]
        add("rate positive finite", value > 0 and math.isfinite(value), f"rate={value}")
        add("moment condition", value > 0 and math.isfinite(value),
            "constant rate has bounded ln^+, all moments finite")
    elif model.rate_family == "lognormal":
        ok = len(model.rate_params) == 2 and model.rate_params[1] >= 0
        add("rate params well-formed", ok, str(model.rate_params))
        add("moment condition", ok,
            "ln^+ of a lognormal rate is a truncated normal: all moments finite")

    report = ValidationReport(checks=checks)
    if strict and not report.ok:
        failed = "; ".join(f"{c.name}: {c.detail}" for c in report.checks if not c.passed)
        raise InvalidModelError(failed)
    return report
