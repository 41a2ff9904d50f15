"""Monotonic substitution charts and the conjugation operator they induce.

A chart packages an increasing function phi with its derivative and inverse
on an interval [a, b].  Operators "with respect to phi" are conjugations of
the corresponding base operators by composition with phi.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams, UnknownPreset


@dataclass(frozen=True)
class PhiChart:
    """Increasing C^1 chart on [a, b] (b may be inf for transform work).

    phi, dphi and inv must accept numpy arrays.  Decreasing charts are
    rejected: all sign conventions assume dphi > 0.
    """

    phi: object
    dphi: object
    inv: object
    a: float
    b: float
    name: str = "custom"
    increasing: bool = True
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.increasing:
            raise InvalidParams("decreasing charts are not supported")
        if not self.a < self.b:
            raise InvalidParams("chart interval must satisfy a < b")

    @property
    def span(self) -> float:
        """phi(b) - phi(a); inf when b is unbounded."""
        if math.isinf(self.b):
            return math.inf
        return float(self.phi(self.b) - self.phi(self.a))

    def offset(self, x):
        """phi(x) - phi(a), the natural series variable."""
        return self.phi(x) - self.phi(self.a)

    def validate(self, samples: int = 1000) -> None:
        """Sample-check monotonicity and inverse consistency on the interior."""
        hi = self.b if math.isfinite(self.b) else self.a + 10.0
        # interior points only; presets like power charts may have dphi = 0
        # exactly at an endpoint
        t = (np.arange(samples) + 0.5) / samples
        xs = self.a + (hi - self.a) * t
        d = np.asarray(self.dphi(xs), dtype=float)
        if not np.all(d > 0.0):
            raise InvalidParams(f"chart {self.name!r} has non-positive dphi on ({self.a}, {hi})")
        back = np.asarray(self.inv(self.phi(xs)), dtype=float)
        scale = np.maximum(np.abs(xs), 1.0)
        if not np.all(np.abs(back - xs) <= 1e-12 * scale):
            raise InvalidParams(f"chart {self.name!r} inverse round trip exceeds 1e-12")


def make_phi_preset(name: str, params: dict | None = None) -> PhiChart:
    """Chart presets: identity, affine, log, log1p, power, exp."""
    params = dict(params or {})
    a = float(params.get("a", 0.0))
    b = float(params.get("b", 1.0))
    if name == "identity":
        return PhiChart(lambda x: np.asarray(x, dtype=float),
                        lambda x: np.ones_like(np.asarray(x, dtype=float)),
                        lambda y: np.asarray(y, dtype=float),
                        a, b, "identity")
    if name == "affine":
        k = float(params.get("slope", 1.0))
        c = float(params.get("intercept", 0.0))
        if k <= 0:
            raise InvalidParams("affine chart needs slope > 0")
        return PhiChart(lambda x: k * np.asarray(x, dtype=float) + c,
                        lambda x: np.full_like(np.asarray(x, dtype=float), k),
                        lambda y: (np.asarray(y, dtype=float) - c) / k,
                        a, b, "affine")
    if name == "log":
        if a <= 0:
            raise InvalidParams("log chart needs a > 0")
        return PhiChart(np.log,
                        lambda x: 1.0 / np.asarray(x, dtype=float),
                        np.exp,
                        a, b, "log")
    if name == "log1p":
        if a <= -1:
            raise InvalidParams("log1p chart needs a > -1")
        return PhiChart(np.log1p,
                        lambda x: 1.0 / (1.0 + np.asarray(x, dtype=float)),
                        np.expm1,
                        a, b, "log1p")
    if name == "power":
        sigma = float(params.get("sigma", 2.0))
        if sigma <= 0:
            raise InvalidParams("power chart needs sigma > 0")
        if a < 0:
            raise InvalidParams("power chart needs a >= 0")
        return PhiChart(lambda x: np.asarray(x, dtype=float) ** sigma,
                        lambda x: sigma * np.asarray(x, dtype=float) ** (sigma - 1.0),
                        lambda y: np.asarray(y, dtype=float) ** (1.0 / sigma),
                        a, b, "power")
    if name == "exp":
        lam = float(params.get("lambda", params.get("lam", 1.0)))
        if lam <= 0:
            raise InvalidParams("exp chart needs lambda > 0")
        return PhiChart(lambda x: np.expm1(lam * np.asarray(x, dtype=float)),
                        lambda x: lam * np.exp(lam * np.asarray(x, dtype=float)),
                        lambda y: np.log1p(np.asarray(y, dtype=float)) / lam,
                        a, b, "exp")
    raise UnknownPreset(f"unknown chart preset {name!r}")


def conjugate_apply(chart: PhiChart, base_op, u) -> "object":
    """Conjugate a base operator by the chart: x -> (base_op(u o inv))(phi(x)).

    ``base_op`` maps a function of one real variable to another; it must be
    defined on [phi(a), phi(b)].
    """
    from .functions import TestFunction

    inner = base_op(lambda y: u(chart.inv(y)))

    def fn(x):
        return inner(chart.phi(x))

    return TestFunction.from_callable(fn)
