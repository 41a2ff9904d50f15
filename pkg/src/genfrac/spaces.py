"""Weighted function-space norms and operator-norm bound constants.

The chart-weighted p-norm treats phi'(x) dx as the underlying measure; the
weighted sup norms multiply by (phi(x)-phi(a))^alpha before taking the max.
Bound constants come from the interval extent and the sup of the kernel (or
its reciprocal) over the relevant disc, estimated on the boundary circle.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .charts import PhiChart
from .errors import (
    DivergentNorm,
    InvalidParams,
    MissingDerivatives,
    NoConvergence,
    OutOfDisc,
    Unbounded,
)
from .functions import TestFunction, eval_monomials, powz
from .kernels import (
    DEFAULT_TRUNCATION,
    AnalyticKernel,
    SeriesAccumulator,
    TruncationPolicy,
    reciprocal_kernel,
)
from .operators import OperatorSpec, gfd_apply_monomials, gfi_apply_monomials


@dataclass(frozen=True)
class NormSpec:
    """Which norm: exponent p, chart, weight order, derivative count."""

    p: float
    chart: PhiChart
    alpha_weight: complex = 0.0
    m: int = 0
    grid_size: int = 256

    def __post_init__(self):
        if not 1.0 <= self.p < math.inf:
            raise InvalidParams("p must lie in [1, inf)")
        if self.grid_size < 16:
            raise InvalidParams("grid_size must be at least 16")


def lp_phi_norm(u, spec: NormSpec, tol: float = 1e-10) -> float:
    """(integral over [a,b] of |u|^p phi' dx)^(1/p) via y = phi(x)."""
    from .quadrature import adaptive_integrate

    chart = spec.chart
    lo = float(chart.phi(chart.a))
    hi = float(chart.phi(chart.b))

    def f(ys):
        vals = np.asarray(u(chart.inv(ys)), dtype=complex)
        return np.abs(vals) ** spec.p

    try:
        total = adaptive_integrate(f, lo, hi, tol)
    except NoConvergence:
        if _looks_divergent(f, lo, hi):
            raise DivergentNorm("weighted p-norm integral grows without bound")
        raise
    return float(abs(total) ** (1.0 / spec.p))


def _looks_divergent(f, lo: float, hi: float) -> bool:
    from .quadrature import adaptive_integrate

    vals = []
    for k in (3, 5, 7, 9):
        eps = (hi - lo) * 10.0 ** (-k)
        try:
            vals.append(abs(adaptive_integrate(f, lo + eps, hi - eps, 1e-6)))
        except NoConvergence:
            return True
    growth = [b - a for a, b in zip(vals, vals[1:])]
    return all(g > 0 for g in growth) and growth[-1] > 0.5 * growth[0] > 0


def _sample_points(a: float, b: float, n: int) -> np.ndarray:
    k = np.arange(1, n)
    cheb = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(math.pi * k / n)
    tail = a + (b - a) * 4.0 ** (-np.arange(1.0, 26.0))
    return np.unique(np.concatenate([cheb, tail, [b]]))


def c_alpha_phi_norm(u, spec: NormSpec) -> float:
    """max over (a, b] of |(phi(x)-phi(a))^alpha u(x)|, with local refinement."""
    chart = spec.chart
    alpha = complex(spec.alpha_weight)
    xs = _sample_points(chart.a, chart.b, spec.grid_size)

    def weighted(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        X = np.asarray(chart.offset(x), dtype=float)
        vals = np.abs(np.asarray(u(x), dtype=complex))
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(X > 0, X ** alpha.real, 0.0 if alpha.real > 0 else 1.0)
        return w * vals

    ws = weighted(xs)
    if not np.all(np.isfinite(ws)):
        raise Unbounded("weighted samples are not finite")
    # geometric tail toward the left endpoint: sustained growth means the
    # weight fails to tame u
    tail = weighted(chart.a + (chart.b - chart.a) * 4.0 ** (-np.arange(8.0, 26.0)))
    interior_scale = float(np.median(ws)) + 1e-30
    if np.all(np.diff(tail) > 0) and tail[-1] > 1e8 * interior_scale:
        raise Unbounded("weighted values diverge toward the left endpoint")
    best = int(np.argmax(ws))
    lo = xs[max(best - 1, 0)]
    hi = xs[min(best + 1, len(xs) - 1)]
    peak = _golden_max(lambda x: float(weighted(x)[0]), lo, hi)
    return max(float(ws[best]), peak)


def _golden_max(f, lo: float, hi: float, iters: int = 60) -> float:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - g * (hi - lo)
    x2 = lo + g * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + g * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - g * (hi - lo)
            f1 = f(x1)
        if hi - lo < 1e-13 * max(1.0, abs(hi)):
            break
    return max(f1, f2)


def sup_norm(f, a: float, b: float, n: int = 512) -> float:
    """max of |f| on [a, b] by dense sampling plus golden-section refinement."""
    xs = np.linspace(a, b, n)
    vals = np.abs(np.asarray(f(xs), dtype=complex))
    best = int(np.argmax(vals))
    lo = xs[max(best - 1, 0)]
    hi = xs[min(best + 1, n - 1)]
    peak = _golden_max(lambda x: abs(complex(np.atleast_1d(f(x))[0])), lo, hi)
    return max(float(vals[best]), peak)


def _ordinary_derivative(u: TestFunction, chart: PhiChart, k: int):
    """Ordinary k-th derivative of u as a callable, if available."""
    if k == 0:
        return u
    if u.derivatives is not None and len(u.derivatives) >= k:
        return u.derivatives[k - 1]
    if u.is_monomial_for(chart) and k == 1:
        terms = tuple((p - 1.0, c * p) for p, c in u.monomials if p != 0)

        def d1(x):
            x = np.atleast_1d(np.asarray(x, dtype=float))
            X = np.asarray(chart.offset(x), dtype=float)
            out = np.zeros(X.shape, dtype=complex)
            for p, c in terms:
                out += c * powz(X, p)
            return out * np.asarray(chart.dphi(x), dtype=float)

        return d1
    raise MissingDerivatives(f"ordinary derivative of order {k} is unavailable")


def c_m_alpha_phi_norm(u: TestFunction, spec: NormSpec) -> float:
    """sum of sup|u^(k)| for k < m plus the weighted sup of u^(m)."""
    if spec.m < 1:
        raise InvalidParams("m must be at least 1 for the C^m norm")
    chart = spec.chart
    total = 0.0
    for k in range(spec.m):
        dk = _ordinary_derivative(u, chart, k)
        total += sup_norm(dk, chart.a, chart.b)
    dm = _ordinary_derivative(u, chart, spec.m)
    hold = TestFunction.from_callable(dm) if not isinstance(dm, TestFunction) else dm
    return total + c_alpha_phi_norm(hold, spec)


# ---------------------------------------------------------------------------
# bound constants


def _circle_sup(coeff_fn, radius: float, n_terms: int, samples: int) -> float:
    """sup of |sum c_n tau^n| on |tau| = radius by dense boundary sampling."""
    coeffs = np.array([coeff_fn(n) for n in range(n_terms + 1)], dtype=complex)
    mags = np.abs(coeffs) * radius ** np.arange(n_terms + 1)
    keep = np.nonzero(mags > 1e-18 * max(mags.max(), 1e-300))[0]
    top = int(keep[-1]) + 1 if len(keep) else 1
    coeffs = coeffs[:top]
    theta = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)
    taus = radius * np.exp(1j * theta)
    vals = np.abs(np.polyval(coeffs[::-1], taus))
    best = int(np.argmax(vals))
    lo = theta[best] - 2.0 * math.pi / samples
    hi = theta[best] + 2.0 * math.pi / samples

    def f(th):
        return abs(np.polyval(coeffs[::-1], radius * cmath.exp(1j * th)))

    return max(float(vals[best]), _golden_max(f, lo, hi))


def _series_cutoff(kernel: AnalyticKernel, alpha, beta, radius: float,
                   trunc: TruncationPolicy) -> int:
    """Term count so that |a_n| radius^n falls below the tail tolerance."""
    acc = SeriesAccumulator(trunc, kernel.max_index_hint)
    n = 0
    for n in range(trunc.max_terms):
        if acc.add(abs(kernel.coeff(n, alpha, beta)) * radius ** n):
            break
    acc.require_converged(f"boundary sup series for {kernel.name}")
    return max(n, 1)


def bound_K(kernel: AnalyticKernel, alpha, beta, chart: PhiChart,
            samples: int = 4096, trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> float:
    """Norm bound of the integral operator on the chart-weighted L^p space.

    (span^Re(alpha) / Re(alpha)) * sup of |kernel| over the disc of radius
    span^Re(beta); by the maximum principle the sup sits on the boundary
    circle.
    """
    alpha = complex(alpha)
    beta = complex(beta)
    if not alpha.real > 0:
        raise InvalidParams("Re(alpha) must be positive")
    span = chart.span
    r = span ** beta.real
    if r >= kernel.radius:
        raise OutOfDisc(
            f"span^Re(beta) = {r:g} reaches the kernel disc radius {kernel.radius:g}"
        )
    if r == 0.0:
        sup = abs(kernel.coeff(0, alpha, beta))
    else:
        n_terms = _series_cutoff(kernel, alpha, beta, r, trunc)
        sup = _circle_sup(lambda n: kernel.coeff(n, alpha, beta), r, n_terms, samples)
    return span ** alpha.real / alpha.real * sup


def bound_M(kernel: AnalyticKernel, alpha, beta, m: int, chart: PhiChart,
            n_terms: int = 64, samples: int = 4096) -> float:
    """Norm bound of the derivative operator between the weighted sup spaces.

    (span^Re(m-alpha) / Re(m-alpha)) * sup of the reciprocal kernel over the
    disc of radius span^Re(beta), from its truncated series.
    """
    alpha = complex(alpha)
    beta = complex(beta)
    if not (m - alpha).real > 0:
        raise InvalidParams("Re(m - alpha) must be positive")
    span = chart.span
    r = span ** beta.real
    recip = reciprocal_kernel(kernel, alpha, beta, m, n_terms)
    if r >= recip.radius:
        raise OutOfDisc(
            f"span^Re(beta) = {r:g} reaches the reciprocal-kernel radius "
            f"estimate {recip.radius:g}"
        )
    if r == 0.0:
        sup = abs(recip.coeff(0, m - alpha, beta))
    else:
        sup = _circle_sup(lambda n: recip.coeff(n, m - alpha, beta), r, n_terms, samples)
    return span ** (m - alpha).real / (m - alpha).real * sup


# ---------------------------------------------------------------------------
# empirical boundedness audits


@dataclass(frozen=True)
class AuditReport:
    max_ratio: float
    bound: float
    trials: int
    seed: int
    passed: bool

    def to_json(self) -> dict:
        return {
            "max_ratio": self.max_ratio,
            "bound": self.bound,
            "trials": self.trials,
            "seed": self.seed,
            "pass": self.passed,
        }


_AUDIT_SLACK = 1e-9
_POLY_DEGREE = 5


def _random_poly_monomials(rng, chart: PhiChart):
    """Random polynomial in x as a chart monomial sum (identity/power only)."""
    coeffs = rng.uniform(-1.0, 1.0, _POLY_DEGREE + 1)
    name = chart.name
    if name == "identity":
        # Taylor shift: powers of x expanded in powers of (x - a)
        terms = []
        for k, c in enumerate(coeffs):
            for j in range(k + 1):
                terms.append((float(j), c * math.comb(k, j) * chart.a ** (k - j)))
        u = TestFunction.monomial_sum(_merge(terms), chart)
    elif name == "power":
        if chart.a != 0.0:
            raise InvalidParams("power-chart audits need a = 0")
        sigma = _power_sigma(chart)
        terms = [(k / sigma, c) for k, c in enumerate(coeffs)]
        u = TestFunction.monomial_sum(_merge(terms), chart)
    else:
        raise InvalidParams(f"audits support identity and power charts, got {name}")

    def d1(x):
        x = np.asarray(x, dtype=float)
        return np.polyval(np.polyder(coeffs[::-1]), x)

    return TestFunction(
        u.fn, "monomial_sum", monomials=u.monomials, chart=chart,
        derivatives=(d1,),
    )


def _merge(terms):
    merged: dict = {}
    for p, c in terms:
        key = complex(p)
        merged[key] = merged.get(key, 0.0 + 0.0j) + c
    return [(p, c) for p, c in merged.items() if c != 0]


def _power_sigma(chart: PhiChart) -> float:
    return float(np.log(chart.phi(2.0)) / np.log(2.0))


def boundedness_audit(kernel: AnalyticKernel, alpha, beta, chart: PhiChart,
                      p: float, trials: int, seed: int = 0,
                      trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> AuditReport:
    """Ratios ||I u|| / ||u|| for seeded random polynomials, against bound_K."""
    bound = bound_K(kernel, alpha, beta, chart, trunc=trunc)
    spec = OperatorSpec(kernel, alpha, beta, chart)
    nspec = NormSpec(p, chart)
    worst = 0.0
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        u = _random_poly_monomials(rng, chart)
        image = gfi_apply_monomials(spec, u, trunc)
        denom = lp_phi_norm(u, nspec)
        if denom == 0.0:
            continue
        ratio = lp_phi_norm(image, nspec) / denom
        worst = max(worst, ratio)
    return AuditReport(worst, bound, trials, seed, worst <= bound + _AUDIT_SLACK)


def derivative_audit(kernel: AnalyticKernel, alpha, beta, chart: PhiChart,
                     trials: int, seed: int = 0,
                     trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> AuditReport:
    """Ratios ||D u||_{C_alpha} / ||u||_{C^m_alpha} against bound_M."""
    alpha = complex(alpha)
    m = math.floor(alpha.real) + 1
    bound = bound_M(kernel, alpha, beta, m, chart, n_terms=trunc.max_terms)
    spec = OperatorSpec(kernel, alpha, beta, chart, "rl_derivative")
    nspec = NormSpec(1.0, chart, alpha_weight=alpha, m=m)
    worst = 0.0
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        u = _random_poly_monomials(rng, chart)
        terms = gfd_apply_monomials(spec, u, trunc)

        def du(x, terms=terms):
            return eval_monomials(chart, terms, x)

        num = c_alpha_phi_norm(TestFunction.from_callable(du), nspec)
        den = c_m_alpha_phi_norm(u, nspec)
        if den == 0.0:
            continue
        worst = max(worst, num / den)
    return AuditReport(worst, bound, trials, seed, worst <= bound + _AUDIT_SLACK)
