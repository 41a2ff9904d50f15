"""Test functions the operators act on.

Three kinds: plain callables, sums of chart monomials c (phi(x)-phi(a))^p
(which every closed-form rule understands), and spline-backed sampled data.
Monomial sums double as a small linear algebra: operators map them to
monomial sums, so nested operator evaluations stay in closed form.
"""

import math
from dataclasses import dataclass

import numpy as np

from .charts import PhiChart
from .errors import InvalidParams, MissingDerivatives
from .gammafn import gamma_ratio


def _as_array(x):
    return np.atleast_1d(np.asarray(x, dtype=float))


def powz(base, expo):
    """Principal branch base**expo for base >= 0 arrays and complex expo.

    0**p is 1 for p = 0 and 0 for Re(p) > 0 (the only uses that arise:
    monomials with Re(p) > -1 evaluated at the base point).
    """
    base = np.atleast_1d(np.asarray(base, dtype=float))
    expo = complex(expo)
    out = np.zeros(base.shape, dtype=complex)
    pos = base > 0.0
    if np.any(pos):
        out[pos] = np.exp(expo * np.log(base[pos]))
    zero = ~pos
    if np.any(zero):
        if expo == 0:
            out[zero] = 1.0
        elif expo.real > 0:
            out[zero] = 0.0
        else:
            out[zero] = complex(math.inf, 0.0)
    return out


@dataclass(frozen=True)
class TestFunction:
    """A function the fractional operators act on.

    kind is one of "callable", "monomial_sum", "sampled".  For monomial
    sums, ``monomials`` holds (exponent, coefficient) pairs relative to
    ``chart``.  ``phi_derivatives[k-1]`` is (1/phi' d/dx)^k u when supplied;
    ``derivatives[k-1]`` is the ordinary k-th derivative.
    """

    fn: object
    kind: str = "callable"
    monomials: tuple = ()
    chart: PhiChart | None = None
    phi_derivatives: tuple | None = None
    derivatives: tuple | None = None

    def __call__(self, x):
        return self.fn(x)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def from_callable(fn, phi_derivatives=None, derivatives=None) -> "TestFunction":
        return TestFunction(
            fn,
            "callable",
            phi_derivatives=tuple(phi_derivatives) if phi_derivatives else None,
            derivatives=tuple(derivatives) if derivatives else None,
        )

    @staticmethod
    def monomial(p, chart: PhiChart, coeff=1.0) -> "TestFunction":
        """u(x) = coeff * (phi(x) - phi(a))^p with Re(p) > -1."""
        return TestFunction.monomial_sum([(p, coeff)], chart)

    @staticmethod
    def monomial_sum(terms, chart: PhiChart) -> "TestFunction":
        terms = tuple((complex(p), complex(c)) for p, c in terms)
        for p, _ in terms:
            if not p.real > -1.0:
                raise InvalidParams(f"monomial exponent {p} must have Re > -1")

        def fn(x):
            X = np.atleast_1d(np.asarray(chart.offset(x), dtype=float))
            out = np.zeros(X.shape, dtype=complex)
            for p, c in terms:
                out += c * powz(X, p)
            return out if out.shape != (1,) else out[0]

        return TestFunction(fn, "monomial_sum", monomials=terms, chart=chart)

    @staticmethod
    def constant(value, chart: PhiChart) -> "TestFunction":
        return TestFunction.monomial(0.0, chart, value)

    @staticmethod
    def from_samples(xs, values) -> "TestFunction":
        xs = np.asarray(xs, dtype=float)
        values = np.asarray(values, dtype=complex)
        if xs.ndim != 1 or xs.shape != values.shape or len(xs) < 2:
            raise InvalidParams("samples need matching 1-d x and value arrays")
        if not np.all(np.diff(xs) > 0):
            raise InvalidParams("sample abscissae must be strictly increasing")
        re = CubicSpline(xs, values.real)
        im = CubicSpline(xs, values.imag)

        def fn(x):
            return re(x) + 1j * im(x)

        return TestFunction(fn, "sampled")

    # -- structure queries ---------------------------------------------------

    def is_monomial_for(self, chart: PhiChart) -> bool:
        return self.kind == "monomial_sum" and self.chart is chart

    def scaled(self, factor) -> "TestFunction":
        factor = complex(factor)
        if self.kind == "monomial_sum":
            return TestFunction.monomial_sum(
                [(p, factor * c) for p, c in self.monomials], self.chart
            )
        base = self.fn
        return TestFunction(lambda x: factor * np.asarray(base(x)), self.kind)


def eval_monomials(chart: PhiChart, terms, x):
    """Evaluate sum(c (phi(x)-phi(a))^p) without the Re(p) > -1 restriction."""
    X = np.atleast_1d(np.asarray(chart.offset(x), dtype=float))
    out = np.zeros(X.shape, dtype=complex)
    for p, c in terms:
        out += c * powz(X, p)
    return out if out.shape != (1,) else out[0]


def monomial_phi_derivative(terms, k: int):
    """(1/phi' d/dx)^k applied to a monomial sum, as new (p, c) pairs."""
    out = []
    for p, c in terms:
        w = c * gamma_ratio(p + 1.0, p + 1.0 - k)
        if w != 0:
            out.append((p - k, w))
    return tuple(out)


def phi_derivative(chart: PhiChart, u: TestFunction, x, k: int,
                   allow_fd: bool = True):
    """(1/phi'(x) d/dx)^k u at x: closed form, supplied callables, or FD."""
    if k == 0:
        return u(x)
    if u.is_monomial_for(chart):
        terms = monomial_phi_derivative(u.monomials, k)
        X = np.atleast_1d(np.asarray(chart.offset(x), dtype=float))
        out = np.zeros(X.shape, dtype=complex)
        for p, c in terms:
            out += c * powz(X, p)
        return out if out.shape != (1,) else out[0]
    if u.phi_derivatives is not None and len(u.phi_derivatives) >= k:
        f = u.phi_derivatives[k - 1]
        return f(x)
    if not allow_fd:
        raise MissingDerivatives(
            f"order-{k} phi-derivative unavailable and finite differences disabled"
        )
    f = u.fn
    for _ in range(k):
        f = _phi_fd(chart, f)
    return f(x)


def _phi_fd(chart: PhiChart, f):
    """One application of (1/phi' d/dx) by Richardson-extrapolated differences."""
    span = chart.b - chart.a if math.isfinite(chart.b) else 1.0
    h0 = max(1e-5 * span, 6e-6)

    def df(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        h = np.minimum(h0, np.maximum((x - chart.a) / 4.0, 1e-8))
        if math.isfinite(chart.b):
            h = np.minimum(h, np.maximum((chart.b - x) / 4.0, 1e-8))
        d1 = (np.asarray(f(x + h)) - np.asarray(f(x - h))) / (2.0 * h)
        h2 = h / 2.0
        d2 = (np.asarray(f(x + h2)) - np.asarray(f(x - h2))) / (2.0 * h2)
        d = (4.0 * d2 - d1) / 3.0
        out = d / np.asarray(chart.dphi(x))
        return out if out.shape != (1,) else out[0]

    return df


class CubicSpline:
    """Natural cubic spline through strictly increasing abscissae."""

    def __init__(self, xs, ys):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        n = len(xs)
        h = np.diff(xs)
        # second derivatives from the natural tridiagonal system
        m = np.zeros(n)
        if n > 2:
            diag = 2.0 * (h[:-1] + h[1:])
            rhs = 6.0 * (np.diff(ys[1:]) / h[1:] - np.diff(ys[:-1]) / h[:-1])
            sub = h[1:-1].copy()
            sup = h[1:-1].copy()
            # Thomas algorithm
            for i in range(1, n - 2):
                w = sub[i - 1] / diag[i - 1]
                diag[i] -= w * sup[i - 1]
                rhs[i] -= w * rhs[i - 1]
            m[n - 2] = rhs[-1] / diag[-1]
            for i in range(n - 4, -1, -1):
                m[i + 1] = (rhs[i] - sup[i] * m[i + 2]) / diag[i]
        self.xs, self.ys, self.h, self.m = xs, ys, h, m

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        i = np.clip(np.searchsorted(self.xs, x) - 1, 0, len(self.xs) - 2)
        h = self.h[i]
        t = x - self.xs[i]
        a = (self.m[i + 1] - self.m[i]) / (6.0 * h)
        b = self.m[i] / 2.0
        c = np.diff(self.ys)[i] / h - h * (2.0 * self.m[i] + self.m[i + 1]) / 6.0
        out = self.ys[i] + t * (c + t * (b + t * a))
        return out if out.shape != (1,) else out[0]


class BarycentricInterpolant:
    """Barycentric interpolation on Chebyshev-Lobatto nodes of a given degree."""

    def __init__(self, lo: float, hi: float, values):
        n = len(values) - 1
        k = np.arange(n + 1)
        self.nodes = 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos(math.pi * k / n)
        self.values = np.asarray(values, dtype=complex)
        w = np.ones(n + 1)
        w[1::2] = -1.0
        w[0] *= 0.5
        w[-1] *= 0.5
        self.weights = w

    @staticmethod
    def nodes_for(lo: float, hi: float, degree: int) -> np.ndarray:
        k = np.arange(degree + 1)
        return 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos(math.pi * k / degree)

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        diff = x[:, None] - self.nodes[None, :]
        exact = np.isclose(diff, 0.0, atol=1e-300)
        diff = np.where(exact, 1.0, diff)
        ratio = self.weights[None, :] / diff
        out = (ratio @ self.values) / ratio.sum(axis=1)
        hit_row, hit_col = np.nonzero(exact)
        out[hit_row] = self.values[hit_col]
        return out if out.shape != (1,) else out[0]
