"""Classical fractional operators taken with respect to a chart.

All operators act from the chart's left endpoint.  Chart monomials
(phi(x)-phi(a))^p have closed forms; everything else goes through singular
quadrature, with derivatives of the integrand supplied or finite-differenced.
"""

import math

import numpy as np

from .charts import PhiChart
from .errors import IntegerOrder, InvalidParams, OrderNotPositive
from .functions import (
    TestFunction,
    eval_monomials,
    monomial_phi_derivative,
    phi_derivative,
)
from .gammafn import gamma_ratio, rgamma
from .quadrature import integrate_singular


def _is_real_integer(z: complex) -> bool:
    return z.imag == 0.0 and abs(z.real - round(z.real)) < 1e-12


def monomial_rl_integral(terms, alpha):
    """I^alpha maps (p, c) to (p + alpha, c gamma(p+1)/gamma(p+1+alpha))."""
    alpha = complex(alpha)
    return tuple(
        (p + alpha, c * gamma_ratio(p + 1.0, p + 1.0 + alpha)) for p, c in terms
    )


def monomial_rl_derivative(terms, alpha):
    """D^alpha maps (p, c) to (p - alpha, c gamma(p+1)/gamma(p+1-alpha))."""
    alpha = complex(alpha)
    out = []
    for p, c in terms:
        w = c * gamma_ratio(p + 1.0, p + 1.0 - alpha)
        if w != 0:
            out.append((p - alpha, w))
    return tuple(out)


def rl_integral_wrt(chart: PhiChart, alpha, u: TestFunction, x, order: int = 64):
    """Fractional integral of order alpha of u with respect to the chart.

    (1/gamma(alpha)) * integral from a to x of
    phi'(t) (phi(x)-phi(t))^(alpha-1) u(t) dt.
    """
    alpha = complex(alpha)
    if not alpha.real > 0:
        raise OrderNotPositive(f"Re(alpha) must be positive, got {alpha}")
    if u.is_monomial_for(chart):
        return eval_monomials(chart, monomial_rl_integral(u.monomials, alpha), x)
    if np.ndim(x) > 0:
        return np.array([rl_integral_wrt(chart, alpha, u, xi, order) for xi in x])
    return rgamma(alpha) * integrate_singular(u.fn, chart, alpha, float(x), order)


def rl_derivative_wrt(chart: PhiChart, alpha, u: TestFunction, x, order: int = 64):
    """Fractional derivative (Riemann-Liouville form) with respect to the chart.

    Order n = floor(Re alpha) + 1; evaluated for chart monomials in closed
    form and otherwise through the regularized split
    u = sum_{k<n} u_phi^(k)(a) (phi(x)-phi(a))^k / k! + remainder,
    whose remainder derivative reduces to I^(n-alpha) of the n-th
    phi-derivative of u.
    """
    alpha = complex(alpha)
    if alpha.real < 0:
        raise InvalidParams("use rl_integral_wrt for negative-real-part orders")
    if _is_real_integer(alpha) and alpha.real >= 0:
        raise IntegerOrder(
            f"order {alpha} is a non-negative integer; apply the classical "
            "m-fold phi-derivative instead"
        )
    if u.is_monomial_for(chart):
        return eval_monomials(chart, monomial_rl_derivative(u.monomials, alpha), x)
    if np.ndim(x) > 0:
        return np.array([rl_derivative_wrt(chart, alpha, u, xi, order) for xi in x])
    n = math.floor(alpha.real) + 1
    x = float(x)
    X = float(chart.offset(x))
    head = 0.0 + 0.0j
    for k in range(n):
        uk = complex(np.asarray(phi_derivative(chart, u, chart.a, k)).reshape(-1)[0])
        if X > 0.0 or (k - alpha).real > 0:
            head += uk * rgamma(k + 1.0 - alpha) * X ** complex(k - alpha)

    def vn(t):
        return np.asarray(phi_derivative(chart, u, t, n), dtype=complex)

    tail = rgamma(n - alpha) * integrate_singular(vn, chart, n - alpha, x, order)
    return head + tail


def caputo_derivative_wrt(chart: PhiChart, alpha, u: TestFunction, x, order: int = 64):
    """Caputo derivative: I^(n-alpha) applied to the n-th phi-derivative of u."""
    alpha = complex(alpha)
    if alpha.real < 0:
        raise InvalidParams("use rl_integral_wrt for negative-real-part orders")
    if _is_real_integer(alpha):
        raise IntegerOrder(
            f"order {alpha} is a non-negative integer; apply the classical "
            "m-fold phi-derivative instead"
        )
    n = math.floor(alpha.real) + 1
    if u.is_monomial_for(chart):
        dterms = monomial_phi_derivative(u.monomials, n)
        return eval_monomials(chart, monomial_rl_integral(dterms, n - alpha), x)
    if np.ndim(x) > 0:
        return np.array([caputo_derivative_wrt(chart, alpha, u, xi, order) for xi in x])

    def vn(t):
        return np.asarray(phi_derivative(chart, u, t, n), dtype=complex)

    return rgamma(n - alpha) * integrate_singular(vn, chart, n - alpha, float(x), order)


def classical_phi_derivative(chart: PhiChart, u: TestFunction, x, k: int):
    """(1/phi' d/dx)^k u; the integer-order route."""
    return phi_derivative(chart, u, x, k)


def differintegral_wrt(chart: PhiChart, zeta, u: TestFunction, x, order: int = 64):
    """Differintegral of arbitrary complex order.

    Positive real part: derivative (classical for real integers); negative:
    integral of order -zeta; zero: identity for zeta = 0, else the n = 1
    derivative path.
    """
    zeta = complex(zeta)
    if zeta == 0:
        return u(x)
    if zeta.real > 0 and _is_real_integer(zeta):
        return phi_derivative(chart, u, x, round(zeta.real))
    if zeta.real >= 0:
        return rl_derivative_wrt(chart, zeta, u, x, order)
    return rl_integral_wrt(chart, -zeta, u, x, order)


def rl_semigroup_check(chart: PhiChart, alpha, beta, u: TestFunction, grid) -> float:
    """max over the grid of |I^alpha I^beta u - I^(alpha+beta) u|."""
    alpha = complex(alpha)
    beta = complex(beta)
    if not (alpha.real > 0 and beta.real > 0):
        raise OrderNotPositive("both orders need positive real part")
    if u.is_monomial_for(chart):
        inner = TestFunction.monomial_sum(
            monomial_rl_integral(u.monomials, beta), chart
        )
    else:
        def inner_fn(t):
            return rl_integral_wrt(chart, beta, u, t)

        inner = TestFunction.from_callable(inner_fn)
    worst = 0.0
    for x in grid:
        nested = rl_integral_wrt(chart, alpha, inner, x)
        direct = rl_integral_wrt(chart, alpha + beta, u, x)
        worst = max(worst, abs(complex(nested) - complex(direct)))
    return worst
