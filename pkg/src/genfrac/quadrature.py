"""Oracle-grade integration for weakly singular and smooth integrands.

Three engines: Gauss-Jacobi rules (Golub-Welsch) for integrands whose only
singularity is the algebraic weight at the right endpoint, tanh-sinh for
integrands with other endpoint branch points, and an adaptive embedded
Gauss-Kronrod scheme as an independent general-purpose check.
"""

import math
import threading
from dataclasses import dataclass

import numpy as np

from .charts import PhiChart
from .errors import InvalidExponent, InvalidParams, NoConvergence, QuadratureFailure
from .gammafn import gamma


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights on (-1, 1) for the weight (1 - x)^exponent."""

    nodes: np.ndarray
    weights: np.ndarray
    exponent: float
    order: int


_rule_cache: dict = {}
_rule_lock = threading.Lock()


def gauss_jacobi_rule(order: int, exponent: float) -> QuadratureRule:
    """Gauss-Jacobi rule for weight (1-x)^exponent (1+x)^0 on [-1, 1].

    Golub-Welsch: nodes are eigenvalues of the symmetrized three-term
    recurrence matrix, weights come from the first eigenvector components.
    """
    if order < 1:
        raise InvalidParams("rule order must be positive")
    if not exponent > -1.0:
        raise InvalidExponent(f"Jacobi exponent must exceed -1, got {exponent}")
    key = (order, float(exponent))
    with _rule_lock:
        hit = _rule_cache.get(key)
    if hit is not None:
        return hit
    a, b = float(exponent), 0.0
    ab = a + b
    mu0 = 2.0 ** (ab + 1.0) * math.exp(
        math.lgamma(a + 1.0) + math.lgamma(b + 1.0) - math.lgamma(ab + 2.0)
    )
    diag = np.zeros(order)
    diag[0] = (b - a) / (ab + 2.0)
    k = np.arange(1, order, dtype=float)
    diag[1:] = (b * b - a * a) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0))
    off = np.zeros(order - 1)
    if order > 1:
        off[0] = math.sqrt(4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) ** 2 * (3.0 + ab)))
        k = np.arange(2, order, dtype=float)
        off[1:] = np.sqrt(
            4.0 * k * (k + a) * (k + b) * (k + ab)
            / ((2.0 * k + ab) ** 2 * (2.0 * k + ab + 1.0) * (2.0 * k + ab - 1.0))
        )
    jac = np.diag(diag)
    if order > 1:
        jac += np.diag(off, 1) + np.diag(off, -1)
    evals, evecs = np.linalg.eigh(jac)
    weights = mu0 * evecs[0, :] ** 2
    rule = QuadratureRule(evals, weights, float(exponent), order)
    with _rule_lock:
        _rule_cache[key] = rule
    return rule


def jacobi_seminorm_integral(g, lo: float, hi: float, alpha, order: int) -> complex:
    """integral over [lo, hi] of (hi - y)^(alpha-1) g(y) dy by Gauss-Jacobi.

    Complex alpha: the Jacobi weight carries (hi-y)^(Re alpha - 1); the
    unimodular factor (hi-y)^(i Im alpha) is folded into the integrand.
    """
    alpha = complex(alpha)
    rule = gauss_jacobi_rule(order, alpha.real - 1.0)
    half = 0.5 * (hi - lo)
    ys = lo + half * (1.0 + rule.nodes)
    vals = np.asarray(g(ys), dtype=complex)
    if alpha.imag != 0.0:
        vals = vals * np.exp(1j * alpha.imag * np.log(half * (1.0 - rule.nodes)))
    return complex(half ** alpha * np.dot(rule.weights, vals))


def integrate_singular(g, chart: PhiChart, alpha, x: float, order: int = 64) -> complex:
    """integral from a to x of phi'(t) (phi(x)-phi(t))^(alpha-1) g(t) dt.

    Substitutes y = phi(t) and applies a Gauss-Jacobi rule capturing the
    right-endpoint weight; disagreement between the order-n and order-2n
    results raises QuadratureFailure.
    """
    alpha = complex(alpha)
    if not alpha.real > 0:
        raise InvalidParams("Re(alpha) must be positive")
    lo = float(chart.phi(chart.a))
    hi = float(chart.phi(x))
    if not hi > lo:
        raise InvalidParams("x must lie strictly right of the base point")
    if alpha.imag != 0.0:
        # the unimodular factor (hi-y)^(i Im alpha) oscillates in log scale
        # near the endpoint, which defeats the Jacobi weight; tanh-sinh
        # resolves it
        def fy(ys, left, right):
            base = np.asarray(right, dtype=float)
            return np.exp((alpha - 1.0) * np.log(base)) * np.asarray(
                g(chart.inv(ys)), dtype=complex
            )

        return tanh_sinh(fy, lo, hi, tol=1e-12)

    def gy(ys):
        return np.asarray(g(chart.inv(ys)), dtype=complex)

    v1 = jacobi_seminorm_integral(gy, lo, hi, alpha, order)
    v2 = jacobi_seminorm_integral(gy, lo, hi, alpha, 2 * order)
    scale = max(abs(v2), 1e-30)
    if abs(v1 - v2) <= 1e-10 * scale:
        return v2
    v3 = jacobi_seminorm_integral(gy, lo, hi, alpha, 4 * order)
    if abs(v2 - v3) <= 1e-10 * max(abs(v3), 1e-30):
        return v3
    raise QuadratureFailure(
        f"Gauss-Jacobi orders {2 * order} and {4 * order} disagree by "
        f"{abs(v2 - v3):.3e} at x = {x}"
    )


# ---------------------------------------------------------------------------
# tanh-sinh for integrands with non-polynomial endpoint behaviour


_TS_TMAX = 6.0


def _ts_nodes(h: float, level: int):
    """Abscissa parameters for one tanh-sinh refinement level.

    Level 0 is the full grid of multiples of h; later levels contribute the
    odd multiples of the current h (midpoints of the previous grid).
    """
    if level == 0:
        return np.arange(-_TS_TMAX, _TS_TMAX + 0.5 * h, h)
    return np.arange(-_TS_TMAX + h, _TS_TMAX, 2.0 * h)


def tanh_sinh(f, a: float, b: float, tol: float = 1e-12, max_level: int = 10) -> complex:
    """Double-exponential integration of f over (a, b).

    f(t, left, right) receives the node and its distances to both endpoints
    (computed without cancellation), so algebraic endpoint singularities of
    any exponent > -1 are integrated accurately.
    """
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    total = 0.0 + 0.0j
    prev = None
    h = 1.0
    for level in range(max_level + 1):
        t = _ts_nodes(h, level)
        u = 0.5 * math.pi * np.sinh(t)
        # 1 -+ tanh(u) without cancellation
        eu = np.exp(-2.0 * np.abs(u))
        dist_small = 2.0 * eu / (1.0 + eu)     # 1 - tanh|u|
        dist_big = 2.0 / (1.0 + eu)            # 1 + tanh|u|
        right = np.where(u >= 0, dist_small, dist_big) * half
        left = np.where(u >= 0, dist_big, dist_small) * half
        w = half * 0.5 * math.pi * np.cosh(t) * (dist_small * dist_big)
        keep = (right > 1e-290) & (left > 1e-290) & (w > 0.0)
        xs = mid + half * np.where(u >= 0, 1.0 - dist_small, 1.0 - dist_big)
        xs = np.clip(xs, a, b)
        vals = np.zeros(len(t), dtype=complex)
        if np.any(keep):
            vals[keep] = np.asarray(f(xs[keep], left[keep], right[keep]), dtype=complex)
        contrib = np.dot(w[keep], vals[keep])
        # halving h reuses all previous nodes: new sum = h*(old nodes + midpoints)
        total = h * contrib if level == 0 else 0.5 * total + h * contrib
        if prev is not None:
            err = abs(total - prev)
            if err <= tol * max(abs(total), 1e-30):
                return complex(total)
        prev = total
        h *= 0.5
    raise QuadratureFailure(
        f"tanh-sinh failed to reach tol {tol:g} within {max_level} levels"
    )


def singular_kernel_integral(integrand, chart: PhiChart, x: float,
                             tol: float = 1e-12) -> complex:
    """integral from a to x of phi'(t) K(phi(x)-phi(t), t) dt via tanh-sinh.

    ``integrand(t, s)`` receives the node t and s = phi(x)-phi(t) > 0
    computed stably; used when K carries branch points beyond the plain
    algebraic weight (e.g. fractional powers inside an analytic kernel).
    """
    lo = float(chart.phi(chart.a))
    hi = float(chart.phi(x))

    def fy(ys, left, right):
        ts = np.asarray(chart.inv(ys), dtype=float)
        return integrand(ts, right)

    return tanh_sinh(fy, lo, hi, tol=tol)


# ---------------------------------------------------------------------------
# adaptive Gauss-Kronrod (independent general-purpose oracle)

# G7/K15 nodes and weights on [-1, 1]
_K15_NODES = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813,
])
_K15_WEIGHTS = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
])
_G7_WEIGHTS = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870,
])
_G7_INDEX = np.arange(1, 15, 2)


def _gk15(f, lo: float, hi: float):
    half = 0.5 * (hi - lo)
    xs = 0.5 * (lo + hi) + half * _K15_NODES
    vals = np.asarray(f(xs), dtype=complex)
    k = half * np.dot(_K15_WEIGHTS, vals)
    g = half * np.dot(_G7_WEIGHTS, vals[_G7_INDEX])
    return k, abs(k - g)


def adaptive_integrate(f, a: float, b: float, tol: float = 1e-12,
                       depth_limit: int = 50, max_panels: int = 8192) -> complex:
    """Adaptive bisection with the embedded G7/K15 pair.

    ``f`` is called on node arrays and may return complex values; endpoint
    singularities are tolerated because no node touches an endpoint.
    """
    if not b > a:
        raise InvalidParams("integration interval must satisfy a < b")
    val, err = _gk15(f, a, b)
    panels = [(err, a, b, val, 0)]
    while True:
        total = sum(p[3] for p in panels)
        total_err = sum(p[0] for p in panels if p[4] < depth_limit)
        frozen_err = sum(p[0] for p in panels if p[4] >= depth_limit)
        budget = tol * max(abs(total), 1.0e-300)
        if total_err + frozen_err <= budget:
            return complex(total)
        if total_err <= 0.25 * budget or len(panels) >= max_panels:
            # nothing splittable can reduce the error enough
            raise NoConvergence(
                f"adaptive integration stalled: error {total_err + frozen_err:.3e} "
                f"exceeds budget {budget:.3e} with {len(panels)} panels"
            )
        worst = max(
            (i for i, p in enumerate(panels) if p[4] < depth_limit),
            key=lambda i: panels[i][0],
        )
        _, lo, hi, _, depth = panels.pop(worst)
        mid = 0.5 * (lo + hi)
        vl, el = _gk15(f, lo, mid)
        vr, er = _gk15(f, mid, hi)
        panels.append((el, lo, mid, vl, depth + 1))
        panels.append((er, mid, hi, vr, depth + 1))


def integrate_graded(f, a: float, b: float, tol: float = 1e-12,
                     right_power: float | None = None,
                     left_power: float | None = None) -> complex:
    """Adaptive integration after a power substitution grading an endpoint.

    ``right_power`` = s means f behaves like (b-t)^s near t = b (s > -1);
    the substitution b - t = (b-a) v^gamma with gamma = 3/(s+1) renders the
    integrand Hoelder-smooth there.  Same for the left endpoint.
    """
    if right_power is not None and left_power is not None:
        mid = 0.5 * (a + b)
        return integrate_graded(f, a, mid, tol, None, left_power) + \
            integrate_graded(f, mid, b, tol, right_power, None)
    if right_power is not None:
        gam = max(3.0 / (right_power + 1.0), 1.0)
        width = b - a

        def sub(v):
            v = np.asarray(v, dtype=float)
            return np.asarray(
                f(b - width * v ** gam), dtype=complex
            ) * width * gam * v ** (gam - 1.0)

        return adaptive_integrate(sub, 0.0, 1.0, tol)
    if left_power is not None:
        gam = max(3.0 / (left_power + 1.0), 1.0)
        width = b - a

        def sub(v):
            v = np.asarray(v, dtype=float)
            return np.asarray(
                f(a + width * v ** gam), dtype=complex
            ) * width * gam * v ** (gam - 1.0)

        return adaptive_integrate(sub, 0.0, 1.0, tol)
    return adaptive_integrate(f, a, b, tol)


def gauss_legendre_panel(f, lo: float, hi: float, order: int = 32) -> complex:
    """Fixed Gauss-Legendre integration of a smooth integrand on [lo, hi]."""
    rule = gauss_jacobi_rule(order, 0.0)
    half = 0.5 * (hi - lo)
    xs = 0.5 * (lo + hi) + half * rule.nodes
    return complex(half * np.dot(rule.weights, np.asarray(f(xs), dtype=complex)))
