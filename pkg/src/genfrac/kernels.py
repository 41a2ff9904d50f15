"""Coefficient-level algebra on analytic convolution kernels.

An AnalyticKernel is a power series sum(a_n z^n) on a disc of radius R,
where the coefficients may depend on the two operator orders.  This module
evaluates kernels, forms their gamma-weighted series, inverts that series
(reciprocal kernels), builds the order-shifted variants used by m-fold
composition identities, and checks the coefficient conditions behind the
semigroup and composition laws.
"""

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    GammaPole,
    InvalidParams,
    NoConvergence,
    OutOfDisc,
    UnknownPreset,
    ZeroLeadingCoefficient,
)
from .gammafn import gamma, log_gamma, pochhammer, rgamma

import cmath


@dataclass(frozen=True)
class TruncationPolicy:
    """How to cut an infinite series: fixed term count or a running tail bound.

    In ``tail_bound`` mode the sum stops once the geometric tail estimate
    |t_N| q / (1 - q), with q the stabilized term ratio, drops below
    ``tail_tol`` relative to the accumulated sum.
    """

    max_terms: int = 160
    tail_tol: float = 1e-12
    mode: str = "tail_bound"  # "tail_bound" | "fixed_N"

    def __post_init__(self):
        if self.max_terms < 1:
            raise InvalidParams("max_terms must be positive")
        if self.tail_tol <= 0:
            raise InvalidParams("tail_tol must be positive")
        if self.mode not in ("tail_bound", "fixed_N"):
            raise InvalidParams(f"unknown truncation mode {self.mode!r}")


DEFAULT_TRUNCATION = TruncationPolicy()


class SeriesAccumulator:
    """Sums series terms and tracks a geometric tail estimate.

    The tail bound |t_N| q / (1 - q) activates once the ratio of successive
    nonzero term magnitudes stabilizes below one.  A run of four terms that
    underflow to zero after a decaying stretch also counts as convergence,
    with the last nonzero magnitude standing in for the tail.
    """

    def __init__(self, policy: TruncationPolicy, finite_hint: int | None = None):
        self.policy = policy
        self.finite_hint = finite_hint
        self.total = 0.0 + 0.0j
        self.tail = math.inf
        self.n_terms = 0
        self._prev = None
        self._ratios = []

    def add(self, term: complex) -> bool:
        """Accumulate one term; returns True when the policy says stop."""
        self.total += term
        self.n_terms += 1
        if self.finite_hint is not None and self.n_terms > self.finite_hint:
            self.tail = 0.0
            return True
        mag = abs(term)
        if mag > 0.0:
            if self._prev is not None and self._prev > 0.0:
                self._ratios.append(mag / self._prev)
                if len(self._ratios) > 3:
                    self._ratios.pop(0)
            self._prev = mag
        if self.policy.mode == "fixed_N":
            return self.n_terms >= self.policy.max_terms
        if mag > 0.0 and len(self._ratios) >= 2 and max(self._ratios) < 1.0:
            q = max(self._ratios)
            self.tail = mag * q / (1.0 - q)
        return self.converged() or self.n_terms >= self.policy.max_terms

    def converged(self) -> bool:
        if self.policy.mode == "fixed_N":
            return True
        if self.finite_hint is not None and self.n_terms > self.finite_hint:
            return True
        if self._prev is None and self.n_terms > 0:
            # every examined term was exactly zero
            return True
        scale = max(abs(self.total), 1e-30)
        return self.tail <= self.policy.tail_tol * scale

    def require_converged(self, what: str) -> None:
        if not self.converged():
            raise NoConvergence(
                f"{what}: tail estimate {self.tail:.2e} above tolerance after "
                f"{self.n_terms} terms"
            )


_SeriesAccumulator = SeriesAccumulator


@dataclass(frozen=True, eq=False)
class AnalyticKernel:
    """Power-series kernel sum(a_n(alpha, beta) z^n) on the disc |z| < radius.

    ``coeff_fn(n, alpha, beta)`` supplies raw coefficients.  ``weighted_fn``,
    when given, supplies a_n(alpha, beta) * gamma(beta n + alpha) in a form
    that stays finite when the factors separately over/underflow.
    Instances are immutable; coefficient memoization is lock-protected so
    kernels can be shared across threads.
    """

    coeff_fn: object
    radius: float
    name: str = "kernel"
    max_index_hint: int | None = None
    weighted_fn: object = None
    _memo: dict = field(default_factory=dict, repr=False, compare=False)
    _wmemo: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self):
        if not self.radius > 0.0:
            raise InvalidParams("kernel radius must be positive")

    def coeff(self, n: int, alpha: complex, beta: complex) -> complex:
        if n < 0:
            raise InvalidParams("coefficient index must be non-negative")
        if self.max_index_hint is not None and n > self.max_index_hint:
            return 0.0 + 0.0j
        key = (n, complex(alpha), complex(beta))
        with self._lock:
            hit = self._memo.get(key)
        if hit is not None:
            return hit
        val = complex(self.coeff_fn(n, complex(alpha), complex(beta)))
        with self._lock:
            self._memo[key] = val
        return val

    def gamma_weighted(self, n: int, alpha: complex, beta: complex) -> complex:
        """a_n(alpha, beta) * gamma(beta n + alpha), computed stably."""
        if self.max_index_hint is not None and n > self.max_index_hint:
            return 0.0 + 0.0j
        key = (n, complex(alpha), complex(beta))
        with self._lock:
            hit = self._wmemo.get(key)
        if hit is not None:
            return hit
        if self.weighted_fn is not None:
            val = complex(self.weighted_fn(n, complex(alpha), complex(beta)))
        else:
            val = self.coeff(n, alpha, beta) * gamma(beta * n + alpha)
        with self._lock:
            self._wmemo[key] = val
        return val


def weighted_coeffs(kernel: AnalyticKernel, alpha, beta, n_max: int) -> np.ndarray:
    """Vector of a_n gamma(beta n + alpha) for n = 0..n_max."""
    return np.array(
        [kernel.gamma_weighted(n, alpha, beta) for n in range(n_max + 1)],
        dtype=complex,
    )


# ---------------------------------------------------------------------------
# presets


def _rl_kernel() -> AnalyticKernel:
    def coeff(n, alpha, beta):
        return rgamma(alpha) if n == 0 else 0.0j

    def weighted(n, alpha, beta):
        return 1.0 + 0.0j if n == 0 else 0.0j

    return AnalyticKernel(coeff, math.inf, "rl", max_index_hint=0, weighted_fn=weighted)


def _exp_kernel() -> AnalyticKernel:
    def coeff(n, alpha, beta):
        return cmath.exp(-math.lgamma(n + 1))

    def weighted(n, alpha, beta):
        lg = log_gamma(beta * n + alpha) - math.lgamma(n + 1)
        return cmath.exp(lg)

    return AnalyticKernel(coeff, math.inf, "exp", weighted_fn=weighted)


def _tempered_kernel(lam) -> AnalyticKernel:
    lam = complex(lam)

    def coeff(n, alpha, beta):
        return (-lam) ** n * cmath.exp(-math.lgamma(n + 1)) * rgamma(alpha)

    def weighted(n, alpha, beta):
        lg = log_gamma(beta * n + alpha) - math.lgamma(n + 1) - log_gamma(alpha)
        return (-lam) ** n * cmath.exp(lg)

    return AnalyticKernel(coeff, math.inf, f"tempered(lambda={lam.real:g})", weighted_fn=weighted)


def _prabhakar_kernel(rho) -> AnalyticKernel:
    rho = complex(rho)

    def coeff(n, alpha, beta):
        return pochhammer(rho, n) * cmath.exp(-math.lgamma(n + 1)) * rgamma(beta * n + alpha)

    def weighted(n, alpha, beta):
        # (rho)_n / n! by recurrence; gamma weight cancels the 1/gamma factor
        out = 1.0 + 0.0j
        for k in range(n):
            out *= (rho + k) / (k + 1)
        return out

    return AnalyticKernel(coeff, math.inf, f"prabhakar(rho={rho.real:g})", weighted_fn=weighted)


def _list_kernel(coeffs, radius) -> AnalyticKernel:
    table = tuple(complex(c) for c in coeffs)

    def coeff(n, alpha, beta):
        return table[n] if n < len(table) else 0.0j

    return AnalyticKernel(
        coeff, float(radius), "coeffs", max_index_hint=len(table) - 1
    )


def make_kernel_preset(name: str, params: dict | None = None) -> AnalyticKernel:
    """Build a preset kernel by name: rl, exp, tempered, prabhakar, coeffs."""
    params = dict(params or {})
    if name == "rl":
        return _rl_kernel()
    if name == "exp":
        return _exp_kernel()
    if name == "tempered":
        return _tempered_kernel(params.get("lambda", params.get("lam", 1.0)))
    if name == "prabhakar":
        return _prabhakar_kernel(params.get("rho", 0.5))
    if name == "coeffs":
        if "coeffs" not in params:
            raise InvalidParams("coeffs preset requires a coefficient list")
        coeffs = [
            complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c)
            for c in params["coeffs"]
        ]
        return _list_kernel(coeffs, params.get("radius", math.inf))
    raise UnknownPreset(f"unknown kernel preset {name!r}")


# ---------------------------------------------------------------------------
# series evaluation


def eval_kernel(
    kernel: AnalyticKernel,
    alpha,
    beta,
    z,
    trunc: TruncationPolicy = DEFAULT_TRUNCATION,
) -> complex:
    """Evaluate sum(a_n z^n) inside the disc of convergence."""
    z = complex(z)
    if abs(z) >= kernel.radius:
        raise OutOfDisc(
            f"|z| = {abs(z):g} outside disc of radius {kernel.radius:g} for {kernel.name}"
        )
    n_top = trunc.max_terms
    if kernel.max_index_hint is not None:
        n_top = min(n_top, kernel.max_index_hint + 1)
    if z == 0:
        return kernel.coeff(0, alpha, beta)
    acc = _SeriesAccumulator(trunc)
    zn = 1.0 + 0.0j
    for n in range(n_top):
        stop = acc.add(kernel.coeff(n, alpha, beta) * zn)
        zn *= z
        if stop:
            break
    if kernel.max_index_hint is not None and acc.n_terms >= kernel.max_index_hint + 1:
        return acc.total
    if not acc.converged():
        raise NoConvergence(
            f"kernel series for {kernel.name} did not meet tail tolerance "
            f"within {trunc.max_terms} terms at z = {z}"
        )
    return acc.total


def eval_gamma_series(
    kernel: AnalyticKernel,
    alpha,
    beta,
    z,
    trunc: TruncationPolicy = DEFAULT_TRUNCATION,
) -> complex:
    """Evaluate the gamma-weighted series sum(a_n gamma(beta n + alpha) z^n).

    The weighted series generally has a smaller disc of convergence than the
    kernel itself; divergence surfaces as NoConvergence.
    """
    z = complex(z)
    n_top = trunc.max_terms
    if kernel.max_index_hint is not None:
        n_top = min(n_top, kernel.max_index_hint + 1)
    acc = _SeriesAccumulator(trunc)
    zn = 1.0 + 0.0j
    for n in range(n_top):
        stop = acc.add(kernel.gamma_weighted(n, alpha, beta) * zn)
        zn *= z
        if stop:
            break
    if kernel.max_index_hint is not None and acc.n_terms >= kernel.max_index_hint + 1:
        return acc.total
    if not acc.converged():
        raise NoConvergence(
            f"gamma-weighted series for {kernel.name} did not converge at z = {z}"
        )
    return acc.total


@dataclass(frozen=True)
class GammaSeries:
    """Truncated gamma-weighted coefficient table for fixed orders."""

    alpha: complex
    beta: complex
    coeff: tuple
    source: AnalyticKernel

    def __call__(self, z) -> complex:
        z = complex(z)
        out = 0.0 + 0.0j
        zn = 1.0 + 0.0j
        for c in self.coeff:
            out += c * zn
            zn *= z
        return out


def gamma_series(kernel: AnalyticKernel, alpha, beta, n_max: int) -> GammaSeries:
    """Table of a_n gamma(beta n + alpha) for n = 0..n_max."""
    alpha = complex(alpha)
    beta = complex(beta)
    if not alpha.real > 0:
        raise InvalidParams("Re(alpha) must be positive")
    if not beta.real > 0:
        raise InvalidParams("Re(beta) must be positive")
    _require_no_poles(alpha, beta, n_max)
    coeffs = tuple(kernel.gamma_weighted(n, alpha, beta) for n in range(n_max + 1))
    return GammaSeries(alpha, beta, coeffs, kernel)


def _require_no_poles(alpha, beta, n_max: int) -> None:
    from .gammafn import is_gamma_pole

    for n in range(n_max + 1):
        arg = beta * n + alpha
        if is_gamma_pole(arg):
            raise GammaPole(f"beta*{n} + alpha = {arg} is a gamma pole")


# ---------------------------------------------------------------------------
# Cauchy products and series reciprocals


def cauchy_product(a, b, k_max: int) -> list:
    """out[k] = sum over p+q=k of a[p] b[q], for k = 0..k_max."""
    if len(a) < k_max + 1 or len(b) < k_max + 1:
        raise InvalidParams("coefficient lists must cover indices 0..k_max")
    out = []
    for k in range(k_max + 1):
        s = 0.0 + 0.0j
        for p in range(k + 1):
            s += complex(a[p]) * complex(b[k - p])
        out.append(s)
    return out


def _estimate_radius(coeffs: np.ndarray) -> float:
    """Ratio-test radius estimate from the tail of a coefficient vector."""
    mags = np.abs(coeffs)
    idx = np.nonzero(mags > 0.0)[0]
    if len(idx) <= 1:
        return math.inf
    ratios = []
    for i, j in zip(idx[:-1], idx[1:]):
        if j - i == 1:
            ratios.append(mags[i] / mags[j])
    if not ratios:
        return math.inf
    tail = ratios[-min(len(ratios), 5):]
    est = float(np.median(tail))
    if not math.isfinite(est) or est > 1e12:
        return math.inf
    return max(est, 1e-8)


class ReciprocalKernel(AnalyticKernel):
    """Kernel whose gamma-weighted series is 1 / (source's A_gamma).

    The weighted table is tied to the (alpha, beta, m) of the originating
    operator: the gamma weights are gamma(beta n + m - alpha), so the kernel
    must be used at order m - alpha with the same beta.
    """

    def __init__(self, source, alpha, beta, m, wtable, radius_estimate):
        alpha = complex(alpha)
        beta = complex(beta)
        wtable = tuple(complex(w) for w in wtable)
        n_max = len(wtable) - 1

        def coeff(n, a, b):
            if n > n_max:
                raise NoConvergence(
                    f"reciprocal kernel tabulated only up to index {n_max}"
                )
            return wtable[n] * rgamma(beta * n + m - alpha)

        def weighted(n, a, b):
            if abs(a - (m - alpha)) > 1e-12 or abs(b - beta) > 1e-12:
                raise InvalidParams(
                    "reciprocal kernel is tied to orders "
                    f"(alpha={m - alpha}, beta={beta}); got ({a}, {b})"
                )
            if n > n_max:
                raise NoConvergence(
                    f"reciprocal kernel tabulated only up to index {n_max}"
                )
            return wtable[n]

        super().__init__(
            coeff_fn=coeff,
            radius=radius_estimate,
            name=f"reciprocal({source.name}; alpha={alpha}, beta={beta}, m={m})",
            # reciprocal of a single-term kernel is single-term
            max_index_hint=0 if source.max_index_hint == 0 else None,
            weighted_fn=weighted,
        )
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "m", int(m))
        object.__setattr__(self, "weighted_table", wtable)
        object.__setattr__(self, "radius_estimate", radius_estimate)


def reciprocal_kernel(
    kernel: AnalyticKernel, alpha, beta, m: int, n_max: int
) -> ReciprocalKernel:
    """Coefficients abar_n with sum(a_p G(bp+a) abar_q G(bq+m-a), p+q=k) = [k=0].

    Forward recurrence on the weighted products W_k = abar_k gamma(beta k
    + m - alpha):  W_0 = 1/A_0 and W_k = -(sum_{q<k} W_q A_{k-q}) / A_0,
    where A_n = a_n gamma(beta n + alpha).
    """
    alpha = complex(alpha)
    beta = complex(beta)
    if m < 1:
        raise InvalidParams("m must be a positive integer")
    if not (m - alpha).real > 0:
        raise InvalidParams("Re(m - alpha) must be positive")
    a0 = kernel.coeff(0, alpha, beta)
    if a0 == 0:
        raise ZeroLeadingCoefficient(f"kernel {kernel.name} has a_0 = 0")
    _require_no_poles(alpha, beta, n_max)
    _require_no_poles(m - alpha, beta, n_max)
    A = weighted_coeffs(kernel, alpha, beta, n_max)
    if A[0] == 0:
        raise ZeroLeadingCoefficient(f"kernel {kernel.name} has A_gamma(0) = 0")
    W = np.zeros(n_max + 1, dtype=complex)
    W[0] = 1.0 / A[0]
    for k in range(1, n_max + 1):
        W[k] = -np.dot(W[:k], A[k:0:-1]) / A[0]
    raw = np.array(
        [W[n] * rgamma(beta * n + m - alpha) for n in range(n_max + 1)], dtype=complex
    )
    return ReciprocalKernel(kernel, alpha, beta, m, W, _estimate_radius(raw))


def freeze_kernel(kernel: AnalyticKernel, alpha, beta) -> AnalyticKernel:
    """Snapshot order-dependent coefficients at fixed (alpha, beta).

    The frozen kernel's coefficients are plain numbers a_n(alpha, beta); its
    gamma-weighted series at another order alpha' (same beta) is computed via
    the stable ratio gamma(beta n + alpha') / gamma(beta n + alpha).
    """
    alpha = complex(alpha)
    beta = complex(beta)
    src = kernel

    def coeff(n, a, b):
        return src.coeff(n, alpha, beta)

    def weighted(n, a, b):
        from .gammafn import gamma_ratio

        if b != beta:
            return src.coeff(n, alpha, beta) * gamma(b * n + a)
        return src.gamma_weighted(n, alpha, beta) * gamma_ratio(
            beta * n + a, beta * n + alpha
        )

    return AnalyticKernel(
        coeff,
        src.radius,
        f"frozen({src.name}; alpha={alpha}, beta={beta})",
        max_index_hint=src.max_index_hint,
        weighted_fn=weighted,
    )


# ---------------------------------------------------------------------------
# modified kernels for the m-fold composition identities


def modified_kernel_B(kernel: AnalyticKernel, alpha, beta, m: int) -> AnalyticKernel:
    """Kernel with b_n = a_n gamma(beta n + alpha) / gamma(beta n + alpha + m)."""
    alpha = complex(alpha)
    beta = complex(beta)
    if m < 0:
        raise InvalidParams("m must be non-negative")
    src = kernel

    def coeff(n, a, b):
        poch = pochhammer(beta * n + alpha, m)
        if poch == 0:
            raise GammaPole(
                f"gamma ratio pole at beta*{n} + alpha = {beta * n + alpha}"
            )
        return src.coeff(n, alpha, beta) / poch

    def weighted(n, a, b):
        # used at order alpha + m: weight gamma(beta n + alpha + m) cancels
        if abs(a - (alpha + m)) > 1e-12 or abs(b - beta) > 1e-12:
            return coeff(n, a, b) * gamma(b * n + a)
        return src.gamma_weighted(n, alpha, beta)

    return AnalyticKernel(
        coeff,
        src.radius,
        f"B[{src.name}; m={m}]",
        max_index_hint=src.max_index_hint,
        weighted_fn=weighted,
    )


def modified_kernel_C(kernel: AnalyticKernel, alpha, beta, m: int) -> AnalyticKernel:
    """Kernel with c_n = a_n gamma(beta n + alpha + m) / gamma(beta n + alpha)."""
    alpha = complex(alpha)
    beta = complex(beta)
    if m < 0:
        raise InvalidParams("m must be non-negative")
    src = kernel

    def coeff(n, a, b):
        return src.coeff(n, alpha, beta) * pochhammer(beta * n + alpha, m)

    def weighted(n, a, b):
        if abs(a - alpha) > 1e-12 or abs(b - beta) > 1e-12:
            return coeff(n, a, b) * gamma(b * n + a)
        return src.gamma_weighted(n, alpha, beta) * pochhammer(beta * n + alpha, m)

    return AnalyticKernel(
        coeff,
        src.radius,
        f"C[{src.name}; m={m}]",
        max_index_hint=src.max_index_hint,
        weighted_fn=weighted,
    )


# ---------------------------------------------------------------------------
# semigroup / composition condition checks


@dataclass(frozen=True)
class SemigroupReport:
    """Residual vector of a coefficient condition, k = 0..k_max."""

    k_max: int
    residuals: tuple
    passed: bool
    tolerance: float

    @property
    def max_residual(self) -> float:
        return max(abs(r) for r in self.residuals)

    def to_json(self) -> dict:
        return {
            "k_max": self.k_max,
            "residuals": [[r.real, r.imag] for r in self.residuals],
            "max_residual": self.max_residual,
            "passed": self.passed,
            "tolerance": self.tolerance,
        }


def check_semigroup_one_param(
    family: AnalyticKernel, alpha, gamma_, beta, k_max: int, tol: float = 1e-10
) -> SemigroupReport:
    """Residuals of the one-parameter order-addition condition.

    residual[k] = a_k(alpha+gamma, beta) G(beta k + alpha + gamma)
                  - sum_{m+n=k} a_n(alpha,...) a_m(gamma,...) G(beta n + alpha) G(beta m + gamma)
    """
    alpha = complex(alpha)
    gamma_ = complex(gamma_)
    beta = complex(beta)
    for par in (alpha, gamma_, alpha + gamma_):
        _require_no_poles(par, beta, k_max)
    As = weighted_coeffs(family, alpha, beta, k_max)
    Gs = weighted_coeffs(family, gamma_, beta, k_max)
    Sum = weighted_coeffs(family, alpha + gamma_, beta, k_max)
    conv = cauchy_product(As, Gs, k_max)
    residuals = tuple(Sum[k] - conv[k] for k in range(k_max + 1))
    passed = all(abs(r) <= tol for r in residuals)
    return SemigroupReport(k_max, residuals, passed, tol)


def check_composition_DI(
    family: AnalyticKernel, alpha, gamma_, beta, k_max: int, tol: float = 1e-10
) -> SemigroupReport:
    """Residuals of the derivative-of-integral composition condition.

    residual[k] = abar_k(alpha-gamma) G(beta k - alpha + gamma + m)
                  - sum_{n+p=k} abar_n(alpha) a_p(gamma) G(beta n - alpha + m) G(beta p + gamma)
    with m = floor(Re alpha) + 1.
    """
    alpha = complex(alpha)
    gamma_ = complex(gamma_)
    beta = complex(beta)
    if not gamma_.real < alpha.real:
        raise InvalidParams("Re(gamma) must be less than Re(alpha)")
    m = math.floor(alpha.real) + 1
    Wa = reciprocal_kernel(family, alpha, beta, m, k_max).weighted_table
    Wd = reciprocal_kernel(family, alpha - gamma_, beta, m, k_max).weighted_table
    Gs = weighted_coeffs(family, gamma_, beta, k_max)
    conv = cauchy_product(np.array(Wa), Gs, k_max)
    residuals = tuple(Wd[k] - conv[k] for k in range(k_max + 1))
    passed = all(abs(r) <= tol for r in residuals)
    return SemigroupReport(k_max, residuals, passed, tol)


def two_param_cross_term_max(
    family: AnalyticKernel, alpha, beta, gamma_, delta, n_max: int = 10
) -> tuple:
    """Largest |a_n G(beta n + alpha) a_m G(delta m + gamma)| over m != n.

    A two-parameter order-addition law would force every such cross term to
    vanish; any nonzero one witnesses its failure.  Single-term kernels have
    no nonzero cross terms at all (the degenerate case where the law holds).
    """
    A = weighted_coeffs(family, alpha, beta, n_max)
    G = weighted_coeffs(family, gamma_, delta, n_max)
    best = 0.0
    best_pair = (0, 0)
    for n in range(n_max + 1):
        for m in range(n_max + 1):
            if m == n:
                continue
            mag = abs(A[n] * G[m])
            if mag > best:
                best = mag
                best_pair = (n, m)
    return best, best_pair
