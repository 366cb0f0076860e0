"""Parametric families, maximum-likelihood fitting and goodness-of-fit ranking.

Every family uses one fixed parameterization, written out in the registry
below, so fitted parameter vectors are portable between runs and reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.special import (
    digamma,
    gammainc,
    gammaincc,
    gammainccinv,
    gammaincinv,
    gammaln,
    kve,
    ndtr,
    ndtri,
    polygamma,
)

from .core import RandomStream

MIXTURE_WEIBULL_WEIGHT = 0.2
MIXTURE_NORMAL_WEIGHT = 0.8

MAX_FIT_ITERATIONS = 500
FIT_TOLERANCE = 1e-8

# order doubles as the tie-break rule when CvM p-values are equal
CANONICAL_FAMILIES = (
    "exponential",
    "weibull",
    "gamma",
    "log-normal",
    "inverse-gamma",
    "log-logistic",
    "gompertz",
    "normal",
    "cauchy",
    "gumbel",
    "weibull-normal-mixture",
)

_EULER_GAMMA = 0.5772156649015329


class DomainError(ValueError):
    """Parameters or evaluation points outside the family's domain."""


class SupportError(ValueError):
    """Sample values outside the support of the requested family."""


class FitFailureError(RuntimeError):
    """Maximum-likelihood estimation could not produce usable parameters."""


class SelectionError(RuntimeError):
    """No candidate family could be fitted to the sample."""


@dataclass(frozen=True)
class _FamilyMeta:
    param_names: tuple[str, ...]
    positive: tuple[bool, ...]  # which parameters must be > 0
    positive_support: bool


_FAMILY_META: dict[str, _FamilyMeta] = {
    "exponential": _FamilyMeta(("rate",), (True,), True),
    "weibull": _FamilyMeta(("shape", "scale"), (True, True), True),
    "gamma": _FamilyMeta(("shape", "rate"), (True, True), True),
    "log-normal": _FamilyMeta(("meanlog", "sdlog"), (False, True), True),
    "inverse-gamma": _FamilyMeta(("shape", "rate"), (True, True), True),
    "log-logistic": _FamilyMeta(("shape", "scale"), (True, True), True),
    "gompertz": _FamilyMeta(("shape", "rate"), (True, True), True),
    "normal": _FamilyMeta(("mean", "sd"), (False, True), False),
    "cauchy": _FamilyMeta(("location", "scale"), (False, True), False),
    "gumbel": _FamilyMeta(("location", "scale"), (False, True), False),
    "weibull-normal-mixture": _FamilyMeta(
        ("weibull_shape", "weibull_scale", "normal_mean", "normal_sd"),
        (True, True, False, True),
        False,
    ),
}


@dataclass(frozen=True)
class ParametricFamily:
    """A family identifier plus a concrete parameter vector."""

    family_id: str
    parameters: tuple[float, ...]

    def __post_init__(self) -> None:
        meta = _FAMILY_META.get(self.family_id)
        if meta is None:
            raise DomainError(f"unknown family {self.family_id!r}")
        object.__setattr__(self, "parameters", tuple(float(p) for p in self.parameters))
        if len(self.parameters) != len(meta.param_names):
            raise DomainError(
                f"{self.family_id} takes {len(meta.param_names)} parameters "
                f"({', '.join(meta.param_names)}), got {len(self.parameters)}"
            )
        for name, value, must_be_positive in zip(meta.param_names, self.parameters, meta.positive):
            if not math.isfinite(value):
                raise DomainError(f"{self.family_id} parameter {name} must be finite, got {value}")
            if must_be_positive and value <= 0.0:
                raise DomainError(f"{self.family_id} parameter {name} must be > 0, got {value}")

    @property
    def positive_support(self) -> bool:
        return _FAMILY_META[self.family_id].positive_support


@dataclass
class FittedDistribution:
    """One fitted candidate with its goodness-of-fit scores."""

    family: ParametricFamily
    log_likelihood: float
    cvm_statistic: float
    cvm_p_value: float
    converged: bool

    def to_json(self) -> dict:
        return {
            "family": self.family.family_id,
            "parameters": list(self.family.parameters),
            "log_likelihood": self.log_likelihood,
            "cvm_statistic": self.cvm_statistic,
            "cvm_p_value": self.cvm_p_value,
            "converged": self.converged,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "FittedDistribution":
        return cls(
            family=ParametricFamily(raw["family"], tuple(raw["parameters"])),
            log_likelihood=float(raw["log_likelihood"]),
            cvm_statistic=float(raw["cvm_statistic"]),
            cvm_p_value=float(raw["cvm_p_value"]),
            converged=bool(raw["converged"]),
        )


def _generator(rng: RandomStream | np.random.Generator) -> np.random.Generator:
    if isinstance(rng, RandomStream):
        return rng.generator
    return rng


# ---------------------------------------------------------------------------
# density / distribution / quantile functions, one triple per family


def _norm_logpdf(x, mean, sd):
    z = (x - mean) / sd
    return -0.5 * z * z - math.log(sd) - 0.5 * math.log(2.0 * math.pi)


def _weibull_logpdf(x, shape, scale):
    z = x / scale
    return math.log(shape / scale) + (shape - 1.0) * np.log(z) - z**shape


def _mixture_logpdf(x, wshape, wscale, nmean, nsd):
    x = np.asarray(x, dtype=float)
    norm_part = math.log(MIXTURE_NORMAL_WEIGHT) + _norm_logpdf(x, nmean, nsd)
    weib_part = np.full_like(norm_part, -np.inf)
    pos = x > 0.0
    if np.any(pos):
        weib_part = np.where(
            pos,
            math.log(MIXTURE_WEIBULL_WEIGHT) + _weibull_logpdf(np.where(pos, x, 1.0), wshape, wscale),
            -np.inf,
        )
    return np.logaddexp(weib_part, norm_part)


def mixture_pdf(
    x, weibull_shape: float, weibull_scale: float, normal_mean: float, normal_sd: float
) -> np.ndarray | float:
    """Density of the fixed-weight Weibull(0.2) + normal(0.8) mixture."""
    fam = ParametricFamily(
        "weibull-normal-mixture", (weibull_shape, weibull_scale, normal_mean, normal_sd)
    )
    return pdf(fam, x)


def _mixture_cdf(x, wshape, wscale, nmean, nsd):
    x = np.asarray(x, dtype=float)
    weib = np.where(x > 0.0, -np.expm1(-((np.maximum(x, 0.0) / wscale) ** wshape)), 0.0)
    return MIXTURE_WEIBULL_WEIGHT * weib + MIXTURE_NORMAL_WEIGHT * ndtr((x - nmean) / nsd)


def _mixture_quantile_scalar(p: float, params: tuple[float, ...]) -> float:
    wshape, wscale, nmean, nsd = params
    lo = min(nmean + nsd * ndtri(p), 0.0) - 1.0
    hi = max(nmean + nsd * ndtri(p), wscale * (-math.log1p(-p)) ** (1.0 / wshape)) + 1.0
    while _mixture_cdf(lo, *params) > p:
        lo -= 2.0 * (hi - lo)
    while _mixture_cdf(hi, *params) < p:
        hi += 2.0 * (hi - lo)
    return float(optimize.brentq(lambda t: _mixture_cdf(t, *params) - p, lo, hi, xtol=1e-12))


def _logpdf(family: ParametricFamily, x: np.ndarray) -> np.ndarray:
    p = family.parameters
    fid = family.family_id
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if fid == "exponential":
            return math.log(p[0]) - p[0] * x
        if fid == "weibull":
            return _weibull_logpdf(x, p[0], p[1])
        if fid == "gamma":
            return p[0] * math.log(p[1]) + (p[0] - 1.0) * np.log(x) - p[1] * x - gammaln(p[0])
        if fid == "log-normal":
            return _norm_logpdf(np.log(x), p[0], p[1]) - np.log(x)
        if fid == "inverse-gamma":
            return p[0] * math.log(p[1]) - gammaln(p[0]) - (p[0] + 1.0) * np.log(x) - p[1] / x
        if fid == "log-logistic":
            z = np.log(x / p[1]) * p[0]
            return math.log(p[0] / p[1]) + (p[0] - 1.0) * np.log(x / p[1]) - 2.0 * np.logaddexp(0.0, z)
        if fid == "gompertz":
            return math.log(p[1]) + p[0] * x - (p[1] / p[0]) * np.expm1(p[0] * x)
        if fid == "normal":
            return _norm_logpdf(x, p[0], p[1])
        if fid == "cauchy":
            z = (x - p[0]) / p[1]
            return -np.log(math.pi * p[1] * (1.0 + z * z))
        if fid == "gumbel":
            z = (x - p[0]) / p[1]
            return -math.log(p[1]) - z - np.exp(-z)
        if fid == "weibull-normal-mixture":
            return _mixture_logpdf(x, *p)
    raise DomainError(f"unknown family {fid!r}")


def _cdf(family: ParametricFamily, x: np.ndarray) -> np.ndarray:
    p = family.parameters
    fid = family.family_id
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if fid == "exponential":
            return -np.expm1(-p[0] * x)
        if fid == "weibull":
            return -np.expm1(-((x / p[1]) ** p[0]))
        if fid == "gamma":
            return gammainc(p[0], p[1] * x)
        if fid == "log-normal":
            return ndtr((np.log(x) - p[0]) / p[1])
        if fid == "inverse-gamma":
            return gammaincc(p[0], p[1] / x)
        if fid == "log-logistic":
            z = (x / p[1]) ** p[0]
            return z / (1.0 + z)
        if fid == "gompertz":
            return -np.expm1(-(p[1] / p[0]) * np.expm1(p[0] * x))
        if fid == "normal":
            return ndtr((x - p[0]) / p[1])
        if fid == "cauchy":
            return 0.5 + np.arctan((x - p[0]) / p[1]) / math.pi
        if fid == "gumbel":
            return np.exp(-np.exp(-(x - p[0]) / p[1]))
        if fid == "weibull-normal-mixture":
            return _mixture_cdf(x, *p)
    raise DomainError(f"unknown family {fid!r}")


def _quantile(family: ParametricFamily, q: np.ndarray) -> np.ndarray:
    p = family.parameters
    fid = family.family_id
    if fid == "exponential":
        return -np.log1p(-q) / p[0]
    if fid == "weibull":
        return p[1] * (-np.log1p(-q)) ** (1.0 / p[0])
    if fid == "gamma":
        return gammaincinv(p[0], q) / p[1]
    if fid == "log-normal":
        return np.exp(p[0] + p[1] * ndtri(q))
    if fid == "inverse-gamma":
        return p[1] / gammainccinv(p[0], q)
    if fid == "log-logistic":
        return p[1] * (q / (1.0 - q)) ** (1.0 / p[0])
    if fid == "gompertz":
        return np.log1p(-(p[0] / p[1]) * np.log1p(-q)) / p[0]
    if fid == "normal":
        return p[0] + p[1] * ndtri(q)
    if fid == "cauchy":
        return p[0] + p[1] * np.tan(math.pi * (q - 0.5))
    if fid == "gumbel":
        return p[0] - p[1] * np.log(-np.log(q))
    if fid == "weibull-normal-mixture":
        return np.array([_mixture_quantile_scalar(float(v), p) for v in np.atleast_1d(q)])
    raise DomainError(f"unknown family {fid!r}")


def _check_support(family: ParametricFamily, x: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{what} must be finite for family {family.family_id}")
    if family.positive_support and np.any(x <= 0.0):
        raise SupportError(f"family {family.family_id} is supported on x > 0 only")


def _scalar_or_array(values: np.ndarray, scalar_in: bool):
    return float(values.reshape(())) if scalar_in else values


def pdf(family: ParametricFamily, x) -> np.ndarray | float:
    arr = np.asarray(x, dtype=float)
    _check_support(family, arr, "x")
    out = np.exp(_logpdf(family, arr))
    return _scalar_or_array(out, arr.ndim == 0)


def cdf(family: ParametricFamily, x) -> np.ndarray | float:
    arr = np.asarray(x, dtype=float)
    _check_support(family, arr, "x")
    out = np.asarray(_cdf(family, arr), dtype=float)
    return _scalar_or_array(out, arr.ndim == 0)


def quantile(family: ParametricFamily, q) -> np.ndarray | float:
    arr = np.asarray(q, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError("quantile levels must lie strictly inside (0, 1)")
    out = np.asarray(_quantile(family, arr), dtype=float)
    return _scalar_or_array(out, arr.ndim == 0)


def sample(family: ParametricFamily, n: int, rng: RandomStream | np.random.Generator) -> np.ndarray:
    """Draw n values from the family, deterministically under a fixed stream."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    gen = _generator(rng)
    p = family.parameters
    fid = family.family_id
    if fid == "gamma":
        return gen.gamma(p[0], 1.0, size=n) / p[1]
    if fid == "inverse-gamma":
        return p[1] / gen.gamma(p[0], 1.0, size=n)
    if fid == "log-normal":
        return np.exp(p[0] + p[1] * gen.standard_normal(n))
    if fid == "normal":
        return p[0] + p[1] * gen.standard_normal(n)
    if fid == "weibull-normal-mixture":
        pick_weibull = gen.random(n) < MIXTURE_WEIBULL_WEIGHT
        out = np.empty(n, dtype=float)
        n_weib = int(np.count_nonzero(pick_weibull))
        weib = ParametricFamily("weibull", (p[0], p[1]))
        out[pick_weibull] = _quantile(weib, gen.random(n_weib))
        out[~pick_weibull] = p[2] + p[3] * gen.standard_normal(n - n_weib)
        return out
    # closed-form quantile families go through the inverse transform
    return np.asarray(_quantile(family, gen.random(n)), dtype=float)


# ---------------------------------------------------------------------------
# Cramer-von Mises one-sample test


def _cvm_cdf_asymptotic(w2: float) -> float:
    """Limiting distribution of the one-sample statistic, evaluated at w2."""
    if w2 <= 0.0:
        return 0.0
    if w2 >= 12.0:
        return 1.0
    total = 0.0
    for k in range(200):
        y = 4.0 * k + 1.0
        q = y * y / (16.0 * w2)
        # kve = exp(q) * kv keeps the product stable when q is large
        term = (
            math.exp(gammaln(k + 0.5) - gammaln(k + 1))
            / (math.pi**1.5 * math.sqrt(w2))
            * math.sqrt(y)
            * math.exp(-2.0 * q)
            * float(kve(0.25, q))
        )
        total += term
        if term < 1e-13:
            break
    return min(max(total, 0.0), 1.0)


def cvm_test(sample_values, family: ParametricFamily) -> tuple[float, float]:
    """One-sample Cramer-von Mises statistic and asymptotic p-value."""
    x = np.sort(np.asarray(sample_values, dtype=float))
    if x.size == 0:
        raise ValueError("cvm_test needs at least one observation")
    _check_support(family, x, "sample")
    n = x.size
    u = np.asarray(_cdf(family, x), dtype=float)
    i = np.arange(1, n + 1)
    w2 = 1.0 / (12.0 * n) + float(np.sum(((2.0 * i - 1.0) / (2.0 * n) - u) ** 2))
    p_value = 1.0 - _cvm_cdf_asymptotic(w2)
    return w2, min(max(p_value, 0.0), 1.0)


# ---------------------------------------------------------------------------
# maximum likelihood


def _weibull_moment_start(x: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(x))
    sd = float(np.std(x))
    if sd == 0.0 or mean <= 0.0:
        return 1.0, max(mean, 1e-6)
    shape = float(np.clip((sd / mean) ** -1.086, 0.05, 50.0))
    scale = mean / math.gamma(1.0 + 1.0 / shape)
    return shape, max(scale, 1e-12)


def _gompertz_start(x: np.ndarray) -> tuple[float, float]:
    m = float(np.quantile(x, 0.5))
    q = float(np.quantile(x, 0.9))
    ratio = math.log(10.0) / math.log(2.0)
    if m <= 0.0 or q <= m or q / m >= ratio:
        a = 1e-4 / max(float(np.mean(x)), 1e-12)
    else:

        def gap(a_try: float) -> float:
            return math.expm1(a_try * q) / math.expm1(a_try * m) - ratio

        lo, hi = 1e-8 / m, 50.0 / m
        a = float(optimize.brentq(gap, lo, hi)) if gap(lo) < 0.0 < gap(hi) else 1e-4 / m
    b = a * math.log(2.0) / math.expm1(a * m) if a * m < 700 else 1.0 / m
    return max(a, 1e-12), max(b, 1e-12)


def _start_values(family_id: str, x: np.ndarray) -> tuple[float, ...]:
    mean = float(np.mean(x))
    var = float(np.var(x))
    if family_id == "exponential":
        return (1.0 / mean,)
    if family_id == "weibull":
        return _weibull_moment_start(x)
    if family_id == "gamma":
        shape = float(np.clip(mean * mean / var, 1e-3, 1e6))
        return shape, shape / mean
    if family_id == "log-normal":
        lx = np.log(x)
        return float(np.mean(lx)), max(float(np.std(lx)), 1e-9)
    if family_id == "inverse-gamma":
        shape = mean * mean / var + 2.0
        return shape, mean * (shape - 1.0)
    if family_id == "log-logistic":
        lx = np.log(x)
        spread = max(float(np.std(lx)), 1e-9)
        return math.pi / (math.sqrt(3.0) * spread), math.exp(float(np.mean(lx)))
    if family_id == "gompertz":
        return _gompertz_start(x)
    if family_id == "normal":
        return mean, max(math.sqrt(var), 1e-9)
    if family_id == "cauchy":
        q1, q3 = np.quantile(x, [0.25, 0.75])
        spread = max(float(q3 - q1) / 2.0, 1e-9 * max(abs(mean), 1.0), 1e-12)
        return float(np.median(x)), spread
    if family_id == "gumbel":
        scale = max(math.sqrt(6.0 * var) / math.pi, 1e-9)
        return mean - _EULER_GAMMA * scale, scale
    if family_id == "weibull-normal-mixture":
        med = float(np.median(x))
        lower = x[x <= med]
        upper = x[x > med]
        if lower.size >= 2 and np.min(lower) > 0.0:
            wshape, wscale = _weibull_moment_start(lower)
        else:
            wshape, wscale = 1.0, max(abs(med), 1.0)
        if upper.size >= 2:
            nmean, nsd = float(np.mean(upper)), max(float(np.std(upper)), 1e-9)
        else:
            nmean, nsd = mean, max(math.sqrt(var), 1e-9)
        return wshape, wscale, nmean, nsd
    raise DomainError(f"unknown family {family_id!r}")


def _loglik(family_id: str, params: tuple[float, ...], x: np.ndarray) -> float:
    try:
        fam = ParametricFamily(family_id, params)
    except DomainError:
        return -np.inf
    vals = _logpdf(fam, x)
    total = float(np.sum(vals))
    return total if math.isfinite(total) else -np.inf


def _fit_inverse_gamma(x: np.ndarray) -> tuple[tuple[float, float], bool]:
    """Newton-Raphson on the profiled shape score, damped for stability."""
    m1 = float(np.mean(1.0 / x))
    mlog = float(np.mean(np.log(x)))
    rhs = math.log(m1) + mlog
    if rhs <= 0.0:
        raise FitFailureError("inverse-gamma score has no root for this sample")

    def score(a: float) -> float:
        return math.log(a) - float(digamma(a)) - rhs

    alpha = max(float(np.mean(x)) ** 2 / max(float(np.var(x)), 1e-300) + 2.0, 1e-2)
    g = score(alpha)
    converged = False
    for _ in range(MAX_FIT_ITERATIONS):
        slope = 1.0 / alpha - float(polygamma(1, alpha))
        step = g / slope
        new_alpha = alpha - step
        for _ in range(60):
            if new_alpha > 0.0 and abs(score(new_alpha)) <= abs(g):
                break
            step *= 0.5
            new_alpha = alpha - step
        moved = abs(new_alpha - alpha)
        alpha = new_alpha
        g = score(alpha)
        if abs(g) < 1e-13 or moved <= FIT_TOLERANCE * (1.0 + alpha):
            converged = True
            break
    return (alpha, alpha / m1), converged


def _fit_exponential(x: np.ndarray) -> tuple[tuple[float], bool]:
    n = x.size
    total = float(np.sum(x))

    def objective(u: np.ndarray) -> tuple[float, np.ndarray]:
        rate = math.exp(float(u[0]))
        return -(n * float(u[0]) - rate * total), np.array([-(n - rate * total)])

    res = optimize.minimize(
        objective,
        x0=np.array([math.log(1.0 / float(np.mean(x)))]),
        jac=True,
        method="BFGS",
        options={"maxiter": MAX_FIT_ITERATIONS, "gtol": FIT_TOLERANCE},
    )
    return (math.exp(float(res.x[0])),), bool(res.success)


def _fit_nelder_mead(
    family_id: str, x: np.ndarray, start: tuple[float, ...]
) -> tuple[tuple[float, ...], bool]:
    positive = _FAMILY_META[family_id].positive

    def to_natural(y: np.ndarray) -> tuple[float, ...]:
        return tuple(
            math.exp(min(v, 700.0)) if pos else float(v) for v, pos in zip(y, positive)
        )

    def objective(y: np.ndarray) -> float:
        ll = _loglik(family_id, to_natural(y), x)
        return -ll if math.isfinite(ll) else 1e300

    y0 = np.array([math.log(s) if pos else s for s, pos in zip(start, positive)])
    res = optimize.minimize(
        objective,
        y0,
        method="Nelder-Mead",
        options={
            "maxiter": MAX_FIT_ITERATIONS,
            "maxfev": 4 * MAX_FIT_ITERATIONS,
            "xatol": FIT_TOLERANCE,
            "fatol": FIT_TOLERANCE,
        },
    )
    return to_natural(res.x), bool(res.success)


def fit_mle(family_id: str, sample_values) -> FittedDistribution:
    """Fit one family by maximum likelihood and score it with the CvM test."""
    if family_id not in _FAMILY_META:
        raise DomainError(f"unknown family {family_id!r}")
    x = np.asarray(sample_values, dtype=float)
    if x.size < 2:
        raise FitFailureError(f"{family_id}: need at least 2 observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample must be finite")
    if float(np.min(x)) == float(np.max(x)):
        raise FitFailureError(f"{family_id}: degenerate sample, all values equal")
    if _FAMILY_META[family_id].positive_support and float(np.min(x)) <= 0.0:
        raise SupportError(f"family {family_id} needs a strictly positive sample")

    start = _start_values(family_id, x)
    start_ll = _loglik(family_id, start, x)
    if not math.isfinite(start_ll):
        raise FitFailureError(f"{family_id}: likelihood not finite at the starting point")

    if family_id == "exponential":
        params, converged = _fit_exponential(x)
    elif family_id == "inverse-gamma":
        params, converged = _fit_inverse_gamma(x)
    else:
        params, converged = _fit_nelder_mead(family_id, x, start)

    ll = _loglik(family_id, params, x)
    if not math.isfinite(ll) or ll < start_ll:
        # never return something worse than the moment start
        params, ll, converged = start, start_ll, False
    family = ParametricFamily(family_id, params)
    statistic, p_value = cvm_test(x, family)
    return FittedDistribution(family, ll, statistic, p_value, converged)


def fit_candidates(sample_values) -> tuple[list[FittedDistribution], dict[str, str]]:
    """Fit every canonical family; returns successes plus skip reasons."""
    fits: list[FittedDistribution] = []
    failures: dict[str, str] = {}
    for family_id in CANONICAL_FAMILIES:
        try:
            fits.append(fit_mle(family_id, sample_values))
        except (SupportError, FitFailureError) as exc:
            failures[family_id] = str(exc)
    return fits, failures


def select_distribution(sample_values) -> FittedDistribution:
    """Pick the candidate with the largest CvM p-value.

    Ties fall back to the canonical family order, so reruns on the same
    sample are reproducible.
    """
    x = np.asarray(sample_values, dtype=float)
    if x.size < 5:
        raise SelectionError(f"need at least 5 observations to select a family, got {x.size}")
    fits, failures = fit_candidates(x)
    if not fits:
        detail = "; ".join(f"{k}: {v}" for k, v in failures.items())
        raise SelectionError(f"no candidate family could be fitted ({detail})")
    best = fits[0]
    for fit in fits[1:]:
        if fit.cvm_p_value > best.cvm_p_value:
            best = fit
    return best
