"""Two-arm comparison statistics: logrank, Cox hazard ratio, medians, RMST."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .core import ArmData, KmCurve, StudyDataset, km_estimate, median_survival

COX_MAX_ITERATIONS = 200
COX_SCORE_TOL = 1e-10
# a fitted log hazard ratio beyond this is treated as monotone likelihood
COX_BETA_LIMIT = 15.0


class DegenerateTestError(RuntimeError):
    """The requested statistic is undefined on this dataset."""


@dataclass
class LogrankResult:
    statistic: float
    p_value: float
    observed_arm1: float
    expected_arm1: float
    variance: float


@dataclass
class CoxResult:
    """exp(beta) compares the hazard of the first arm against the second."""

    hazard_ratio: float | None
    log_hazard_ratio: float | None
    converged: bool
    iterations: int


@dataclass
class EvaluationResult:
    logrank_statistic: float | None
    logrank_p: float | None
    hazard_ratio: float | None
    medians: dict[str, float | None]
    tau: float
    rmstd: float
    tie_ratio: float

    def to_json(self) -> dict:
        return {
            "logrank_statistic": self.logrank_statistic,
            "logrank_p": self.logrank_p,
            "hazard_ratio": self.hazard_ratio,
            "medians": self.medians,
            "tau": self.tau,
            "rmstd": self.rmstd,
            "tie_ratio": self.tie_ratio,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "EvaluationResult":
        return cls(
            logrank_statistic=raw["logrank_statistic"],
            logrank_p=raw["logrank_p"],
            hazard_ratio=raw["hazard_ratio"],
            medians=dict(raw["medians"]),
            tau=float(raw["tau"]),
            rmstd=float(raw["rmstd"]),
            tie_ratio=float(raw["tie_ratio"]),
        )


@dataclass
class _EventTable:
    """Pooled risk/event counts at each distinct event time."""

    n1: np.ndarray  # at risk, first arm
    n0: np.ndarray  # at risk, second arm
    d1: np.ndarray  # events, first arm
    d0: np.ndarray  # events, second arm


def _at_risk(sorted_times: np.ndarray, at_times: np.ndarray) -> np.ndarray:
    return sorted_times.size - np.searchsorted(sorted_times, at_times, side="left")


def _event_counts(times: np.ndarray, status: np.ndarray, at_times: np.ndarray) -> np.ndarray:
    ev, counts = np.unique(times[status == 1], return_counts=True)
    out = np.zeros(at_times.size, dtype=float)
    if ev.size == 0:
        return out
    idx = np.searchsorted(ev, at_times)
    hit = (idx < ev.size) & (ev[np.minimum(idx, ev.size - 1)] == at_times)
    out[hit] = counts[idx[hit]]
    return out


def _build_event_table(dataset: StudyDataset) -> _EventTable:
    arm1, arm2 = dataset.arms
    t1, s1 = arm1.times(), arm1.statuses()
    t2, s2 = arm2.times(), arm2.statuses()
    pooled_events = np.unique(np.concatenate([t1[s1 == 1], t2[s2 == 1]]))
    if pooled_events.size == 0:
        raise DegenerateTestError("dataset has no events")
    return _EventTable(
        n1=_at_risk(np.sort(t1), pooled_events).astype(float),
        n0=_at_risk(np.sort(t2), pooled_events).astype(float),
        d1=_event_counts(t1, s1, pooled_events),
        d0=_event_counts(t2, s2, pooled_events),
    )


def logrank_test(dataset: StudyDataset) -> LogrankResult:
    """Two-sided logrank test with the hypergeometric tie correction."""
    tab = _build_event_table(dataset)
    n = tab.n1 + tab.n0
    d = tab.d1 + tab.d0
    expected = d * tab.n1 / n
    with np.errstate(divide="ignore", invalid="ignore"):
        tie_factor = np.where(n > 1.0, (n - d) / (n - 1.0), 0.0)
    variance = d * (tab.n1 / n) * (1.0 - tab.n1 / n) * tie_factor
    observed = float(np.sum(tab.d1))
    e_total = float(np.sum(expected))
    v_total = float(np.sum(variance))
    if v_total <= 0.0:
        raise DegenerateTestError("logrank variance is zero for this dataset")
    statistic = (observed - e_total) ** 2 / v_total
    p_value = float(erfc(math.sqrt(statistic / 2.0)))  # chi-square sf, 1 df
    return LogrankResult(statistic, p_value, observed, e_total, v_total)


def _cox_terms(tab: _EventTable, ties: str) -> tuple[np.ndarray, ...]:
    # expand per event time into one row per Efron correction step
    d = tab.d1 + tab.d0
    if ties == "breslow":
        fracs = np.zeros(d.size)
        n1 = tab.n1
        n0 = tab.n0
        f1 = np.zeros(d.size)
        f0 = np.zeros(d.size)
        weights = d
    elif ties == "efron":
        reps = d.astype(int)
        fracs = np.concatenate([np.arange(k) / k for k in reps])
        n1 = np.repeat(tab.n1, reps)
        n0 = np.repeat(tab.n0, reps)
        f1 = np.repeat(tab.d1, reps)
        f0 = np.repeat(tab.d0, reps)
        weights = np.ones(fracs.size)
    else:
        raise ValueError(f"ties must be 'efron' or 'breslow', got {ties!r}")
    return n1, n0, f1, f0, fracs, weights


def _cox_loglik_parts(
    beta: float, terms: tuple[np.ndarray, ...], d1_total: float
) -> tuple[float, float, float]:
    n1, n0, f1, f0, fracs, weights = terms
    r = math.exp(min(max(beta, -700.0), 700.0))
    denom = (n0 - fracs * f0) + (n1 - fracs * f1) * r
    numer = (n1 - fracs * f1) * r
    u = numer / denom
    ll = beta * d1_total - float(np.sum(weights * np.log(denom)))
    score = d1_total - float(np.sum(weights * u))
    hessian = -float(np.sum(weights * u * (1.0 - u)))
    return ll, score, hessian


def cox_partial_loglik(dataset: StudyDataset, beta: float, ties: str = "efron") -> float:
    """Partial log-likelihood with the first arm as the indicator group."""
    tab = _build_event_table(dataset)
    terms = _cox_terms(tab, ties)
    return _cox_loglik_parts(beta, terms, float(np.sum(tab.d1)))[0]


def cox_score(dataset: StudyDataset, beta: float, ties: str = "efron") -> float:
    tab = _build_event_table(dataset)
    terms = _cox_terms(tab, ties)
    return _cox_loglik_parts(beta, terms, float(np.sum(tab.d1)))[1]


def cox_hazard_ratio(dataset: StudyDataset, ties: str = "efron") -> CoxResult:
    """Newton-Raphson fit of the single-covariate proportional-hazards model.

    The step is halved until the log-likelihood improves; a run toward
    infinite beta (monotone likelihood) is reported as non-convergence
    with the hazard ratio absent.
    """
    tab = _build_event_table(dataset)
    d1_total = float(np.sum(tab.d1))
    terms = _cox_terms(tab, ties)
    beta = 0.0
    ll, score, hessian = _cox_loglik_parts(beta, terms, d1_total)
    iterations = 0
    for iterations in range(1, COX_MAX_ITERATIONS + 1):
        if abs(score) < COX_SCORE_TOL and abs(beta) <= COX_BETA_LIMIT:
            return CoxResult(math.exp(beta), beta, True, iterations - 1)
        if hessian >= -1e-300:
            break  # flat likelihood, nothing to climb
        step = -score / hessian
        new_beta = beta + step
        new_ll, new_score, new_hessian = _cox_loglik_parts(new_beta, terms, d1_total)
        halvings = 0
        while new_ll < ll - 1e-12 and halvings < 40:
            step *= 0.5
            new_beta = beta + step
            new_ll, new_score, new_hessian = _cox_loglik_parts(new_beta, terms, d1_total)
            halvings += 1
        beta, ll, score, hessian = new_beta, new_ll, new_score, new_hessian
        if abs(beta) > COX_BETA_LIMIT:
            break  # monotone likelihood
    return CoxResult(None, None, False, iterations)


def _arm_max_is_censored(arm: ArmData) -> bool:
    times = arm.times()
    status = arm.statuses()
    max_event = float(np.max(times[status == 1])) if np.any(status == 1) else -math.inf
    max_censor = float(np.max(times[status == 0])) if np.any(status == 0) else -math.inf
    # a censored subject recorded at the shared maximum is still at risk there
    return max_censor >= max_event and max_censor > -math.inf


def rmst_tau(dataset: StudyDataset) -> float:
    """Common restriction time for restricted-mean comparisons.

    If both arm maxima are censored the lower of the two wins; otherwise
    the largest censoring time in the whole dataset is used, falling back
    to the overall maximum time when nothing is censored.
    """
    arm1, arm2 = dataset.arms
    c1 = _arm_max_is_censored(arm1)
    c2 = _arm_max_is_censored(arm2)
    if c1 and c2:
        return min(float(np.max(arm1.times())), float(np.max(arm2.times())))
    censored_times = [
        o.time for arm in dataset.arms for o in arm.observations if o.status == 0
    ]
    if censored_times:
        return max(censored_times)
    return max(float(np.max(arm1.times())), float(np.max(arm2.times())))


def rmst_from_curve(curve: KmCurve, tau: float) -> float:
    area = 0.0
    prev_time = 0.0
    prev_surv = 1.0
    for step in curve.steps:
        if step.time >= tau:
            break
        area += prev_surv * (step.time - prev_time)
        prev_time, prev_surv = step.time, step.survival
    area += prev_surv * (tau - prev_time)
    return area


def rmst(arm: ArmData, tau: float) -> float:
    """Area under the arm's Kaplan-Meier curve up to tau."""
    if tau <= 0.0:
        raise ValueError(f"tau must be > 0, got {tau}")
    return rmst_from_curve(km_estimate(arm), tau)


def rmstd(dataset: StudyDataset, tau: float | None = None) -> float:
    """Restricted-mean difference, first arm minus second arm."""
    if tau is None:
        tau = rmst_tau(dataset)
    return rmst(dataset.arms[0], tau) - rmst(dataset.arms[1], tau)


def tie_ratio(dataset: StudyDataset) -> float:
    """Fraction of pooled observations sharing their time with another one."""
    times = np.concatenate([arm.times() for arm in dataset.arms])
    _, inverse, counts = np.unique(times, return_inverse=True, return_counts=True)
    return float(np.count_nonzero(counts[inverse] > 1)) / times.size


def evaluate_dataset(dataset: StudyDataset) -> EvaluationResult:
    """All comparison statistics; degenerate ones are recorded as absent."""
    try:
        lr = logrank_test(dataset)
        statistic, p_value = lr.statistic, lr.p_value
    except DegenerateTestError:
        statistic, p_value = None, None
    cox = cox_hazard_ratio(dataset)
    medians = {
        arm.label: median_survival(km_estimate(arm)) for arm in dataset.arms
    }
    tau = rmst_tau(dataset)
    return EvaluationResult(
        logrank_statistic=statistic,
        logrank_p=p_value,
        hazard_ratio=cox.hazard_ratio,
        medians=medians,
        tau=tau,
        rmstd=rmstd(dataset, tau),
        tie_ratio=tie_ratio(dataset),
    )


def store_evaluation(result: EvaluationResult, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(result.to_json(), fh, indent=2)
        fh.write("\n")


def load_evaluation(path: str) -> EvaluationResult:
    with open(path) as fh:
        return EvaluationResult.from_json(json.load(fh))
