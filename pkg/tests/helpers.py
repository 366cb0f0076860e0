"""Shared builders for the test suite: synthetic studies and digitized inputs."""

from __future__ import annotations

import numpy as np

from survbench.core import (
    ArmData,
    RandomStream,
    StudyDataset,
    arm_from_arrays,
    km_estimate,
)
from survbench.reconstruct import DigitizedArm


def synth_arm(
    label: str,
    rng: np.random.Generator,
    n: int,
    shape: float,
    scale: float,
    censor_low: float,
    censor_high: float,
) -> ArmData:
    """One arm with weibull events and uniform censoring."""
    events = rng.weibull(shape, n) * scale
    censors = rng.uniform(censor_low, censor_high, n)
    status = (events < censors).astype(int)
    times = np.where(status == 1, events, censors)
    return arm_from_arrays(label, times, status)


def synth_study(
    seed: int,
    n: int = 150,
    shape: float = 1.3,
    scale1: float = 10.0,
    scale2: float = 16.0,
    censor_low: float = 2.0,
    censor_high: float = 30.0,
) -> StudyDataset:
    """Two-arm study with a scale shift between the arms."""
    rng = RandomStream(seed, 0).generator
    return StudyDataset(
        (
            synth_arm("A", rng, n, shape, scale1, censor_low, censor_high),
            synth_arm("B", rng, n, shape, scale2, censor_low, censor_high),
        )
    )


def corpus_study(seed: int) -> StudyDataset:
    """One study from the fixed 20-study round-trip corpus (seeds 0..19)."""
    rng = RandomStream(seed, 99).generator
    n = int(rng.integers(100, 300))
    shape = rng.uniform(0.9, 1.8)
    sc1 = rng.uniform(8.0, 14.0)
    sc2 = sc1 * rng.uniform(1.2, 1.9)
    arms = []
    for label, sc in (("A", sc1), ("B", sc2)):
        events = rng.weibull(shape, n) * sc
        censors = rng.uniform(4.0, 42.0, n)
        status = (events < censors).astype(int)
        times = np.where(status == 1, events, censors)
        arms.append(arm_from_arrays(label, times, status))
    return StudyDataset(tuple(arms))


def digitize_exact(
    arm: ArmData,
    risk_times: list[float] | None = None,
    prob_grid: float | None = None,
    with_total: bool = True,
) -> DigitizedArm:
    """Turn an arm into digitized inputs by reading its own KM curve.

    With the defaults this produces loss-free inputs: a coordinate for
    every curve step and a risk row at every step time. `prob_grid`
    quantizes the survival axis (e.g. 0.01 for a percent-resolution
    plot) and `risk_times` restricts the risk table to a coarser set
    of time points, mimicking published figures.
    """
    curve = km_estimate(arm)
    coords = [(0.0, 1.0)] + [(st.time, st.survival) for st in curve.steps]
    if prob_grid is not None:
        coords = [(t, round(s / prob_grid) * prob_grid) for t, s in coords]
    times = arm.times()
    if risk_times is None:
        risk_times = [0.0] + [st.time for st in curve.steps]
    rows = []
    for t in risk_times:
        n_at = int(np.sum(times >= t))
        if n_at < 1:
            break
        rows.append((float(t), n_at))
    total = int(arm.statuses().sum()) if with_total else None
    return DigitizedArm(arm.label, coords, rows, total)


def pooled_event_grid(dataset: StudyDataset) -> list[float]:
    """Risk-table times covering every event time of either arm."""
    times = {0.0}
    for arm in dataset.arms:
        times.update(st.time for st in km_estimate(arm).steps)
    return sorted(times)


def digitize_study(
    dataset: StudyDataset,
    risk_times: list[float] | None = None,
    prob_grid: float | None = None,
    pooled_risk: bool = False,
    with_total: bool = True,
) -> tuple[DigitizedArm, DigitizedArm]:
    if pooled_risk and risk_times is None:
        risk_times = pooled_event_grid(dataset)
    return (
        digitize_exact(dataset.arms[0], risk_times, prob_grid, with_total),
        digitize_exact(dataset.arms[1], risk_times, prob_grid, with_total),
    )
