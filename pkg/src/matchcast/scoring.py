"""Proper scoring rules, calibration and goodness-of-fit diagnostics.

Conventions: lower scores are better for every rule.  Brier is the squared
Euclidean distance to the realized outcome's vertex, the logarithmic score
is the negative log probability of the realized outcome, and the spherical
score is minus that probability normalized by the L2 norm of the forecast.
The uniform forecast (1/3, 1/3, 1/3) therefore scores 2/3, ln 3 and -1/sqrt(3).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaincc

from .data import MatchRecord, Outcome, Prediction, outcome_of


def brier(outcome: Outcome, p: Prediction) -> float:
    """sum_i (I(x = i) - p_i)^2, in [0, 2]."""
    total = 0.0
    for i, p_i in enumerate(p.as_tuple(), start=1):
        e_i = 1.0 if outcome.value == i else 0.0
        total += (e_i - p_i) ** 2
    return total


def log_score(outcome: Outcome, p: Prediction) -> float:
    """-ln p_x; +inf when the realized outcome had probability zero."""
    p_x = p.prob_of(outcome)
    if p_x == 0.0:
        return math.inf
    return -math.log(p_x)


def spherical(outcome: Outcome, p: Prediction) -> float:
    """-p_x / ||p||_2, in [-1, 0]."""
    norm = math.sqrt(sum(p_i * p_i for p_i in p.as_tuple()))
    return -p.prob_of(outcome) / norm


def entropy(p: Prediction) -> float:
    """-sum p_i ln p_i with 0 ln 0 = 0; ranges over [0, ln 3]."""
    total = 0.0
    for p_i in p.as_tuple():
        if p_i > 0.0:
            total -= p_i * math.log(p_i)
    return total


def cond_home_win_given_no_draw(p: Prediction) -> float | None:
    """p_home / (p_home + p_away), or None when the match is a certain draw."""
    denom = p.p_home + p.p_away
    if denom == 0.0:
        return None
    return p.p_home / denom


def top_choice_error(outcome: Outcome, p: Prediction) -> tuple[int, bool]:
    """(error, tied): error=1 unless the outcome attains the maximum probability.

    When several outcomes tie for the maximum the prediction's top choice is
    undefined; the match counts as an error only if the realized outcome is
    not among the tied set, and ``tied`` is flagged either way.
    """
    ps = p.as_tuple()
    top = max(ps)
    tied_set = [i + 1 for i, p_i in enumerate(ps) if p_i == top]
    error = 0 if outcome.value in tied_set else 1
    return error, len(tied_set) > 1


def proportion_of_errors(scored: Sequence[tuple[Outcome, Prediction]]) -> float:
    """Fraction of matches whose realized outcome was not the modal prediction."""
    if not scored:
        raise ValueError("need at least one scored prediction")
    errors = sum(top_choice_error(outcome, p)[0] for outcome, p in scored)
    return errors / len(scored)


# ---------------------------------------------------------------------------
# Calibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationBin:
    """One reliability-table row: events observed among probabilities in [lo, hi)."""

    lo: float
    hi: float
    n: int
    mean_prob: float
    event_rate: float
    se: float


@dataclass(frozen=True)
class SmoothedPoint:
    prob: float
    estimate: float
    se: float


@dataclass(frozen=True)
class CalibrationTable:
    bins: tuple[CalibrationBin, ...]
    smoothed: tuple[SmoothedPoint, ...]
    bandwidth: float
    n_pairs: int


def _unroll(scored: Sequence[tuple[Outcome, Prediction]]) -> tuple[np.ndarray, np.ndarray]:
    probs, events = [], []
    for outcome, p in scored:
        for i, p_i in enumerate(p.as_tuple(), start=1):
            probs.append(p_i)
            events.append(1.0 if outcome.value == i else 0.0)
    return np.asarray(probs), np.asarray(events)


def _binned(probs: np.ndarray, events: np.ndarray, bins: int) -> tuple[CalibrationBin, ...]:
    edges = np.linspace(0.0, 1.0, bins + 1)
    idx = np.clip(np.digitize(probs, edges[1:-1]), 0, bins - 1)
    rows = []
    for b in range(bins):
        mask = idx == b
        n = int(mask.sum())
        if n == 0:
            continue
        rate = float(events[mask].mean())
        rows.append(
            CalibrationBin(
                lo=float(edges[b]),
                hi=float(edges[b + 1]),
                n=n,
                mean_prob=float(probs[mask].mean()),
                event_rate=rate,
                se=math.sqrt(rate * (1.0 - rate) / n),
            )
        )
    return tuple(rows)


_BANDWIDTHS = (0.02, 0.05, 0.1, 0.2)
_LOO_CAP = 2000


def _loo_error(probs: np.ndarray, events: np.ndarray, bw: float) -> float:
    # Leave-one-out squared error for the Nadaraya-Watson smoother,
    # computed in closed form from the full weight matrix.
    d = (probs[:, None] - probs[None, :]) / bw
    w = np.exp(-0.5 * d * d)
    num = w @ events - np.diag(w) * events
    den = w.sum(axis=1) - np.diag(w)
    ok = den > 0
    if not ok.any():
        return math.inf
    resid = events[ok] - num[ok] / den[ok]
    return float(np.mean(resid * resid))


def _smoothed(
    probs: np.ndarray, events: np.ndarray, grid: np.ndarray
) -> tuple[tuple[SmoothedPoint, ...], float]:
    if probs.size > _LOO_CAP:
        # Deterministic thinning: evenly spaced picks from the stably sorted pairs.
        order = np.argsort(probs, kind="stable")
        pick = order[np.linspace(0, probs.size - 1, _LOO_CAP).astype(int)]
        sel_p, sel_e = probs[pick], events[pick]
    else:
        sel_p, sel_e = probs, events
    errors = [(_loo_error(sel_p, sel_e, bw), bw) for bw in _BANDWIDTHS]
    bw = min(errors)[1]

    d = (grid[:, None] - probs[None, :]) / bw
    w = np.exp(-0.5 * d * d)
    den = w.sum(axis=1)
    points = []
    for g, w_row, den_g in zip(grid, w, den):
        if den_g < 1e-8:  # no effective sample mass near this grid point
            continue
        est = float(w_row @ events / den_g)
        var = float(w_row @ (w_row * est * (1.0 - est))) / (den_g * den_g)
        points.append(SmoothedPoint(prob=float(g), estimate=est, se=math.sqrt(max(var, 0.0))))
    return tuple(points), bw


def calibration_curve(
    scored: Sequence[tuple[Outcome, Prediction]],
    *,
    bins: int = 10,
    grid: Sequence[float] | None = None,
) -> CalibrationTable:
    """Reliability estimates: equal-width bins plus a kernel smoother.

    Each prediction contributes its three (probability, event indicator)
    pairs.  The smoother is Nadaraya-Watson with a Gaussian kernel whose
    bandwidth minimizes leave-one-out squared error over a small candidate
    set.  Requires at least 30 pairs.
    """
    probs, events = _unroll(scored)
    if probs.size < 30:
        raise ValueError(f"need >= 30 probability/event pairs, got {probs.size}")
    grid_arr = (
        np.linspace(0.05, 0.95, 19) if grid is None else np.asarray(list(grid), dtype=float)
    )
    smoothed, bw = _smoothed(probs, events, grid_arr)
    return CalibrationTable(
        bins=_binned(probs, events, bins),
        smoothed=smoothed,
        bandwidth=bw,
        n_pairs=int(probs.size),
    )


# ---------------------------------------------------------------------------
# Goodness of fit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GofResult:
    statistic: float
    df: int
    p_value: float
    excluded_terms: int = 0

    def __add__(self, other: "GofResult") -> "GofResult":
        # Independent chi-square statistics add, with degrees of freedom.
        stat = self.statistic + other.statistic
        df = self.df + other.df
        return GofResult(stat, df, chi_square_p_value(stat, df),
                         self.excluded_terms + other.excluded_terms)


def chi_square_p_value(statistic: float, df: int) -> float:
    """Upper-tail chi-square probability via the regularized incomplete gamma."""
    if df <= 0:
        return 1.0
    return float(gammaincc(df / 2.0, statistic / 2.0))


def chi_square_gof(
    predictions: Sequence[tuple[MatchRecord, Prediction]]
) -> GofResult:
    """Per-team win-count goodness of fit, split by venue.

    For each team, the expected number of wins at home (away) is the sum of
    its predicted win probabilities over those matches; the statistic sums
    (observed - expected)^2 / expected over both venues and all teams, and
    is referred to a chi-square distribution with 2 x (number of teams)
    degrees of freedom.  Terms with zero expected count are dropped with a
    warning; they still count toward the degrees of freedom.
    """
    expected: dict[tuple[str, str], float] = {}
    observed: dict[tuple[str, str], int] = {}
    teams: set[str] = set()
    for match, p in predictions:
        outcome = outcome_of(match)
        teams.update((match.home, match.away))
        for team, venue, win_p, won in (
            (match.home, "home", p.p_home, outcome is Outcome.HOME_WIN),
            (match.away, "away", p.p_away, outcome is Outcome.AWAY_WIN),
        ):
            key = (team, venue)
            expected[key] = expected.get(key, 0.0) + win_p
            observed[key] = observed.get(key, 0) + (1 if won else 0)

    statistic = 0.0
    excluded = 0
    for key in sorted(expected):
        e = expected[key]
        o = observed[key]
        if e <= 0.0:
            excluded += 1
            continue
        statistic += (e - o) ** 2 / e
    if excluded:
        warnings.warn(
            f"{excluded} zero-expected-count terms excluded from chi-square",
            stacklevel=2,
        )
    df = 2 * len(teams)
    return GofResult(statistic, df, chi_square_p_value(statistic, df), excluded)
