"""Davidson extension of the Bradley-Terry model: ties and home advantage.

For home team i and visitor j with worths pi_i, pi_j, home-advantage gamma
and tie parameter nu, the outcome probabilities are proportional to

    win:  gamma * pi_i      draw:  nu * sqrt(pi_i * pi_j)      loss:  pi_j

Fitting maximizes the log-likelihood over an unconstrained space: log-worths
relative to a reference team plus log gamma and log nu, which builds the
positivity and sum-to-one identifiability constraints into the geometry.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .data import MatchRecord, Outcome, Prediction, Season, first_half_rounds, outcome_of
from .optimize import OptimResult, OptimSettings, minimize

WORTH_SUM_TOL = 1e-9


@dataclass(frozen=True)
class BTParams:
    """Fitted worths (normalized to sum 1), home advantage and tie propensity."""

    worth: Mapping[str, float]
    gamma: float
    nu: float

    def __post_init__(self) -> None:
        if not self.worth:
            raise ValueError("worth map must be non-empty")
        if any(w <= 0.0 for w in self.worth.values()):
            raise ValueError("worths must be positive")
        total = sum(self.worth.values())
        if abs(total - 1.0) > WORTH_SUM_TOL:
            raise ValueError(f"worths sum to {total!r}, not 1")
        if self.gamma <= 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.nu < 0.0:
            raise ValueError(f"nu must be non-negative, got {self.nu}")


@dataclass(frozen=True)
class FitReport:
    params: BTParams
    log_likelihood: float
    iterations: int
    converged: bool
    gradient_norm: float
    boundary_flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class FitSettings:
    tol: float = 1e-8
    max_iter: int = 500


def bt_outcome_probs(params: BTParams, home: str, away: str) -> Prediction:
    """Win/draw/loss probabilities for a single fixture."""
    for team in (home, away):
        if team not in params.worth:
            raise KeyError(f"unknown team {team!r}")
    pi_h = params.worth[home]
    pi_a = params.worth[away]
    win = params.gamma * pi_h
    draw = params.nu * math.sqrt(pi_h * pi_a)
    loss = pi_a
    denom = win + draw + loss
    return Prediction(win / denom, draw / denom, loss / denom)


def bt_log_likelihood(
    params: BTParams, matches: Sequence[tuple[MatchRecord, Outcome]]
) -> float:
    """Sum of log outcome probabilities; -inf (with a warning) on zero-probability data."""
    total = 0.0
    for match, outcome in matches:
        p = bt_outcome_probs(params, match.home, match.away).prob_of(outcome)
        if p == 0.0:
            warnings.warn(
                f"{match.home} vs {match.away}: realized outcome has probability 0",
                stacklevel=2,
            )
            return -math.inf
        total += math.log(p)
    return total


class _DavidsonObjective:
    """Negative log-likelihood and gradient over (r_2..r_T, log gamma, log nu)."""

    def __init__(self, teams: Sequence[str], matches: Sequence[tuple[MatchRecord, Outcome]]):
        self.teams = list(teams)
        index = {t: k for k, t in enumerate(self.teams)}
        self.home_idx = np.array([index[m.home] for m, _ in matches])
        self.away_idx = np.array([index[m.away] for m, _ in matches])
        self.outcome = np.array([o.value for _, o in matches])
        self.n_teams = len(self.teams)

    @property
    def n_params(self) -> int:
        return self.n_teams + 1  # T - 1 free log-worths, log gamma, log nu

    def unpack(self, theta: np.ndarray) -> tuple[np.ndarray, float, float]:
        r = np.concatenate(([0.0], theta[: self.n_teams - 1]))
        return r, float(theta[-2]), float(theta[-1])

    def __call__(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        r, log_gamma, log_nu = self.unpack(theta)
        r_h = r[self.home_idx]
        r_a = r[self.away_idx]
        # Log numerators of win / loss / draw terms.
        log_win = log_gamma + r_h
        log_loss = r_a
        log_draw = log_nu + 0.5 * (r_h + r_a)
        stacked = np.stack([log_win, log_draw, log_loss])
        top = stacked.max(axis=0)
        log_denom = top + np.log(np.exp(stacked - top).sum(axis=0))

        chosen = np.where(
            self.outcome == Outcome.HOME_WIN.value,
            log_win,
            np.where(self.outcome == Outcome.DRAW.value, log_draw, log_loss),
        )
        nll = float(np.sum(log_denom - chosen))

        # Softmax weights of the three terms in each denominator.
        w_win = np.exp(log_win - log_denom)
        w_draw = np.exp(log_draw - log_denom)
        w_loss = np.exp(log_loss - log_denom)

        is_win = self.outcome == Outcome.HOME_WIN.value
        is_draw = self.outcome == Outcome.DRAW.value
        is_loss = self.outcome == Outcome.AWAY_WIN.value

        # d(log denominator)/d(param) minus d(log numerator)/d(param).
        d_home = (w_win + 0.5 * w_draw) - (is_win * 1.0 + is_draw * 0.5)
        d_away = (w_loss + 0.5 * w_draw) - (is_loss * 1.0 + is_draw * 0.5)
        d_gamma = float(np.sum(w_win - is_win))
        d_nu = float(np.sum(w_draw - is_draw))

        d_r = np.zeros(self.n_teams)
        np.add.at(d_r, self.home_idx, d_home)
        np.add.at(d_r, self.away_idx, d_away)

        grad = np.concatenate((d_r[1:], [d_gamma, d_nu]))
        return nll, grad


def _prepare(matches: Sequence[tuple[MatchRecord, Outcome]]) -> _DavidsonObjective:
    if not matches:
        raise ValueError("need at least one match to fit")
    teams = sorted({t for m, _ in matches for t in (m.home, m.away)})
    if len(teams) < 2:
        raise ValueError("need at least two teams")
    return _DavidsonObjective(teams, matches)


BOUNDARY_DRIFT = 15.0


def _boundary_flags(objective: _DavidsonObjective, result: OptimResult) -> tuple[str, ...]:
    # Separable data sends log-scale parameters toward infinity; the gradient
    # flattens well before the optimizer clamp, so flag both an active clamp
    # and extreme drift (|log parameter| beyond any plausible finite MLE).
    names = [f"worth:{t}" for t in objective.teams[1:]] + ["gamma", "nu"]
    flagged = {names[i] for i in result.at_bound}
    flagged.update(
        name for name, value in zip(names, result.x) if abs(value) >= BOUNDARY_DRIFT
    )
    return tuple(sorted(flagged))


def bt_fit(
    matches: Sequence[tuple[MatchRecord, Outcome]],
    settings: FitSettings | None = None,
) -> FitReport:
    """Maximum-likelihood fit from the symmetric starting point.

    Initialization is equal worths with gamma = nu = 1, so repeated fits on
    the same data are identical.  Parameters running off to the clamp box
    (separable data, or no draws pushing nu to zero) come back flagged in
    ``boundary_flags`` rather than as an exception.
    """
    cfg = settings or FitSettings()
    objective = _prepare(matches)
    x0 = np.zeros(objective.n_params)
    result = minimize(objective, x0, OptimSettings(tol=cfg.tol, max_iter=cfg.max_iter))

    r, log_gamma, log_nu = objective.unpack(result.x)
    worths = np.exp(r)
    worths /= worths.sum()
    params = BTParams(
        worth={t: float(w) for t, w in zip(objective.teams, worths)},
        gamma=float(math.exp(log_gamma)),
        nu=float(math.exp(log_nu)),
    )
    return FitReport(
        params=params,
        log_likelihood=-result.fun,
        iterations=result.iterations,
        converged=result.converged,
        gradient_norm=result.grad_norm,
        boundary_flags=_boundary_flags(objective, result),
    )


def bt_rolling_predict(
    season: Season, matchday: int, settings: FitSettings | None = None
) -> dict[MatchRecord, Prediction]:
    """Refit on all earlier matchdays of the season and predict one matchday.

    Requires a second-half matchday with every earlier match played, per the
    evaluation protocol; predictions are keyed by the scheduled fixture.
    """
    if matchday <= first_half_rounds(season.rounds):
        raise ValueError(f"matchday {matchday} is not in the second half")
    earlier = [m for m in season.matches if m.matchday < matchday]
    if any(not m.played for m in earlier):
        raise ValueError(f"unplayed matches before matchday {matchday}")
    fitted = bt_fit([(m, outcome_of(m)) for m in earlier], settings)
    return {
        m.scheduled_copy(): bt_outcome_probs(fitted.params, m.home, m.away)
        for m in season.matches_of(matchday)
    }


def bt_params_to_csv(params: BTParams) -> str:
    """``team,worth`` rows with a ``gamma,nu`` footer."""
    lines = ["team,worth"]
    for team in sorted(params.worth):
        lines.append(f"{team},{params.worth[team]!r}")
    lines.append(f"gamma,{params.gamma!r}")
    lines.append(f"nu,{params.nu!r}")
    return "\n".join(lines) + "\n"
