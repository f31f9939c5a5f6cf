"""Goals-based models: bivariate Poisson scores with log-linear team strengths.

The joint score (Y1, Y2) follows Holgate's bivariate Poisson with rates
(lambda1, lambda2) and shared component lambda3; marginals are Poisson
(lambda1 + lambda3) and (lambda2 + lambda3) with covariance lambda3, and
lambda3 = 0 recovers independent marginals.  Scoring rates come from
log-linear links in per-team attack/defence strengths with a home-advantage
offset, identified by zero-sum constraints on the strengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Mapping, Sequence

import numpy as np
from scipy.stats import poisson as poisson_dist

from .data import MatchRecord, Prediction, Season, first_half_rounds
from .optimize import OptimSettings, minimize

STRENGTH_SUM_TOL = 1e-9
DEFAULT_TAIL_TOL = 1e-10


@dataclass(frozen=True)
class BivPoissonParams:
    lambda1: float
    lambda2: float
    lambda3: float = 0.0

    def __post_init__(self) -> None:
        if self.lambda1 <= 0.0 or self.lambda2 <= 0.0:
            raise ValueError("lambda1 and lambda2 must be positive")
        if self.lambda3 < 0.0:
            raise ValueError("lambda3 must be non-negative")


@dataclass(frozen=True)
class TeamStrengths:
    """Log-linear rate parameters: baseline, attack/defence maps, home offset."""

    mu: float
    attack: Mapping[str, float]
    defense: Mapping[str, float]
    gamma_home: float
    lambda3: float = 0.0

    def __post_init__(self) -> None:
        if set(self.attack) != set(self.defense):
            raise ValueError("attack and defense must cover the same teams")
        for name, strengths in (("attack", self.attack), ("defense", self.defense)):
            total = sum(strengths.values())
            if abs(total) > STRENGTH_SUM_TOL:
                raise ValueError(f"{name} strengths sum to {total!r}, not 0")
        if self.lambda3 < 0.0:
            raise ValueError("lambda3 must be non-negative")


def link_rates(strengths: TeamStrengths, home: str, away: str) -> BivPoissonParams:
    """Scoring rates for one fixture from the log-linear links."""
    for team in (home, away):
        if team not in strengths.attack:
            raise KeyError(f"unknown team {team!r}")
    log_l1 = (
        strengths.mu
        + strengths.attack[home]
        - strengths.defense[away]
        + strengths.gamma_home
    )
    log_l2 = strengths.mu + strengths.attack[away] - strengths.defense[home]
    return BivPoissonParams(math.exp(log_l1), math.exp(log_l2), strengths.lambda3)


def bivpois_pmf(params: BivPoissonParams, y1: int, y2: int) -> float:
    """P(Y1 = y1, Y2 = y2), evaluated through log space.

    The k-sum over the shared component is accumulated with log-sum-exp so
    the routine stays finite for scores far beyond anything football
    produces (naive factorials overflow near 170).
    """
    if y1 < 0 or y2 < 0:
        raise ValueError("goal counts must be non-negative")
    l1, l2, l3 = params.lambda1, params.lambda2, params.lambda3
    log_l3 = math.log(l3) if l3 > 0.0 else -math.inf
    terms = []
    for k in range(min(y1, y2) + 1):
        if k > 0 and l3 == 0.0:
            break
        terms.append(
            (y1 - k) * math.log(l1)
            + (y2 - k) * math.log(l2)
            + (k * log_l3 if k else 0.0)
            - math.lgamma(y1 - k + 1)
            - math.lgamma(y2 - k + 1)
            - math.lgamma(k + 1)
        )
    top = max(terms)
    log_sum = top + math.log(sum(math.exp(t - top) for t in terms))
    return math.exp(-(l1 + l2 + l3) + log_sum)


@dataclass(frozen=True)
class ScoreGrid:
    """Joint score probabilities on [0, max_goals]^2 plus the missing tail mass."""

    max_goals: int
    mass: np.ndarray
    truncation_deficit: float

    def home_win_mass(self) -> float:
        return float(np.tril(self.mass, -1).sum())

    def draw_mass(self) -> float:
        return float(np.trace(self.mass))

    def away_win_mass(self) -> float:
        return float(np.triu(self.mass, 1).sum())


def _joint_mass(params: BivPoissonParams, max_goals: int) -> np.ndarray:
    # Trivariate reduction: (Y1, Y2) = (U + W, V + W) with independent
    # Poisson components, so the joint mass is a convolution over W.
    size = max_goals + 1
    p_u = poisson_dist.pmf(np.arange(size), params.lambda1)
    p_v = poisson_dist.pmf(np.arange(size), params.lambda2)
    if params.lambda3 == 0.0:
        return np.outer(p_u, p_v)
    p_w = poisson_dist.pmf(np.arange(size), params.lambda3)
    mass = np.zeros((size, size))
    for k in range(size):
        if p_w[k] == 0.0:
            continue
        mass[k:, k:] += p_w[k] * np.outer(p_u[: size - k], p_v[: size - k])
    return mass


def score_grid(params: BivPoissonParams, tail_tol: float = DEFAULT_TAIL_TOL) -> ScoreGrid:
    """Smallest grid whose certified missing mass is at most ``tail_tol``.

    The grid size is chosen from the Poisson marginal tails (a certified
    upper bound on the mass outside the grid); the recorded deficit is the
    exact missing mass 1 - sum(grid).
    """
    if not 0.0 < tail_tol <= 1e-3:
        raise ValueError(f"tail_tol must lie in (0, 1e-3], got {tail_tol}")
    m1 = params.lambda1 + params.lambda3
    m2 = params.lambda2 + params.lambda3
    max_goals = 0
    while poisson_dist.sf(max_goals, m1) + poisson_dist.sf(max_goals, m2) > tail_tol:
        max_goals += 1
    mass = _joint_mass(params, max_goals)
    deficit = max(0.0, 1.0 - float(mass.sum()))
    return ScoreGrid(max_goals=max_goals, mass=mass, truncation_deficit=deficit)


def outcome_probs_from_grid(grid: ScoreGrid) -> Prediction:
    """Win/draw/loss probabilities by summing score cells, renormalized."""
    if grid.truncation_deficit > 1e-6:
        raise ValueError(
            f"truncation deficit {grid.truncation_deficit} too large for outcome sums"
        )
    total = float(grid.mass.sum())
    return Prediction(
        grid.home_win_mass() / total,
        grid.draw_mass() / total,
        grid.away_win_mass() / total,
    )


def outcome_probs(params: BivPoissonParams, tail_tol: float = DEFAULT_TAIL_TOL) -> Prediction:
    return outcome_probs_from_grid(score_grid(params, tail_tol))


@dataclass(frozen=True)
class PoissonFitReport:
    log_likelihood: float
    iterations: int
    converged: bool
    gradient_norm: float
    boundary_flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class PoissonSettings:
    tol: float = 1e-8
    max_iter: int = 500


class _PoissonObjective:
    """Negative log-likelihood over (mu, gamma, att_1..T-1, def_1..T-1[, log lambda3]).

    The last team's attack and defence are minus the sum of the others, so
    the zero-sum identifiability constraints hold exactly at every iterate.
    """

    def __init__(self, teams: Sequence[str], matches: Sequence[MatchRecord], correlated: bool):
        self.teams = list(teams)
        self.correlated = correlated
        index = {t: k for k, t in enumerate(self.teams)}
        self.home_idx = np.array([index[m.home] for m in matches])
        self.away_idx = np.array([index[m.away] for m in matches])
        self.y1 = np.array([m.home_goals for m in matches], dtype=float)
        self.y2 = np.array([m.away_goals for m in matches], dtype=float)
        self.n_teams = len(self.teams)
        # k-grid for the shared-component sum, masked past min(y1, y2).
        kmax = int(min(self.y1.max(), self.y2.max()))
        self.k = np.arange(kmax + 1, dtype=float)
        self.k_ok = self.k[None, :] <= np.minimum(self.y1, self.y2)[:, None]
        self.lgamma_y1k = _masked_lgamma(self.y1[:, None] - self.k[None, :], self.k_ok)
        self.lgamma_y2k = _masked_lgamma(self.y2[:, None] - self.k[None, :], self.k_ok)
        self.lgamma_k = np.array([math.lgamma(k + 1) for k in range(kmax + 1)])

    @property
    def n_params(self) -> int:
        return 2 + 2 * (self.n_teams - 1) + (1 if self.correlated else 0)

    def unpack(self, theta: np.ndarray) -> tuple[float, float, np.ndarray, np.ndarray, float]:
        t = self.n_teams
        mu, gamma = float(theta[0]), float(theta[1])
        att_free = theta[2 : 2 + t - 1]
        def_free = theta[2 + t - 1 : 2 + 2 * (t - 1)]
        att = np.concatenate((att_free, [-att_free.sum()]))
        dfn = np.concatenate((def_free, [-def_free.sum()]))
        lambda3 = math.exp(float(theta[-1])) if self.correlated else 0.0
        return mu, gamma, att, dfn, lambda3

    def __call__(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        mu, gamma, att, dfn, lambda3 = self.unpack(theta)
        log_l1 = mu + att[self.home_idx] - dfn[self.away_idx] + gamma
        log_l2 = mu + att[self.away_idx] - dfn[self.home_idx]
        l1 = np.exp(log_l1)
        l2 = np.exp(log_l2)

        if lambda3 == 0.0:
            ll = (
                -(l1 + l2)
                + self.y1 * log_l1
                + self.y2 * log_l2
                - self.lgamma_y1k[:, 0]
                - self.lgamma_y2k[:, 0]
            )
            s1 = self.y1 - l1  # d(log pmf)/d(log lambda1)
            s2 = self.y2 - l2
            nll = -float(ll.sum())
            mean_k = None
        else:
            log_terms = (
                (self.y1[:, None] - self.k[None, :]) * log_l1[:, None]
                + (self.y2[:, None] - self.k[None, :]) * log_l2[:, None]
                + self.k[None, :] * math.log(lambda3)
                - self.lgamma_y1k
                - self.lgamma_y2k
                - self.lgamma_k[None, :]
            )
            log_terms = np.where(self.k_ok, log_terms, -np.inf)
            top = log_terms.max(axis=1)
            with np.errstate(invalid="ignore"):
                rel = np.exp(log_terms - top[:, None])
            rel = np.where(self.k_ok, rel, 0.0)
            s = rel.sum(axis=1)
            log_sum = top + np.log(s)
            ll = -(l1 + l2 + lambda3) + log_sum
            nll = -float(ll.sum())
            mean_k = (rel @ self.k) / s
            s1 = (self.y1 - mean_k) - l1
            s2 = (self.y2 - mean_k) - l2

        d_mu = -float((s1 + s2).sum())
        d_gamma = -float(s1.sum())
        d_att = np.zeros(self.n_teams)
        d_def = np.zeros(self.n_teams)
        np.add.at(d_att, self.home_idx, -s1)
        np.add.at(d_att, self.away_idx, -s2)
        np.add.at(d_def, self.away_idx, s1)
        np.add.at(d_def, self.home_idx, s2)
        # Chain rule through the eliminated last team.
        grad = [d_mu, d_gamma]
        grad.extend(d_att[:-1] - d_att[-1])
        grad.extend(d_def[:-1] - d_def[-1])
        if self.correlated:
            assert mean_k is not None
            grad.append(-float((mean_k - lambda3).sum()))
        return nll, np.asarray(grad)


def _masked_lgamma(values: np.ndarray, ok: np.ndarray) -> np.ndarray:
    safe = np.where(ok, values, 0.0)
    return np.vectorize(lambda v: math.lgamma(v + 1.0))(safe)


def poisson_fit(
    matches: Sequence[MatchRecord],
    correlated: bool = False,
    settings: PoissonSettings | None = None,
) -> tuple[TeamStrengths, PoissonFitReport]:
    """Maximum-likelihood team strengths; ``correlated=False`` pins lambda3 = 0."""
    if not matches:
        raise ValueError("need at least one match to fit")
    if any(not m.played for m in matches):
        raise ValueError("all training matches must be played")
    teams = sorted({t for m in matches for t in (m.home, m.away)})
    if len(teams) < 2:
        raise ValueError("need at least two teams")
    cfg = settings or PoissonSettings()
    objective = _PoissonObjective(teams, matches, correlated)
    x0 = np.zeros(objective.n_params)
    if correlated:
        x0[-1] = math.log(0.1)  # small positive shared component to start
    result = minimize(objective, x0, OptimSettings(tol=cfg.tol, max_iter=cfg.max_iter))

    mu, gamma, att, dfn, lambda3 = objective.unpack(result.x)
    strengths = TeamStrengths(
        mu=mu,
        attack={t: float(a) for t, a in zip(teams, att)},
        defense={t: float(d) for t, d in zip(teams, dfn)},
        gamma_home=gamma,
        lambda3=lambda3,
    )
    names = (
        ["mu", "gamma"]
        + [f"att:{t}" for t in teams[:-1]]
        + [f"def:{t}" for t in teams[:-1]]
        + (["lambda3"] if correlated else [])
    )
    # As in the paired-comparison fit: extreme drift marks a boundary MLE
    # (separable data, or a shared component the data rules out) even when
    # the flat tail satisfied the gradient tolerance.
    flagged = {names[i] for i in result.at_bound}
    flagged.update(
        name for name, value in zip(names, result.x) if abs(value) >= 15.0
    )
    report = PoissonFitReport(
        log_likelihood=-result.fun,
        iterations=result.iterations,
        converged=result.converged,
        gradient_norm=result.grad_norm,
        boundary_flags=tuple(sorted(flagged)),
    )
    return strengths, report


@dataclass(frozen=True)
class TrainingWindow:
    """Which played matches a rolling refit may use.

    ``season``: current season only; ``all``: everything available,
    including earlier seasons; ``last_n_rounds``: the n most recent
    matchdays of the current season.
    """

    kind: Literal["season", "all", "last_n_rounds"]
    n_rounds: int | None = None

    def __post_init__(self) -> None:
        if self.kind == "last_n_rounds" and (self.n_rounds is None or self.n_rounds < 1):
            raise ValueError("last_n_rounds window needs n_rounds >= 1")

    @classmethod
    def parse(cls, text: str) -> "TrainingWindow":
        if text in ("season", "all"):
            return cls(kind=text)
        if text.startswith("last_n_rounds:"):
            return cls(kind="last_n_rounds", n_rounds=int(text.split(":", 1)[1]))
        raise ValueError(f"bad window spec {text!r}")

    def select(
        self,
        season: Season,
        matchday: int,
        earlier_seasons: Sequence[MatchRecord] = (),
    ) -> list[MatchRecord]:
        current = [m for m in season.matches if m.matchday < matchday and m.played]
        if self.kind == "season":
            return current
        if self.kind == "all":
            return [m for m in earlier_seasons if m.played] + current
        assert self.n_rounds is not None
        return [m for m in current if m.matchday >= matchday - self.n_rounds]


def poisson_rolling_predict(
    season: Season,
    matchday: int,
    correlated: bool = False,
    window: TrainingWindow | None = None,
    earlier_seasons: Sequence[MatchRecord] = (),
    tail_tol: float = DEFAULT_TAIL_TOL,
    settings: PoissonSettings | None = None,
) -> dict[MatchRecord, Prediction]:
    """Refit on the window before ``matchday`` and predict its fixtures."""
    if matchday <= first_half_rounds(season.rounds):
        raise ValueError(f"matchday {matchday} is not in the second half")
    if any(not m.played for m in season.matches if m.matchday < matchday):
        raise ValueError(f"unplayed matches before matchday {matchday}")
    training = (window or TrainingWindow("season")).select(season, matchday, earlier_seasons)
    strengths, _ = poisson_fit(training, correlated=correlated, settings=settings)
    predictions: dict[MatchRecord, Prediction] = {}
    for m in season.matches_of(matchday):
        rates = link_rates(strengths, m.home, m.away)
        predictions[m.scheduled_copy()] = outcome_probs(rates, tail_tol)
    return predictions


def strengths_to_csv(strengths: TeamStrengths) -> str:
    """``team,att,def`` rows with a ``mu,gamma,lambda3`` footer."""
    lines = ["team,att,def"]
    for team in sorted(strengths.attack):
        lines.append(f"{team},{strengths.attack[team]!r},{strengths.defense[team]!r}")
    lines.append(f"mu,{strengths.mu!r},")
    lines.append(f"gamma,{strengths.gamma_home!r},")
    lines.append(f"lambda3,{strengths.lambda3!r},")
    return "\n".join(lines) + "\n"
