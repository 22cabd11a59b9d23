"""High-resilience limit experiments and empirical convergence-rate fits.

Every experiment runs a kappa ladder on one shared grid sized for the
largest ladder point, so the same fundamental path (one RNG stream per
Monte-Carlo path) is fed to every kappa: differences across the ladder then
reflect the resilience, not sampling noise.

Wealth along a path is linear in the fundamental-price increments once the
strategy and book coefficients are fixed (the coefficients are sampled
paths, never functions of the price).  The Monte-Carlo experiments exploit
this: they evaluate the wealth engines once on the drift-only price path and
add the position-weighted noise per path, which reproduces per-path engine
evaluation exactly for additive fundamentals with time-only coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .book import BookParams, BookTemplate
from .errors import InsufficientData
from .paths import RandomSource, SampledPath, TimeGrid, as_path, constant_path, make_grid
from .strategies import (Strategy, TrackerSpec, exponential_tracker, position_paths,
                         rate_strategy, relax_positions, smooth_blocks)
from .wealth import ac_wealth, ow_wealth

# Stream ids 0..paths-1 are reserved for Monte-Carlo paths; auxiliary noise
# sources start far above any plausible path count.
_BOOTSTRAP_STREAM = 2**32


@dataclass(frozen=True)
class KappaLadder:
    """Strictly increasing resilience scales, typically geometric."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ValueError("ladder must contain at least one kappa")
        if any(v <= 0 for v in vals) or any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("ladder values must be positive and strictly increasing")

    @classmethod
    def geometric(cls, start: float = 16.0, factor: float = 2.0, count: int = 9) -> "KappaLadder":
        return cls(tuple(start * factor**j for j in range(count)))

    @property
    def max(self) -> float:
        return self.values[-1]

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class FundamentalSpec:
    """Additive price model dS = mu(t) dt + sigma(t) dW with constant or
    time-function coefficients (matching the Euler sampling convention)."""

    s0: float = 100.0
    mu: float | Callable[[float], float] = 0.0
    sigma: float | Callable[[float], float] = 0.0

    def _steps(self, grid: TimeGrid, coeff) -> np.ndarray:
        return as_path(grid, coeff).values[:-1]

    def mu_steps(self, grid: TimeGrid) -> np.ndarray:
        return self._steps(grid, self.mu)

    def sigma_steps(self, grid: TimeGrid) -> np.ndarray:
        sig = self._steps(grid, self.sigma)
        if np.any(sig < 0):
            raise ValueError("sigma must be nonnegative")
        return sig

    def mean_path(self, grid: TimeGrid) -> SampledPath:
        values = np.empty(grid.n_points)
        values[0] = self.s0
        np.cumsum(self.mu_steps(grid) * grid.dt, out=values[1:])
        values[1:] += self.s0
        return SampledPath(grid, values)

    def sample(self, grid: TimeGrid, rng: RandomSource) -> SampledPath:
        dw = math.sqrt(grid.dt) * rng.normals(grid.steps)
        values = self.mean_path(grid).values.copy()
        values[1:] += np.cumsum(self.sigma_steps(grid) * dw)
        return SampledPath(grid, values)

    @property
    def is_deterministic(self) -> bool:
        return not callable(self.sigma) and self.sigma == 0.0


def brownian_increments(grid: TimeGrid, seed: int, paths: int) -> np.ndarray:
    """(paths, steps) matrix of N(0, dt) increments, one stream per path."""
    out = np.empty((paths, grid.steps))
    root = math.sqrt(grid.dt)
    for p in range(paths):
        out[p] = root * RandomSource(seed, stream=p).normals(grid.steps)
    return out


def ladder_grid(horizon: float, n0: int, resolution_scale: float,
                kappa_max: float) -> TimeGrid:
    """One grid per ladder, fine enough for the largest kappa's boundary layer."""
    steps = max(int(n0), math.ceil(resolution_scale * math.sqrt(kappa_max)))
    return make_grid(horizon, steps)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residual: float


def fit_rate(points: Sequence[tuple[float, float]]) -> RateFit:
    """Least-squares fit of log(error) against log(kappa).

    Nonpositive errors are excluded (they carry no rate information); fewer
    than three usable points raise :class:`InsufficientData`.
    """
    usable = [(k, e) for k, e in points if e > 0]
    if len(usable) < 3:
        raise InsufficientData(
            f"rate fit needs at least 3 positive error points, got {len(usable)}")
    lk = np.log([k for k, _ in usable])
    le = np.log([e for _, e in usable])
    slope, intercept = np.polyfit(lk, le, 1)
    resid = le - (slope * lk + intercept)
    return RateFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))))


@dataclass
class ConvergenceReport:
    """Per-kappa error metrics with the fitted log-log rate.

    ``mean_err`` holds the headline metric named by ``metric``: the mean of
    pathwise sup-differences, or their L2 norm sqrt(E[sup^2]).
    """

    kappas: np.ndarray
    mean_err: np.ndarray
    p95_err: np.ndarray
    metric: str = "mean_sup"
    slope: float | None = None
    intercept: float | None = None
    residual: float | None = None
    zero_error_kappas: tuple[float, ...] = ()

    @property
    def kappa_x_err(self) -> np.ndarray:
        return self.kappas * self.mean_err

    @property
    def sqrt_kappa_x_err(self) -> np.ndarray:
        return np.sqrt(self.kappas) * self.mean_err

    def csv_rows(self) -> list[list[str]]:
        rows = []
        for j in range(len(self.kappas)):
            pts = list(zip(self.kappas[: j + 1], self.mean_err[: j + 1]))
            try:
                so_far = repr(fit_rate(pts).slope)
            except InsufficientData:
                so_far = ""
            rows.append([repr(float(self.kappas[j])), repr(float(self.mean_err[j])),
                         repr(float(self.p95_err[j])), repr(float(self.kappa_x_err[j])),
                         so_far])
        return rows

    def decreasing_on_upper_half(self, scaled: np.ndarray | None = None) -> bool:
        vals = self.kappa_x_err if scaled is None else scaled
        start = len(vals) // 2
        upper = vals[start:]
        return bool(np.all(np.diff(upper) < 0))


def _coerce_rate_strategy(grid: TimeGrid, rate) -> Strategy:
    if isinstance(rate, Strategy):
        if rate.has_blocks:
            raise ValueError("limit-theorem experiments require block-free strategies")
        if rate.grid != grid:
            raise ValueError("strategy lives on a different grid")
        return rate
    return rate_strategy(grid, rate)


def _finish_report(kappas, mean_err, p95_err, metric) -> ConvergenceReport:
    kappas = np.asarray(kappas, dtype=float)
    mean_err = np.asarray(mean_err, dtype=float)
    p95_err = np.asarray(p95_err, dtype=float)
    zeros = tuple(float(k) for k, e in zip(kappas, mean_err) if e <= 0)
    report = ConvergenceReport(kappas, mean_err, p95_err, metric=metric,
                               zero_error_kappas=zeros)
    try:
        fit = fit_rate(list(zip(kappas, mean_err)))
        report.slope, report.intercept, report.residual = fit.slope, fit.intercept, fit.residual
    except InsufficientData:
        pass
    return report


def _run_gap_ladder(template: BookTemplate, strategy_for_kappa, fundamental: FundamentalSpec,
                    ladder: KappaLadder, grid: TimeGrid, paths: int, seed: int,
                    x0: float, metric: str) -> ConvergenceReport:
    fundamentals = [fundamental.sample(grid, RandomSource(seed, stream=p))
                    for p in range(paths)]
    mean_err = []
    p95_err = []
    for kappa in ladder:
        book = template.materialize(grid, kappa)
        strat = strategy_for_kappa(kappa, grid)
        sups = np.array([
            float(np.max(np.abs(ow_wealth(book, strat, fund, x0).x.values
                                - ac_wealth(book, strat, fund, x0).x.values)))
            for fund in fundamentals
        ])
        if metric == "l2_sup":
            mean_err.append(float(np.sqrt(np.mean(sups**2))))
        else:
            mean_err.append(float(np.mean(sups)))
        p95_err.append(float(np.percentile(sups, 95)))
    return _finish_report(list(ladder), mean_err, p95_err, metric)


def theorem1_experiment(template: BookTemplate, rate, fundamental: FundamentalSpec,
                        ladder: KappaLadder, *, paths: int = 1, seed: int = 42,
                        horizon: float = 1.0, n0: int = 512,
                        resolution_scale: float = 4.0, x0: float = 0.0) -> ConvergenceReport:
    """Gap between structural and reduced-form wealth for a fixed smooth rate.

    Reports e(kappa) = E[sup_t |X_ow - X_ac|]; the limit theorem makes
    kappa * e(kappa) vanish, and smooth rates decay one order faster.
    """
    grid = ladder_grid(horizon, n0, resolution_scale, ladder.max)
    strat = _coerce_rate_strategy(grid, rate)
    return _run_gap_ladder(template, lambda k, g: strat, fundamental, ladder,
                           grid, paths, seed, x0, "mean_sup")


def remark1_experiment(template: BookTemplate, base_rate, fundamental: FundamentalSpec,
                       ladder: KappaLadder, *, paths: int = 1, seed: int = 42,
                       horizon: float = 1.0, n0: int = 512,
                       resolution_scale: float = 4.0, x0: float = 0.0) -> ConvergenceReport:
    """Same gap for strategies whose rate grows like kappa^(1/4) * base_rate;
    the scaled error sqrt(kappa) * e(kappa) still vanishes."""
    grid = ladder_grid(horizon, n0, resolution_scale, ladder.max)
    base = _coerce_rate_strategy(grid, base_rate)

    def scaled(kappa: float, g: TimeGrid) -> Strategy:
        return Strategy(g, SampledPath(g, kappa**0.25 * base.rate.values),
                        (), base.phi0)

    return _run_gap_ladder(template, scaled, fundamental, ladder, grid, paths,
                           seed, x0, "mean_sup")


@dataclass
class UniformBounds:
    """Declared uniform bounds for the L2-mode experiment."""

    rate_bound: float
    coefficient_bound: float
    resilience_floor: float

    def check(self, book: BookParams, strategy: Strategy) -> None:
        n = book.grid.steps
        if np.any(np.abs(strategy.rate_steps) > self.rate_bound):
            raise ValueError("strategy rate exceeds its declared uniform bound")
        if (np.any(book.K_up.values < self.resilience_floor)
                or np.any(book.K_dn.values < self.resilience_floor)):
            raise ValueError("resilience shape falls below its declared floor")
        coeffs = [
            (1.0 - book.alpha_up.values) / book.h_up.values,
            (1.0 - book.alpha_dn.values) / book.h_dn.values,
            book.alpha_up.values / book.h_up.values,
            book.alpha_dn.values / book.h_dn.values,
            book.eps_up.values, book.eps_dn.values,
        ]
        if any(np.any(np.abs(c) > self.coefficient_bound) for c in coeffs):
            raise ValueError("book coefficient exceeds its declared uniform bound")


def l2_convergence_experiment(template: BookTemplate, rate, fundamental: FundamentalSpec,
                              ladder: KappaLadder, *, bounds: UniformBounds | None = None,
                              paths: int = 1, seed: int = 42, horizon: float = 1.0,
                              n0: int = 512, resolution_scale: float = 4.0,
                              x0: float = 0.0) -> ConvergenceReport:
    """Theorem-1 ladder with the L2 metric sqrt(E[sup_t |X_ow - X_ac|^2]),
    for configurations with uniformly bounded coefficients."""
    grid = ladder_grid(horizon, n0, resolution_scale, ladder.max)
    strat = _coerce_rate_strategy(grid, rate)
    if bounds is not None:
        bounds.check(template.materialize(grid, ladder.values[0]), strat)
    return _run_gap_ladder(template, lambda k, g: strat, fundamental, ladder,
                           grid, paths, seed, x0, "l2_sup")


@dataclass
class LemmaJumpReport:
    """Terminal-payoff gains of smoothed block strategies over the blocks."""

    kappas: np.ndarray
    mean_diff: np.ndarray
    frac_positive: np.ndarray
    diffs: np.ndarray  # (n_kappa, paths)

    def csv_rows(self) -> list[list[str]]:
        return [[repr(float(k)), repr(float(m)), repr(float(f))]
                for k, m, f in zip(self.kappas, self.mean_diff, self.frac_positive)]


def _terminal_wealth_decomposition(book: BookParams, strategy: Strategy,
                                   mean_fund: SampledPath, x0: float) -> tuple[float, np.ndarray]:
    """Terminal wealth on the mean price path plus the noise weights:
    X_T(path) = X_T(mean) + sum_i weights[i] * (dS_i - dS_i_mean)."""
    x_det = float(ow_wealth(book, strategy, mean_fund, x0).x.values[-1])
    pre_pos, _ = position_paths(strategy)
    return x_det, pre_pos[1:]


def lemma_jump_experiment(template: BookTemplate, block_strategy: Strategy,
                          fundamental: FundamentalSpec, ladder: KappaLadder, *,
                          width_scale: float = 1.0, paths: int = 1, seed: int = 42,
                          x0: float = 0.0) -> LemmaJumpReport:
    """Pathwise terminal difference D(kappa) between each block strategy and
    its linearly smoothed version, under common noise.

    The smoothed strategies trade the same volumes over windows of width
    width_scale * kappa^(-1/4); for large resilience their payoffs dominate
    the block payoffs.
    """
    if not block_strategy.has_blocks:
        raise ValueError("lemma experiment requires a nonzero block strategy")
    grid = block_strategy.grid
    mean_fund = fundamental.mean_path(grid)
    sigma = fundamental.sigma_steps(grid)
    noise = brownian_increments(grid, seed, paths) if np.any(sigma > 0) else None

    mean_diff = []
    frac_pos = []
    all_diffs = []
    for kappa in ladder:
        book = template.materialize(grid, kappa)
        smoothed = smooth_blocks(block_strategy, kappa, width_scale)
        x_sm, w_sm = _terminal_wealth_decomposition(book, smoothed, mean_fund, x0)
        x_bl, w_bl = _terminal_wealth_decomposition(book, block_strategy, mean_fund, x0)
        d_det = x_sm - x_bl
        if noise is None:
            diffs = np.full(paths, d_det)
        else:
            diffs = d_det + noise @ (sigma * (w_sm - w_bl))
        mean_diff.append(float(np.mean(diffs)))
        frac_pos.append(float(np.mean(diffs > 0)))
        all_diffs.append(diffs)
    return LemmaJumpReport(np.asarray(list(ladder)), np.asarray(mean_diff),
                           np.asarray(frac_pos), np.asarray(all_diffs))


@dataclass
class TrackerBoundReport:
    """Monte-Carlo check of the uniform tracking-error moment bound."""

    kappas: np.ndarray
    estimates: np.ndarray
    stderrs: np.ndarray
    bound: float
    within: np.ndarray

    @property
    def all_within(self) -> bool:
        return bool(np.all(self.within))

    def csv_rows(self) -> list[list[str]]:
        return [[repr(float(k)), repr(float(e)), repr(float(s)), repr(float(self.bound)),
                 str(bool(w)).lower()]
                for k, e, s, w in zip(self.kappas, self.estimates, self.stderrs, self.within)]


def tracker_bound_experiment(ladder: KappaLadder, *, target_drift=0.0, target_vol=1.0,
                             rate_scale=1.0, coeff_bound: float = 1.0,
                             rate_floor: float = 1.0, target0: float = 0.0,
                             paths: int = 10_000, seed: int = 42, horizon: float = 1.0,
                             n0: int = 512, resolution_scale: float = 4.0) -> TrackerBoundReport:
    """Estimate E[sup_t kappa^(1/2) |target_t - tracker_t|^2] per kappa.

    The target is an Ito process with declared drift/vol coefficients bounded
    by ``coeff_bound`` and the tracking-rate scale M is bounded below by
    ``rate_floor``; the estimate must stay below 5 * C^2 * T / M_floor
    (within three Monte-Carlo standard errors) uniformly in kappa.
    """
    grid = ladder_grid(horizon, n0, resolution_scale, ladder.max)
    mu = as_path(grid, target_drift).values
    sig = as_path(grid, target_vol).values
    m = as_path(grid, rate_scale).values
    if np.any(np.abs(mu) > coeff_bound) or np.any(np.abs(sig) > coeff_bound):
        raise ValueError("target coefficients exceed the declared bound")
    if np.any(m < rate_floor):
        raise ValueError("tracking rate falls below its declared floor")

    dw = brownian_increments(grid, seed, paths)
    targets = np.empty((paths, grid.n_points))
    targets[:, 0] = target0
    increments = mu[:-1] * grid.dt + sig[:-1] * dw
    np.cumsum(increments, axis=1, out=targets[:, 1:])
    targets[:, 1:] += target0

    bound = 5.0 * coeff_bound**2 * horizon / rate_floor
    estimates = []
    stderrs = []
    for kappa in ladder:
        pos = relax_positions(targets, m, kappa, grid.dt)
        sup2 = math.sqrt(kappa) * np.max((targets - pos)**2, axis=1)
        estimates.append(float(np.mean(sup2)))
        stderrs.append(float(np.std(sup2, ddof=1) / math.sqrt(paths)))
    estimates = np.asarray(estimates)
    stderrs = np.asarray(stderrs)
    within = estimates <= bound + 3.0 * stderrs
    return TrackerBoundReport(np.asarray(list(ladder)), estimates, stderrs,
                              float(bound), within)


@dataclass
class UtilityCell:
    multiplier: float
    ce: float
    ci_low: float
    ci_high: float
    gap_vs_candidate: float
    gap_ci_low: float
    gap_ci_high: float

    @property
    def gap_halfwidth(self) -> float:
        return (self.gap_ci_high - self.gap_ci_low) / 2.0


@dataclass
class UtilityReport:
    """Certainty equivalents of trackers at competing speed multipliers."""

    kappas: tuple[float, ...]
    multipliers: tuple[float, ...]
    cells: dict[tuple[float, float], UtilityCell]
    frictionless_ce: float

    def ce(self, kappa: float, multiplier: float = 1.0) -> float:
        return self.cells[(kappa, multiplier)].ce

    def candidate_noninferior(self, kappa: float) -> bool:
        """Candidate CE at least every competitor's minus one CI half-width."""
        cand = self.ce(kappa, 1.0)
        for c in self.multipliers:
            if c == 1.0:
                continue
            cell = self.cells[(kappa, c)]
            if cand < cell.ce - cell.gap_halfwidth:
                return False
        return True

    def candidate_ce_curve(self) -> list[float]:
        return [self.ce(k, 1.0) for k in self.kappas]

    def csv_rows(self) -> list[list[str]]:
        rows = []
        for k in self.kappas:
            for c in self.multipliers:
                cell = self.cells[(k, c)]
                rows.append([repr(float(k)), repr(float(c)), repr(cell.ce),
                             repr(cell.ci_low), repr(cell.ci_high),
                             repr(cell.gap_vs_candidate), repr(cell.gap_ci_low),
                             repr(cell.gap_ci_high)])
        return rows


def _certainty_equivalent(u_mean: float, gamma: float) -> float:
    return -math.log(-u_mean) / gamma


def utility_experiment(template: BookTemplate, fundamental: FundamentalSpec, *,
                       gamma: float, kappas: Sequence[float],
                       multipliers: Sequence[float] = (0.5, 1.0, 2.0),
                       paths: int = 10_000, seed: int = 42, x0: float = 0.0,
                       horizon: float = 1.0, n0: int = 512,
                       resolution_scale: float = 4.0,
                       bootstrap: int = 500) -> UtilityReport:
    """Compare certainty equivalents of trackers with speeds c * sqrt(kappa) * M.

    Setup: exponential utility with absolute risk aversion ``gamma``, constant
    drift/volatility fundamental, and a frictionless-baseline symmetric book
    (no baseline spread, no permanent impact).  The frictionless optimal
    position mu / (gamma * sigma^2) is then constant; trackers start from a
    flat position so that speed trades off impact cost against displacement.
    The closed-form optimal speed corresponds to multiplier 1.
    """
    if gamma <= 0:
        raise ValueError("risk aversion gamma must be positive")
    if 1.0 not in tuple(float(c) for c in multipliers):
        raise ValueError("speed multipliers must include 1 (the candidate)")
    if any(c <= 0 for c in multipliers):
        raise ValueError("speed multipliers must be positive")
    if callable(fundamental.mu) or callable(fundamental.sigma):
        raise ValueError("utility experiment requires constant drift and volatility")
    if fundamental.sigma <= 0:
        raise ValueError("utility experiment requires positive volatility "
                         "(zero volatility gives zero tracking speed)")
    kappas = tuple(float(k) for k in kappas)
    multipliers = tuple(float(c) for c in multipliers)

    grid = ladder_grid(horizon, n0, resolution_scale, max(kappas))
    probe = template.materialize(grid, kappas[0])
    if np.any(probe.eps_up.values != 0) or np.any(probe.eps_dn.values != 0):
        raise ValueError("utility experiment requires zero baseline spreads")
    if np.any(probe.alpha_up.values != 0) or np.any(probe.alpha_dn.values != 0):
        raise ValueError("utility experiment requires zero permanent impact")
    if not probe.is_symmetric():
        raise ValueError("utility experiment requires a symmetric book")

    mu = float(fundamental.mu)
    sigma = float(fundamental.sigma)
    target_pos = mu / (gamma * sigma**2)
    target = constant_path(grid, target_pos)
    m_base = np.sqrt(probe.K_up.values * probe.h_up.values * sigma**2 * gamma / 2.0)

    mean_fund = fundamental.mean_path(grid)
    sigma_steps = fundamental.sigma_steps(grid)
    dw = brownian_increments(grid, seed, paths)

    boot_gen = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=seed, spawn_key=(_BOOTSTRAP_STREAM,))))
    boot_idx = boot_gen.integers(0, paths, size=(bootstrap, paths))

    cells: dict[tuple[float, float], UtilityCell] = {}
    for kappa in kappas:
        book = template.materialize(grid, kappa)
        u_by_mult: dict[float, np.ndarray] = {}
        for c in multipliers:
            spec = TrackerSpec(target=target,
                               rate_scale=SampledPath(grid, c * m_base),
                               kappa=kappa)
            strat = exponential_tracker(spec, start=0.0)
            x_det, weights = _terminal_wealth_decomposition(book, strat, mean_fund, x0)
            x_terminal = x_det + dw @ (sigma_steps * weights)
            u_by_mult[c] = -np.exp(-gamma * x_terminal)

        ce_boot: dict[float, np.ndarray] = {}
        for c in multipliers:
            u = u_by_mult[c]
            means = np.array([u[idx].mean() for idx in boot_idx])
            ce_boot[c] = -np.log(-means) / gamma
        for c in multipliers:
            ce = _certainty_equivalent(float(u_by_mult[c].mean()), gamma)
            lo, hi = np.percentile(ce_boot[c], [2.5, 97.5])
            gap_samples = ce_boot[1.0] - ce_boot[c]
            gap = (_certainty_equivalent(float(u_by_mult[1.0].mean()), gamma) - ce)
            glo, ghi = np.percentile(gap_samples, [2.5, 97.5])
            cells[(kappa, c)] = UtilityCell(c, ce, float(lo), float(hi),
                                            gap, float(glo), float(ghi))

    frictionless = x0 + mu**2 * horizon / (2.0 * gamma * sigma**2)
    return UtilityReport(kappas, multipliers, cells, frictionless)
