"""
Sample average approximation with scenario discarding.

Draw N scenarios from a black-box oracle, run an efficiently generalizable
algorithm on the empirical distribution at an inflated budget, then drop the
stage-II action of any scenario whose extended stage-II cost exceeds the
threshold T taken from the training samples.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

from models.instance import (
    Instance,
    Scenario,
    ScenarioDistribution,
    SolveStatus,
    Strategy,
    candidate_radii,
    empirical_distribution,
    scenario_ratios,
    set_cost,
)
from solvers.errors import InvalidConfig
from solvers.registry import InnerAlgorithm
from solvers.sampling import ScenarioOracle, draw_repetition
from solvers.settings import SolverSettings

log = logging.getLogger(__name__)

REPETITION_BASE = 13.0 / 12.0


# ── CONFIG ────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SaaConfig:
    epsilon: float
    alpha:   float
    gamma:   float
    samples: Optional[int] = None
    seed:    int = 0
    discard: bool = True

    def __post_init__(self):
        for name in ('epsilon', 'alpha', 'gamma'):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise InvalidConfig(f"{name} must lie in (0, 1), got {value}")
        if self.samples is not None and self.samples < 1:
            raise InvalidConfig("sample count must be positive")

    @property
    def repetitions(self) -> int:
        """H = ⌈log_{13/12}(1/γ)⌉."""
        return max(1, math.ceil(math.log(1.0 / self.gamma) / math.log(REPETITION_BASE)))

    @property
    def min_samples(self) -> int:
        return math.ceil(1.0 / self.epsilon)

    def formula_samples(self, n: int, m: int, log_psi: float, constant: float = 1.0) -> int:
        """c/(εα) · (ln nm + ln ψ + ln 1/γ) · ln(nm/γ), at least ⌈1/ε⌉."""
        nm = max(1, n * m)
        first = math.log(nm) + log_psi + math.log(1.0 / self.gamma)
        second = math.log(nm / self.gamma)
        count = math.ceil(constant / (self.epsilon * self.alpha) * first * second)
        return max(count, self.min_samples)

    def sample_count(self, formula: int) -> int:
        if self.samples is None:
            return formula
        if self.samples < self.min_samples:
            raise InvalidConfig(f"at least ⌈1/ε⌉ = {self.min_samples} samples are required")
        return self.samples


# ── THRESHOLD AND DISCARDING ──────────────────────────────────────────────────

@dataclass(frozen=True)
class Threshold:
    value: float
    rank:  int
    index: int


def pick_threshold(costs: Sequence[float], alpha: float) -> Threshold:
    """
    The ⌈αN⌉-th largest cost. Equal costs are ordered by sample index, the
    later sample counting as larger, so exactly rank - 1 samples sit above T.
    """
    if not costs:
        raise InvalidConfig("a threshold needs at least one sample cost")
    if not 0.0 < alpha < 1.0:
        raise InvalidConfig(f"alpha must lie in (0, 1), got {alpha}")
    order = sorted(range(len(costs)), key=lambda k: (float(costs[k]), k), reverse=True)
    rank = min(len(costs), max(1, math.ceil(alpha * len(costs) - 1e-12)))
    index = order[rank - 1]
    return Threshold(float(costs[index]), rank, index)


@dataclass(frozen=True, eq=False)
class DiscardingStrategy:
    """Extended strategy that opens nothing in stage II when its stage-II cost would exceed T."""
    base:      Strategy
    threshold: Optional[float] = None

    @property
    def stage1(self) -> frozenset:
        return self.base.stage1

    def stage2_cost(self, scenario: Scenario) -> float:
        return set_cost(scenario.stage2_costs, self.base.stage2_for(scenario))

    def is_discarded(self, scenario: Scenario) -> bool:
        return self.threshold is not None and self.stage2_cost(scenario) > self.threshold

    def extend(self, scenario: Scenario) -> frozenset:
        if self.is_discarded(scenario):
            return frozenset()
        return self.base.stage2_for(scenario)

    def as_strategy(self) -> Strategy:
        return Strategy(self.stage1, {}, self)


# ── RESULTS ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class RepetitionRecord:
    index:    int
    status:   SolveStatus
    samples:  int
    distinct: int


@dataclass(frozen=True, eq=False)
class SaaResult:
    status:          SolveStatus
    strategy:        Optional[DiscardingStrategy] = None
    threshold:       Optional[Threshold] = None
    samples:         int = 0
    formula_samples: int = 0
    repetitions:     tuple = ()
    radius:          Optional[float] = None
    sample_costs:    tuple = field(default=(), repr=False)
    inner_result:    object = field(default=None, repr=False)
    delta_exceeded:  bool = False
    radius_grid:     tuple = ()

    @property
    def feasible(self) -> bool:
        return self.status is SolveStatus.FEASIBLE


# ── DRIVERS ───────────────────────────────────────────────────────────────────

def _solve_samples(instance: Instance, samples: list, inner: InnerAlgorithm, budget: float,
                   settings: SolverSettings):
    distribution, owner = empirical_distribution(samples)
    result = inner.run(instance.with_budget(budget), distribution, settings)
    if result.status is not SolveStatus.FEASIBLE:
        return distribution, result, None
    ids = [distribution.scenarios[k].id for k in owner]
    costs = tuple(set_cost(sample.stage2_costs, result.strategy.stage2[sid])
                  for sample, sid in zip(samples, ids))
    return distribution, result, costs


def _repeat(instance: Instance, draw: Callable[[int], list], inner: InnerAlgorithm,
            config: SaaConfig, repetitions: int, count: int, formula: int,
            settings: SolverSettings, radius: Optional[float] = None) -> SaaResult:
    records = []
    budget = (1.0 + config.epsilon) * instance.budget
    for h in range(repetitions):
        samples = draw(h)
        distribution, result, costs = _solve_samples(instance, samples, inner, budget, settings)
        records.append(RepetitionRecord(h, result.status, len(samples), len(distribution)))
        if costs is None:
            log.debug("saa: repetition %d infeasible", h)
            continue
        threshold = pick_threshold(costs, config.alpha)
        strategy = DiscardingStrategy(result.strategy, threshold.value if config.discard else None)
        log.info("saa: repetition %d feasible, T=%.6g (rank %d of %d)",
                 h, threshold.value, threshold.rank, len(costs))
        return SaaResult(SolveStatus.FEASIBLE, strategy, threshold, count, formula, tuple(records),
                         radius, costs, result)
    log.info("saa: all %d repetitions infeasible", repetitions)
    return SaaResult(SolveStatus.INFEASIBLE, samples=count, formula_samples=formula,
                     repetitions=tuple(records), radius=radius)


def saa_run(instance: Instance, oracle: ScenarioOracle, inner: InnerAlgorithm, config: SaaConfig,
            settings: Optional[SolverSettings] = None) -> SaaResult:
    settings = settings or SolverSettings()
    formula = config.formula_samples(instance.n, instance.m, inner.log_psi(instance.n, instance.m),
                                     settings.saa_sample_constant)
    count = config.sample_count(formula)

    def draw(h):
        return draw_repetition(oracle, config.seed, h, count)

    return _repeat(instance, draw, inner, config, config.repetitions, count, formula, settings)


def radius_search(instance: Instance, oracle: ScenarioOracle, inner: InnerAlgorithm,
                  config: SaaConfig, settings: Optional[SolverSettings] = None) -> SaaResult:
    """
    Run SAA at every candidate radius in increasing order, with γ' = γ/(nm),
    and return the first radius that is not INFEASIBLE. One sample pool is
    drawn up front and shared by every radius.
    """
    settings = settings or SolverSettings()
    scaled = replace(config, gamma=config.gamma / max(1, instance.n * instance.m))
    formula = scaled.formula_samples(instance.n, instance.m, inner.log_psi(instance.n, instance.m),
                                     settings.saa_sample_constant)
    count = scaled.sample_count(formula)
    pool = {}

    def draw(h):
        if h not in pool:
            pool[h] = draw_repetition(oracle, config.seed, h, count)
        return pool[h]

    grid = []
    for radius in candidate_radii(instance):
        result = _repeat(instance.with_radius(radius), draw, inner, scaled, scaled.repetitions,
                         count, formula, settings, radius)
        grid.append((radius, result.status))
        if result.feasible:
            log.info("radius search: R=%g after %d candidates", radius, len(grid))
            return replace(result, radius_grid=tuple(grid))
    return SaaResult(SolveStatus.INFEASIBLE, samples=count, formula_samples=formula,
                     radius_grid=tuple(grid))


def delta_sample_count(instance: Instance, delta: float, config: SaaConfig, log_psi: float,
                       constant: float = 3.0) -> int:
    """
    ⌈c·(Δ/B)/ε²·(ln ψ + ln 1/γ)⌉, at least 1. With B = 0 the raw Δ is used
    in place of Δ/B.
    """
    if delta < 0:
        raise InvalidConfig("Δ must be non-negative")
    ratio = delta / instance.budget if instance.budget > 0 else delta
    count = math.ceil(constant * ratio / config.epsilon ** 2 * (log_psi + math.log(1.0 / config.gamma)))
    return max(1, count)


def saa_bounded_delta(instance: Instance, oracle: ScenarioOracle, inner: InnerAlgorithm,
                      delta: float, config: SaaConfig,
                      settings: Optional[SolverSettings] = None) -> SaaResult:
    """Single round at budget (1+ε/3)B, no discarding. Flags samples whose stage-II cost exceeds Δ."""
    settings = settings or SolverSettings()
    formula = delta_sample_count(instance, delta, config, inner.log_psi(instance.n, instance.m),
                                 settings.saa_delta_constant)
    count = config.samples or formula
    samples = draw_repetition(oracle, config.seed, 0, count)
    budget = (1.0 + config.epsilon / 3.0) * instance.budget
    distribution, result, costs = _solve_samples(instance, samples, inner, budget, settings)
    record = RepetitionRecord(0, result.status, count, len(distribution))
    if costs is None:
        return SaaResult(SolveStatus.INFEASIBLE, samples=count, formula_samples=formula,
                         repetitions=(record,))
    exceeded = max(costs) > delta + settings.tolerances.budget
    if exceeded:
        log.warning("bounded-Δ SAA: a sampled stage-II cost %.6g exceeds Δ=%.6g", max(costs), delta)
    return SaaResult(SolveStatus.FEASIBLE, DiscardingStrategy(result.strategy), None, count, formula,
                     (record,), sample_costs=costs, inner_result=result, delta_exceeded=exceeded)


# ── EXACT EVALUATION ──────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Evaluation:
    expected_cost:         float
    violation_probability: float
    max_eta:               float
    discarded_probability: float

    def as_dict(self) -> dict:
        return {
            'expected_cost': self.expected_cost,
            'violation_probability': self.violation_probability,
            'max_eta': self.max_eta,
            'discarded_probability': self.discarded_probability,
        }


def evaluate(instance: Instance, truth: ScenarioDistribution, strategy, eta: float,
             radii=None, tol: float = 1e-9) -> Evaluation:
    """
    Exact expected cost and probability that some active client is farther
    than ηR_j. Discarded scenarios count as violations.
    """
    costs, violated, discarded, ratios = [], [], [], [0.0]
    for scenario in truth:
        dropped = isinstance(strategy, DiscardingStrategy) and strategy.is_discarded(scenario)
        if isinstance(strategy, DiscardingStrategy):
            stage2 = strategy.extend(scenario)
        else:
            stage2 = strategy.stage2_for(scenario)
        costs.append(scenario.probability * (set_cost(instance.stage1_costs, strategy.stage1)
                                             + set_cost(scenario.stage2_costs, stage2)))
        worst = 0.0
        if scenario.active:
            opened = strategy.stage1 | stage2
            worst = (max(scenario_ratios(instance, scenario.active, opened, radii).values())
                     if opened else math.inf)
        if dropped:
            discarded.append(scenario.probability)
        else:
            ratios.append(worst)
        if dropped or worst > eta + tol:
            violated.append(scenario.probability)
    return Evaluation(math.fsum(costs), math.fsum(violated), max(ratios), math.fsum(discarded))


__all__ = [
    'SaaConfig',
    'Threshold',
    'pick_threshold',
    'DiscardingStrategy',
    'RepetitionRecord',
    'SaaResult',
    'saa_run',
    'radius_search',
    'delta_sample_count',
    'saa_bounded_delta',
    'Evaluation',
    'evaluate',
]
