"""
Black-box scenario oracles.

An oracle turns a seeded ``np.random.Generator`` into independent scenario
samples; callers never see its distribution except through ``sample``.
"""

import itertools
import math
from dataclasses import dataclass, replace
from typing import Protocol, runtime_checkable

import numpy as np

from models.instance import PROBABILITY_TOL, Scenario, ScenarioDistribution
from solvers.errors import CapExceeded, InvalidConfig

MAX_ENUMERATED_CLIENTS = 16


@runtime_checkable
class ScenarioOracle(Protocol):

    def sample(self, rng: np.random.Generator, count: int) -> list:
        ...

    def identity(self) -> dict:
        ...


@dataclass(frozen=True, eq=False)
class ExplicitOracle:
    """Samples a known finite distribution by inverse CDF; samples keep their scenario ids."""
    distribution: ScenarioDistribution

    def __post_init__(self):
        if not len(self.distribution):
            raise InvalidConfig("an explicit oracle needs at least one scenario")
        cdf = np.cumsum([s.probability for s in self.distribution])
        cdf[-1] = 1.0
        object.__setattr__(self, '_cdf', cdf)

    def sample(self, rng: np.random.Generator, count: int) -> list:
        draws = np.searchsorted(self._cdf, rng.random(count), side='right')
        draws = np.minimum(draws, len(self.distribution) - 1)
        scenarios = self.distribution.scenarios
        return [replace(scenarios[int(k)], probability=1.0) for k in draws]

    def identity(self) -> dict:
        return {'kind': 'explicit', 'scenarios': [s.id for s in self.distribution]}

    def to_distribution(self) -> ScenarioDistribution:
        return self.distribution


@dataclass(frozen=True, eq=False)
class BernoulliOracle:
    """
    Client j is active with probability activation[j], independently; the
    stage-II cost vector is base_costs scaled by one multiplier drawn from
    ``multipliers`` with probabilities ``weights``.
    """
    activation:  np.ndarray
    base_costs:  np.ndarray
    multipliers: tuple = (1.0,)
    weights:     tuple = (1.0,)

    def __post_init__(self):
        activation = np.array(self.activation, dtype=float).reshape(-1)
        base = np.array(self.base_costs, dtype=float).reshape(-1)
        multipliers = tuple(float(x) for x in self.multipliers)
        weights = tuple(float(x) for x in self.weights)
        if np.any((activation < 0) | (activation > 1)):
            raise InvalidConfig("activation probabilities must lie in [0, 1]")
        if not np.all(np.isfinite(base)) or np.any(base < 0):
            raise InvalidConfig("base stage-II costs must be finite and non-negative")
        if not multipliers or len(multipliers) != len(weights):
            raise InvalidConfig("each cost multiplier needs one probability")
        if any(x < 0 for x in multipliers) or any(w < 0 for w in weights):
            raise InvalidConfig("multipliers and their probabilities must be non-negative")
        if abs(math.fsum(weights) - 1.0) > PROBABILITY_TOL:
            raise InvalidConfig("multiplier probabilities must sum to 1")
        object.__setattr__(self, 'activation', activation)
        object.__setattr__(self, 'base_costs', base)
        object.__setattr__(self, 'multipliers', multipliers)
        object.__setattr__(self, 'weights', weights)

    def sample(self, rng: np.random.Generator, count: int) -> list:
        active = rng.random((count, len(self.activation))) < self.activation
        picks = rng.choice(len(self.multipliers), size=count, p=np.asarray(self.weights))
        return [self._scenario(np.flatnonzero(active[k]), int(picks[k])) for k in range(count)]

    def _scenario(self, active, pick: int, probability: float = 1.0) -> Scenario:
        # ids are content-derived so equal realisations share an id across batches
        mask = sum(1 << int(j) for j in active)
        return Scenario(f"set{mask}-x{pick}", [int(j) for j in active],
                        self.base_costs * self.multipliers[pick], probability)

    def identity(self) -> dict:
        return {
            'kind': 'bernoulli',
            'activation': self.activation.tolist(),
            'base_costs': self.base_costs.tolist(),
            'multipliers': list(self.multipliers),
            'weights': list(self.weights),
        }

    def to_distribution(self) -> ScenarioDistribution:
        """Exact distribution, enumerated over every active set and multiplier."""
        n = len(self.activation)
        if n > MAX_ENUMERATED_CLIENTS:
            raise CapExceeded(f"cannot enumerate {n} Bernoulli clients (limit {MAX_ENUMERATED_CLIENTS})")
        scenarios = []
        for bits in itertools.product((False, True), repeat=n):
            on = np.array(bits, dtype=bool)
            p_set = float(np.prod(np.where(on, self.activation, 1.0 - self.activation)))
            for k, w in enumerate(self.weights):
                p = p_set * w
                if p <= 0:
                    continue
                scenarios.append(self._scenario(np.flatnonzero(on), k, p))
        total = math.fsum(s.probability for s in scenarios)
        return ScenarioDistribution(tuple(s.with_probability(s.probability / total) for s in scenarios))


def draw_repetition(oracle: ScenarioOracle, seed: int, repetition: int, count: int) -> list:
    """Samples of repetition h, drawn from SeedSequence([seed, h])."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(repetition)]))
    return oracle.sample(rng, count)


def oracle_from_identity(identity: dict, distribution: ScenarioDistribution = None) -> ScenarioOracle:
    kind = identity.get('kind')
    if kind == 'bernoulli':
        return BernoulliOracle(identity['activation'], identity['base_costs'],
                               tuple(identity.get('multipliers', (1.0,))),
                               tuple(identity.get('weights', (1.0,))))
    if kind == 'explicit':
        if distribution is None:
            raise InvalidConfig("an explicit oracle needs its scenario distribution")
        return ExplicitOracle(distribution)
    raise InvalidConfig(f"unknown oracle kind {kind!r}")


__all__ = [
    'ScenarioOracle',
    'ExplicitOracle',
    'BernoulliOracle',
    'draw_repetition',
    'oracle_from_identity',
]
