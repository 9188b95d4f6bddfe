"""
Black-box experiments: SAA runs, the rare-expensive-scenario demonstration,
and manifest replay.
"""

from pathlib import Path

import click
import numpy as np
from flask import Blueprint, current_app

from controllers.generate import generate_cmd
from controllers.manifest import MANIFEST_NAME, InfeasibleRun, PreconditionError, recorded
from controllers.solve import solve_cmd
from models.serialization import (
    distribution_from_dict,
    file_sha256,
    instance_from_dict,
    load_json,
    strategy_to_dict,
)
from solvers.errors import InvalidInstance
from solvers.registry import INNER_ALGORITHMS, get_inner
from solvers.saa import SaaConfig, evaluate, radius_search, saa_bounded_delta, saa_run
from solvers.sampling import BernoulliOracle, oracle_from_identity

experiments_bp = Blueprint('experiments', __name__, cli_group=None)


def _load_oracle(path, instance, dist_file):
    identity = load_json(path)
    distribution = distribution_from_dict(load_json(dist_file), instance) if dist_file else None
    oracle = oracle_from_identity(identity, distribution)
    if isinstance(oracle, BernoulliOracle) and (
            len(oracle.activation) != instance.n or len(oracle.base_costs) != instance.m):
        raise InvalidInstance("oracle dimensions do not match the instance")
    return oracle


def _summary_row(algo, config, result, metrics):
    threshold = result.threshold
    row = {
        'algo': algo,
        'status': result.status.value,
        'seed': config.seed,
        'epsilon': config.epsilon,
        'alpha': config.alpha,
        'gamma': config.gamma,
        'samples': result.samples,
        'formula_samples': result.formula_samples,
        'repetitions_run': len(result.repetitions),
        'radius': result.radius if result.radius is not None else '',
        'threshold': threshold.value if threshold else '',
        'threshold_rank': threshold.rank if threshold else '',
        'delta_exceeded': result.delta_exceeded,
    }
    if metrics is not None:
        row.update(metrics.as_dict())
    return row


@experiments_bp.cli.command('saa')
@click.option('--instance', 'instance_file', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--oracle', 'oracle_file', type=click.Path(exists=True, dir_okay=False), required=True,
              help='Oracle JSON as written by generate.')
@click.option('--dist', 'dist_file', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Scenario list behind an explicit oracle.')
@click.option('--truth', 'truth_file', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Scenario list to evaluate the returned strategy against.')
@click.option('--exact-truth', is_flag=True, help='Evaluate against the enumerated oracle distribution.')
@click.option('--algo', type=click.Choice(sorted(INNER_ALGORITHMS)), default='matsup5')
@click.option('--eps', 'epsilon', type=float, default=0.25)
@click.option('--alpha', type=float, default=0.25)
@click.option('--gamma', type=float, default=0.1)
@click.option('--samples', type=int, default=None, help='Override the sample-count formula.')
@click.option('--seed', type=int, default=0)
@click.option('--radius-search', 'search_radius', is_flag=True)
@click.option('--delta', type=float, default=None, help='Bounded stage-II cost; runs without discarding.')
@click.option('--out-dir', type=click.Path(file_okay=False), required=True)
@recorded('saa', inputs=('instance_file', 'oracle_file', 'dist_file', 'truth_file'), seeds=('seed',))
def saa_cmd(run, instance_file, oracle_file, dist_file, truth_file, exact_truth, algo, epsilon,
            alpha, gamma, samples, seed, search_radius, delta, out_dir):
    """Sample average approximation against a black-box scenario oracle."""
    settings = run.settings
    instance = instance_from_dict(load_json(instance_file), settings.explicit_matroid_max_ground)
    oracle = _load_oracle(oracle_file, instance, dist_file)
    inner = get_inner(algo)
    config = SaaConfig(epsilon, alpha, gamma, samples, seed)
    current_app.logger.info("saa: %s with %d repetitions", algo, config.repetitions)

    if delta is not None and search_radius:
        raise click.UsageError('--delta and --radius-search cannot be combined')
    if delta is not None:
        result = saa_bounded_delta(instance, oracle, inner, delta, config, settings)
    elif search_radius:
        result = radius_search(instance, oracle, inner, config, settings)
        run.details['radius_grid'] = [[r, status.value] for r, status in result.radius_grid]
    else:
        result = saa_run(instance, oracle, inner, config, settings)

    run.details.update(
        samples=result.samples,
        formula_samples=result.formula_samples,
        repetitions=[{'index': r.index, 'status': r.status.value, 'samples': r.samples,
                      'distinct': r.distinct} for r in result.repetitions],
        threshold=result.threshold.value if result.threshold else None,
    )

    metrics = None
    if result.feasible:
        solved = instance if result.radius is None else instance.with_radius(result.radius)
        doc = strategy_to_dict(solved, result.strategy.base, result.inner_result.certificate)
        doc['T'] = result.strategy.threshold
        run.write_json('strategy.json', doc)

        truth = None
        if truth_file:
            truth = distribution_from_dict(load_json(truth_file), instance)
        elif exact_truth:
            truth = oracle.to_distribution()
        if truth is not None:
            metrics = evaluate(solved, truth, result.strategy, inner.eta,
                               tol=settings.tolerances.distance)
            click.echo(f"expected cost {metrics.expected_cost:.6g}, "
                       f"violation probability {metrics.violation_probability:.4g}")
    run.write_csv('summary.csv', 'saa', [_summary_row(algo, config, result, metrics)])
    click.echo(f"saa {algo}: {result.status.value} with N={result.samples}")
    return result.status


@experiments_bp.cli.command('appendix-demo')
@click.option('--p', 'probability', type=float, default=1e-3, help='Probability of the expensive scenario.')
@click.option('--cost', type=float, default=1e3, help='Stage-II cost M of the expensive scenario.')
@click.option('--stage1-cost', type=float, default=0.0)
@click.option('--samples', type=int, default=100, help='Samples N behind each estimate.')
@click.option('--seeds', type=int, default=1000, help='Independent estimates.')
@click.option('--seed', type=int, default=0)
@click.option('--out-dir', type=click.Path(file_okay=False), required=True)
@recorded('appendix-demo', seeds=('seed',))
def appendix_demo_cmd(run, probability, cost, stage1_cost, samples, seeds, seed, out_dir):
    """
    Spread of the N-sample cost estimate when a rare scenario carries most
    of the expected cost.
    """
    if not 0.0 <= probability <= 1.0:
        raise click.BadParameter('must lie in [0, 1]', param_hint='--p')
    if samples < 1 or seeds < 1:
        raise click.BadParameter('must be positive', param_hint='--samples/--seeds')

    counts = np.random.default_rng(seed).binomial(samples, probability, size=seeds)
    estimates = stage1_cost + cost * counts / samples
    true_mean = stage1_cost + probability * cost
    spread = float(estimates.std())
    relative = spread / true_mean if true_mean > 0 else 0.0
    row = {
        'p': probability,
        'cost': cost,
        'stage1_cost': stage1_cost,
        'samples': samples,
        'seeds': seeds,
        'true_mean': true_mean,
        'estimate_mean': float(estimates.mean()),
        'estimate_std': spread,
        'relative_std': relative,
        'zero_count_fraction': float(np.mean(counts == 0)),
    }
    run.write_csv('summary.csv', 'appendix-demo', [row])
    click.echo(f"relative std of the {samples}-sample estimate over {seeds} seeds: {relative:.4g}")


REPLAYABLE = {
    'generate': generate_cmd,
    'solve': solve_cmd,
    'saa': saa_cmd,
    'appendix-demo': appendix_demo_cmd,
}


@experiments_bp.cli.command('replay')
@click.option('--manifest', 'manifest_file', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--out-dir', type=click.Path(file_okay=False), required=True)
@click.pass_context
def replay_cmd(ctx, manifest_file, out_dir):
    """Re-run the command a manifest records and compare output hashes."""
    manifest = load_json(manifest_file)
    command = REPLAYABLE.get(manifest.get('command'))
    if command is None:
        raise PreconditionError(f"cannot replay command {manifest.get('command')!r}")
    for name, entry in manifest.get('inputs', {}).items():
        if not Path(entry['path']).exists() or file_sha256(entry['path']) != entry['sha256']:
            raise PreconditionError(f"input {name} ({entry['path']}) changed since the recorded run")
    if Path(out_dir).resolve() == Path(manifest_file).resolve().parent:
        raise click.BadParameter('replay needs a fresh directory', param_hint='--out-dir')

    params = dict(manifest['params'], out_dir=out_dir)
    try:
        ctx.invoke(command, **params)
    except InfeasibleRun:
        pass

    replayed = load_json(Path(out_dir) / MANIFEST_NAME)['outputs']
    recorded_outputs = manifest.get('outputs', {})
    differing = sorted(name for name in set(recorded_outputs) | set(replayed)
                       if recorded_outputs.get(name) != replayed.get(name))
    if differing:
        for name in differing:
            click.echo(f"differs: {name}", err=True)
        raise click.ClickException(f"replay produced {len(differing)} differing output(s)")
    click.echo(f"replay identical: {len(replayed)} output(s) match")


__all__ = ['experiments_bp', 'REPLAYABLE']
