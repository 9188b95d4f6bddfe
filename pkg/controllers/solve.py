"""
solve: run one algorithm on an explicit instance and write the strategy plus
a report row and per-scenario coverage.
"""

import click
from flask import Blueprint, current_app

from controllers.manifest import recorded
from models.instance import SolveStatus, ball_sets, scenario_ratios, set_cost
from models.serialization import (
    SCHEMA_VERSION,
    distribution_from_dict,
    instance_from_dict,
    load_json,
    rw_from_dict,
    strategy_to_dict,
)
from solvers.bruteforce import exact_two_stage, rw_objective
from solvers.registry import INNER_ALGORITHMS, get_inner
from solvers.robust_outlier import RW_SOLVERS, RwInstance, check_rw_solution, covering_lp
from solvers.saa import evaluate
from solvers.sup_rounding import build_sup_lp

ALGORITHMS = (*INNER_ALGORITHMS, *RW_SOLVERS, 'exact')

solve_bp = Blueprint('solve', __name__, cli_group=None)


def _coverage_rows(instance, distribution, strategy, eta, tol):
    rows = []
    for scenario in distribution:
        stage2 = strategy.stage2_for(scenario)
        opened = strategy.stage1 | stage2
        ratios = scenario_ratios(instance, scenario.active, opened)
        worst = max(ratios.values(), default=0.0)
        rows.append({
            'scenario': scenario.id,
            'probability': scenario.probability,
            'active': len(scenario.active),
            'stage2_size': len(stage2),
            'stage2_cost': set_cost(scenario.stage2_costs, stage2),
            'max_ratio': worst,
            'covered': worst <= eta + tol,
        })
    return rows


def _dump_lp(run, instance, distribution, algo, result, settings):
    tol = settings.tolerances.distance
    if algo == 'sup3':
        lp, _, _ = build_sup_lp(instance, distribution, ball_sets(instance, tol=tol))
    elif algo in INNER_ALGORITHMS and result.penalties is not None:
        rw = RwInstance.from_instance(instance, result.penalties)
        lp, _, _ = covering_lp(rw, rw.balls(tol=tol), 'rw-relaxation')
    else:
        current_app.logger.warning("--dump-lp: %s solves no LP", algo)
        return
    run.write_text('model.lp', lp.to_lp_format())


def _solve_rw(run, instance_file, algo, radius, dump_lp):
    settings = run.settings
    instance, rw = rw_from_dict(load_json(instance_file), settings.explicit_matroid_max_ground)
    if radius is not None:
        instance = instance.with_radius(radius)
        rw = RwInstance.from_instance(instance, rw.penalties, rw.weights, rw.budget)
    solver = RW_SOLVERS[algo]
    if dump_lp:
        lp, _, _ = covering_lp(rw, rw.balls(tol=settings.tolerances.distance), 'rw-relaxation')
        run.write_text('model.lp', lp.to_lp_format())

    result = solver.run(rw, settings)
    row = {'algo': algo, 'status': result.status.value, 'budget': rw.budget,
           'eta_bound': solver.rho, 'scenarios': 0,
           'radius': rw.common_radius if rw.homogeneous else ''}
    if result.feasible:
        check = check_rw_solution(rw, result.selection, solver.rho, settings.tolerances.distance,
                                  settings.tolerances.budget)
        chosen = sorted(result.selection)
        served = [j for j in range(rw.n) if j not in check.outliers]
        ratios = [float(rw.distances[j, chosen].min()) / float(rw.radii[j])
                  for j in served if chosen and rw.radii[j] > 0]
        row.update(expected_cost=rw_objective(rw, result.selection, solver.rho,
                                              settings.tolerances.distance),
                   max_eta=max(ratios, default=0.0), stage1_size=len(chosen))
        run.write_json('selection.json', {
            'schema_version': SCHEMA_VERSION,
            'F_I': [rw.facilities[i] for i in chosen],
            'rho': solver.rho,
            'objective': row['expected_cost'],
            'outliers': [rw.clients[j] for j in sorted(check.outliers)],
        })
        run.details.update(rounds=result.rounds, cuts=len(result.cuts))
    run.write_csv('report.csv', 'solve', [row])
    click.echo(f"{algo}: {result.status.value}")
    return result.status


@solve_bp.cli.command('solve')
@click.option('--instance', 'instance_file', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--dist', 'dist_file', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Scenario list; not used by rw3/rw9.')
@click.option('--algo', type=click.Choice(ALGORITHMS), required=True)
@click.option('--radius', type=float, default=None, help='Override every client radius.')
@click.option('--out-dir', type=click.Path(file_okay=False), required=True)
@click.option('--dump-lp', is_flag=True, help='Also write the LP relaxation as model.lp.')
@recorded('solve', inputs=('instance_file', 'dist_file'))
def solve_cmd(run, instance_file, dist_file, algo, radius, out_dir, dump_lp):
    """Solve an explicit-scenario instance with ALGO."""
    if algo in RW_SOLVERS:
        return _solve_rw(run, instance_file, algo, radius, dump_lp)
    if dist_file is None:
        raise click.UsageError(f"--dist is required for {algo}")

    settings = run.settings
    instance = instance_from_dict(load_json(instance_file), settings.explicit_matroid_max_ground)
    if radius is not None:
        instance = instance.with_radius(radius)
    distribution = distribution_from_dict(load_json(dist_file), instance)

    if algo == 'exact':
        result, eta, certificate = exact_two_stage(instance, distribution, settings=settings), 1.0, None
    else:
        inner = get_inner(algo)
        result = inner.run(instance, distribution, settings)
        eta, certificate = inner.eta, result.certificate
    if dump_lp:
        _dump_lp(run, instance, distribution, algo, result, settings)

    strategy = result.strategy
    row = {'algo': algo, 'status': result.status.value, 'budget': instance.budget,
           'eta_bound': eta, 'scenarios': len(distribution),
           'radius': instance.common_radius if instance.homogeneous else ''}
    if strategy is not None:
        tol = settings.tolerances.distance
        metrics = evaluate(instance, distribution, strategy, eta, tol=tol)
        coverage = _coverage_rows(instance, distribution, strategy, eta, tol)
        row.update(expected_cost=metrics.expected_cost, max_eta=metrics.max_eta,
                   stage1_size=len(strategy.stage1),
                   covered_probability=1.0 - metrics.violation_probability)
        run.write_json('strategy.json', strategy_to_dict(instance, strategy, certificate))
        run.write_csv('coverage.csv', 'coverage', coverage)
    run.write_csv('report.csv', 'solve', [row])

    if result.status is SolveStatus.FEASIBLE:
        click.echo(f"{algo}: expected cost {row['expected_cost']:.6g}, max ratio {row['max_eta']:.4g}")
    else:
        click.echo(f"{algo}: INFEASIBLE at budget {instance.budget:g}")
    return result.status
