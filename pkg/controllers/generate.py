"""
generate: seeded instance, scenario-list and oracle files.
"""

from dataclasses import asdict

import click
from flask import Blueprint, current_app

from controllers.manifest import recorded
from models.serialization import SCHEMA_VERSION, distribution_to_dict, instance_to_dict, load_json
from solvers.generators import CONSTRAINTS, LAYOUTS, GeneratorSpec, bernoulli_oracle, e1_instance, generate
from solvers.sampling import ExplicitOracle

generate_bp = Blueprint('generate', __name__, cli_group=None)


@generate_bp.cli.command('generate')
@click.option('--spec', 'spec_file', type=click.Path(exists=True, dir_okay=False),
              help='JSON generator spec; command-line options override its fields.')
@click.option('--preset', type=click.Choice(['e1']), default=None)
@click.option('--n', type=int, default=None, help='Number of clients.')
@click.option('--m', type=int, default=None, help='Number of facilities.')
@click.option('--scenarios', type=int, default=None)
@click.option('--layout', type=click.Choice(LAYOUTS), default=None)
@click.option('--radius', type=float, default=None)
@click.option('--constraint', type=click.Choice(CONSTRAINTS), default=None)
@click.option('--rank', type=int, default=None)
@click.option('--budget', type=float, default=None)
@click.option('--seed', type=int, default=None)
@click.option('--out-dir', type=click.Path(file_okay=False), required=True)
@recorded('generate', inputs=('spec_file',), seeds=('seed',))
def generate_cmd(run, spec_file, preset, out_dir, **overrides):
    """Write instance.json, scenarios.json and oracle.json into OUT_DIR."""
    if preset == 'e1':
        instance, distribution = e1_instance(9.0 if overrides['budget'] is None else overrides['budget'])
        oracle = ExplicitOracle(distribution)
    else:
        fields = load_json(spec_file) if spec_file else {}
        fields.update({k: v for k, v in overrides.items() if v is not None})
        if 'n' not in fields or 'm' not in fields:
            raise click.UsageError('--n and --m are required without --preset or a spec file')
        spec = GeneratorSpec.from_dict(fields)
        instance, distribution = generate(spec)
        oracle = bernoulli_oracle(spec, instance)
        run.details['generator'] = asdict(spec)

    run.write_json('instance.json', instance_to_dict(instance))
    run.write_json('scenarios.json', distribution_to_dict(instance, distribution))
    run.write_json('oracle.json', {'schema_version': SCHEMA_VERSION, **oracle.identity()})
    current_app.logger.info("generated %r with %d scenarios", instance, len(distribution))
    click.echo(f"wrote {instance.n} clients, {instance.m} facilities, "
               f"{len(distribution)} scenarios to {out_dir}")
