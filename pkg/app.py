import logging
import os

import click
from flask import Flask
from flask.cli import FlaskGroup

from config import config
from controllers.experiments import experiments_bp
from controllers.generate import generate_bp
from controllers.solve import solve_bp
from models.db import RunRecord, init_db


def create_app(config_name=None):
    app = Flask(__name__)
    app.config.from_object(config[config_name or os.environ.get('STOCHSUP_ENV', 'default')])

    level = getattr(logging, str(app.config['LOG_LEVEL']).upper(), logging.INFO)
    app.logger.setLevel(level)
    logging.getLogger('solvers').setLevel(level)

    app.register_blueprint(generate_bp)
    app.register_blueprint(solve_bp)
    app.register_blueprint(experiments_bp)

    init_db(app)

    @app.cli.command('runs')
    @click.option('--limit', type=int, default=20)
    def runs(limit):
        """List the most recent runs from the ledger."""
        records = RunRecord.query.order_by(RunRecord.started_at.desc()).limit(limit).all()
        for record in records:
            click.echo(f"{record.started_at:%Y-%m-%d %H:%M:%S}  {record.command:<14} "
                       f"{record.status.value:<10} {record.out_dir}")

    return app


cli = FlaskGroup(create_app=create_app)


if __name__ == '__main__':
    cli()
