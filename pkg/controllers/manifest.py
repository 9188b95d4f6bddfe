"""
Run manifests, summary CSVs and the exit-code contract shared by every command.
"""

import csv
import hashlib
import json
import time
from datetime import datetime
from functools import wraps
from pathlib import Path
from typing import Optional

import click
from flask import current_app

from models.db import RunRecord, RunStatus, db
from models.instance import SolveStatus
from models.serialization import SCHEMA_VERSION, dump_json, file_sha256
from solvers.errors import StochSupError
from solvers.settings import SolverSettings

MANIFEST_NAME = 'manifest.json'

# Frozen per command; bump SCHEMA_VERSION when any of these change.
SUMMARY_COLUMNS = {
    'solve': (
        'schema_version', 'algo', 'status', 'radius', 'budget', 'expected_cost',
        'eta_bound', 'max_eta', 'stage1_size', 'scenarios', 'covered_probability',
    ),
    'coverage': (
        'schema_version', 'scenario', 'probability', 'active', 'stage2_size',
        'stage2_cost', 'max_ratio', 'covered',
    ),
    'saa': (
        'schema_version', 'algo', 'status', 'seed', 'epsilon', 'alpha', 'gamma',
        'samples', 'formula_samples', 'repetitions_run', 'radius', 'threshold',
        'threshold_rank', 'delta_exceeded', 'expected_cost', 'violation_probability',
        'max_eta', 'discarded_probability',
    ),
    'appendix-demo': (
        'schema_version', 'p', 'cost', 'stage1_cost', 'samples', 'seeds', 'true_mean',
        'estimate_mean', 'estimate_std', 'relative_std', 'zero_count_fraction',
    ),
}


class InfeasibleRun(click.ClickException):
    exit_code = 2


class PreconditionError(click.ClickException):
    exit_code = 3


def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    return value


class RunContext:
    """Output directory, hashes and timings of one command invocation."""

    def __init__(self, command: str, params: dict, inputs=(), seeds=()):
        self.command = command
        self.params = {key: _jsonable(value) for key, value in params.items()}
        self.out_dir = Path(params['out_dir'])
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.inputs = {name: {'path': str(params[name]), 'sha256': file_sha256(params[name])}
                       for name in inputs if params.get(name)}
        self.seeds = [params[name] for name in seeds if params.get(name) is not None]
        self.settings = SolverSettings.from_mapping(current_app.config)
        self.outputs = {}
        self.details = {}
        self.started_at = datetime.utcnow()
        self._clock = time.perf_counter()

    @property
    def input_hash(self) -> str:
        text = json.dumps({k: v['sha256'] for k, v in self.inputs.items()}, sort_keys=True)
        return hashlib.sha256(text.encode('utf-8')).hexdigest()

    def _track(self, path: Path) -> Path:
        self.outputs[path.name] = file_sha256(path)
        return path

    def write_json(self, name: str, doc: dict) -> Path:
        path = self.out_dir / name
        dump_json(path, doc)
        return self._track(path)

    def write_text(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        path.write_text(text, encoding='utf-8')
        return self._track(path)

    def write_csv(self, name: str, schema: str, rows) -> Path:
        columns = SUMMARY_COLUMNS[schema]
        path = self.out_dir / name
        with open(path, 'w', newline='', encoding='utf-8') as fh:
            writer = csv.DictWriter(fh, fieldnames=columns, lineterminator='\n')
            writer.writeheader()
            for row in rows:
                writer.writerow({'schema_version': SCHEMA_VERSION, **row})
        return self._track(path)

    def finish(self, status: RunStatus, message: Optional[str] = None) -> dict:
        duration = time.perf_counter() - self._clock
        manifest = {
            'schema_version': SCHEMA_VERSION,
            'command': self.command,
            'status': status.value,
            'params': self.params,
            'settings': self.settings.to_dict(),
            'seeds': self.seeds,
            'inputs': self.inputs,
            'outputs': dict(sorted(self.outputs.items())),
            'details': self.details,
            'message': message,
            'started_at': self.started_at.isoformat(),
            'duration_s': duration,
        }
        dump_json(self.out_dir / MANIFEST_NAME, manifest)

        record = RunRecord(
            command=self.command,
            status=status,
            input_hash=self.input_hash,
            out_dir=str(self.out_dir),
            seeds=json.dumps(self.seeds),
            message=message,
            started_at=self.started_at,
            finished_at=datetime.utcnow(),
            duration_s=duration,
        )
        db.session.add(record)
        db.session.commit()
        return manifest


def recorded(command: str, inputs=(), seeds=()):
    """
    Wrap a command body that takes a RunContext first and returns a
    SolveStatus (or None). Maps INFEASIBLE to exit 2 and library errors
    to exit 3, recording the run either way.
    """
    def decorator(f):
        @wraps(f)
        def decorated(**params):
            try:
                run = RunContext(command, params, inputs, seeds)
            except StochSupError as exc:
                raise PreconditionError(str(exc)) from exc
            try:
                status = f(run, **params)
            except StochSupError as exc:
                current_app.logger.error("%s failed: %s", command, exc)
                run.finish(RunStatus.ERROR, str(exc))
                raise PreconditionError(str(exc)) from exc
            except Exception as exc:
                current_app.logger.exception("%s aborted", command)
                run.finish(RunStatus.ERROR, str(exc))
                raise

            if status is SolveStatus.INFEASIBLE:
                run.finish(RunStatus.INFEASIBLE)
                raise InfeasibleRun(f"{command}: INFEASIBLE")
            run.finish(RunStatus.SUCCESS)
        return decorated
    return decorator


__all__ = [
    'MANIFEST_NAME',
    'SUMMARY_COLUMNS',
    'InfeasibleRun',
    'PreconditionError',
    'RunContext',
    'recorded',
]
