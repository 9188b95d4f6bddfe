"""
Run ledger
Using Flask-SQLAlchemy ORM
"""

import enum
from datetime import datetime

from flask_sqlalchemy import SQLAlchemy

db = SQLAlchemy()


# ── ENUMS ─────────────────────────────────────────────────────────────────────

class RunStatus(enum.Enum):
    """Outcome of one CLI invocation"""
    SUCCESS    = "success"
    INFEASIBLE = "infeasible"
    ERROR      = "error"


# ── MODELS ────────────────────────────────────────────────────────────────────

class RunRecord(db.Model):
    """One row per command run; the manifest on disk carries the full detail"""
    __tablename__ = 'run_records'

    id      = db.Column(db.Integer, primary_key=True)
    command = db.Column(db.String(50), nullable=False, index=True)
    status  = db.Column(db.Enum(RunStatus), nullable=False, index=True)

    input_hash = db.Column(db.String(64),  nullable=True, index=True)
    out_dir    = db.Column(db.String(512), nullable=True)
    seeds      = db.Column(db.Text,        nullable=True)   # JSON list
    message    = db.Column(db.Text,        nullable=True)

    # Timestamps
    started_at  = db.Column(db.DateTime, default=datetime.utcnow, nullable=False, index=True)
    finished_at = db.Column(db.DateTime, nullable=True)
    duration_s  = db.Column(db.Float,    nullable=True)

    def to_dict(self):
        return {
            'id': self.id,
            'command': self.command,
            'status': self.status.value,
            'input_hash': self.input_hash,
            'out_dir': self.out_dir,
            'seeds': self.seeds,
            'message': self.message,
            'started_at': self.started_at.isoformat(),
            'finished_at': self.finished_at.isoformat() if self.finished_at else None,
            'duration_s': self.duration_s,
        }

    def __repr__(self):
        return f'<RunRecord {self.command} {self.status.value}>'


# ── INITIALISATION ────────────────────────────────────────────────────────────

def init_db(app):
    """Bind the ledger to the app and create its table."""
    db.init_app(app)

    with app.app_context():
        db.create_all()


# ── EXPORTS ───────────────────────────────────────────────────────────────────

__all__ = [
    'db',
    'RunStatus',
    'RunRecord',
    'init_db',
]
