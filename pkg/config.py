"""
Flask Configuration
"""
import os

from dotenv import load_dotenv

load_dotenv()


def _float(name, default):
    value = os.environ.get(name)
    return float(value) if value else default


def _int(name, default):
    value = os.environ.get(name)
    return int(float(value)) if value else default


class Config:
    """Base configuration"""

    DEBUG = False
    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO')

    # Run ledger
    SQLALCHEMY_DATABASE_URI = os.environ.get('DATABASE_URI') or 'sqlite:///stochsup_runs.db'
    SQLALCHEMY_TRACK_MODIFICATIONS = False
    SQLALCHEMY_ECHO = False  # Set to True for SQL query logging

    # Numerical tolerances
    LP_FEASIBILITY_TOL  = _float('LP_FEASIBILITY_TOL', 1e-7)
    LP_REDUCED_COST_TOL = _float('LP_REDUCED_COST_TOL', 1e-9)
    INTEGRALITY_TOL     = _float('INTEGRALITY_TOL', 1e-6)
    DISTANCE_TOL        = _float('DISTANCE_TOL', 1e-9)
    BUDGET_TOL          = _float('BUDGET_TOL', 1e-7)

    # Iteration caps
    LP_MAX_PIVOTS         = _int('LP_MAX_PIVOTS', 50_000)
    SEPARATION_MAX_ROUNDS = _int('SEPARATION_MAX_ROUNDS', 500)
    RW_CUT_LIMIT_FACTOR   = _int('RW_CUT_LIMIT_FACTOR', 10)

    # Stage-I structures
    MATROID_INTERSECTION        = os.environ.get('MATROID_INTERSECTION', 'augmenting')
    EXPLICIT_MATROID_MAX_GROUND = _int('EXPLICIT_MATROID_MAX_GROUND', 20)
    KNAPSACK_TABLE_CAP          = _int('KNAPSACK_TABLE_CAP', 10 ** 7)

    # Brute-force oracle caps, e.g. "facilities=10,scenarios=6"
    STOCHSUP_CAPS = os.environ.get('STOCHSUP_CAPS')

    # Sampling
    SAA_SAMPLE_CONSTANT = _float('SAA_SAMPLE_CONSTANT', 1.0)
    SAA_DELTA_CONSTANT  = _float('SAA_DELTA_CONSTANT', 3.0)
    PENALTY_WEIGHTING   = os.environ.get('PENALTY_WEIGHTING', 'probability')

    SCHEMA_VERSION = 1


class DevelopmentConfig(Config):
    """Development configuration"""
    DEBUG = True
    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'DEBUG')


class ProductionConfig(Config):
    """Production configuration"""
    DEBUG = False


class TestingConfig(Config):
    """Testing configuration"""
    TESTING = True
    SQLALCHEMY_DATABASE_URI = 'sqlite:///:memory:'
    STOCHSUP_CAPS = None


# Configuration dictionary
config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': ProductionConfig
}
