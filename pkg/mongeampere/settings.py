import logging.config
from pathlib import Path

from decouple import config

# Build paths
BASE_DIR = Path(__file__).resolve().parent.parent

# ========== RUN DEFAULTS ==========
# Overridden by the run configuration file, which is overridden by CLI flags.
LOG_LEVEL = config('MA_LOG_LEVEL', default='INFO')
LOG_FORMAT = config('MA_LOG_FORMAT', default='verbose')
THREADS = config('MA_THREADS', default=1, cast=int)
OUTPUT_DIR = Path(config('MA_OUTPUT_DIR', default='results'))
DEFAULT_DEGREE = config('MA_DEFAULT_DEGREE', default=2, cast=int)

# c0 in f >= c0 > 0; data below this floor at any quadrature point is rejected
MIN_DENSITY = config('MA_MIN_DENSITY', default=1e-12, cast=float)

# ========== LINEAR ALGEBRA ==========
SOLVE_RTOL = config('MA_SOLVE_RTOL', default=1e-12, cast=float)
CG_MAX_ITER_FACTOR = 10

# ========== LOGGING ==========
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {message}',
            'style': '{',
        },
        'structured': {
            'format': 'level={levelname} time={asctime} logger={name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': LOG_FORMAT,
        },
    },
    'root': {
        'handlers': ['console'],
        'level': LOG_LEVEL,
    },
    'loggers': {
        'py.warnings': {
            'level': 'WARNING',  # scipy efficiency warnings are noise here
        },
    },
}


def configure_logging(level=None, logfile=None):
    """Apply ``LOGGING``, optionally overriding the level and adding a log file."""
    logging_config = {
        **LOGGING,
        'handlers': dict(LOGGING['handlers']),
        'root': dict(LOGGING['root']),
    }
    if level:
        logging_config['root']['level'] = str(level).upper()
    if logfile:
        logging_config['handlers']['file'] = {
            'class': 'logging.FileHandler',
            'filename': str(logfile),
            'formatter': 'structured',
            'mode': 'w',
        }
        logging_config['root']['handlers'] = ['console', 'file']
    logging.config.dictConfig(logging_config)
