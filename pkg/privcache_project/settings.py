"""
Django settings for privcache_project project.

No database, no HTTP surface: the project hosts the management commands
and the Celery tasks that count audit worlds.
"""

import sys
from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='privcache-local-only')
DEBUG = config('DEBUG', default=False, cast=bool)
ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',

    # Local apps
    'privcache',
]

DATABASES = {}

USE_TZ = True
TIME_ZONE = 'UTC'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Audits

# Maximum number of (library, randomness, demand) worlds enumerated per audit
PRIVCACHE_WORLD_BUDGET = config('PRIVCACHE_WORLD_BUDGET', default=2 ** 24, cast=int)

# Number of world partitions dispatched to count_world_partition
PRIVCACHE_AUDIT_PARTITIONS = config('PRIVCACHE_AUDIT_PARTITIONS', default=4, cast=int)

# Field order used by man / yma / vu when no q is given
PRIVCACHE_DEFAULT_Q = config('PRIVCACHE_DEFAULT_Q', default=2, cast=int)


# Celery

CELERY_BROKER_URL = config('CELERY_BROKER_URL', default='memory://')
CELERY_RESULT_BACKEND = config('CELERY_RESULT_BACKEND', default='cache+memory://')
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = 'UTC'

# Without a worker, partitions run in-process
CELERY_TASK_ALWAYS_EAGER = config('CELERY_TASK_ALWAYS_EAGER', default=True, cast=bool)
CELERY_TASK_EAGER_PROPAGATES = True


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'stream': sys.stderr,
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'privcache': {
            'handlers': ['console'],
            'level': config('PRIVCACHE_LOG_LEVEL', default='INFO'),
            'propagate': False,
        },
    },
}

# Test configuration
if 'test' in sys.argv or 'pytest' in sys.modules:
    CELERY_TASK_ALWAYS_EAGER = True
    PRIVCACHE_AUDIT_PARTITIONS = 2
