from pathlib import Path
from decouple import config

BASE_DIR = Path(__file__).resolve().parent.parent


def _optional_int(value):
    return int(value) if value not in (None, "") else None


# Security
SECRET_KEY = config("DJANGO_SECRET_KEY", default="insecure-secret-key")
DEBUG = config("DEBUG", default=False, cast=bool)

# Installed apps
INSTALLED_APPS = [
    "ris",
]

# No persistent results store: sweeps write CSV/JSON files only.
DATABASES = {}

# Simulation knobs (the library itself never reads settings; the
# management commands and `ris.experiments` pass these through)
RIS_IOI = {
    "SEED": config("RIS_IOI_SEED", default=None, cast=_optional_int),
    "THREADS": config("RIS_IOI_THREADS", default=1, cast=int),
    "CHUNKS": config("RIS_IOI_CHUNKS", default=16, cast=int),
    "OUTAGE_TRIALS": config("RIS_IOI_OUTAGE_TRIALS", default=1_000_000, cast=int),
    "SE_TRIALS": config("RIS_IOI_SE_TRIALS", default=100_000, cast=int),
    "QUAD_NODES": config("RIS_IOI_QUAD_NODES", default=64, cast=int),
    "QUAD_MAX_NODES": config("RIS_IOI_QUAD_MAX_NODES", default=1024, cast=int),
    "QUAD_RTOL": config("RIS_IOI_QUAD_RTOL", default=1e-9, cast=float),
}

# Logging
LOG_LEVEL = config("RIS_IOI_LOG_LEVEL", default="INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "simple": {
            "format": "{asctime} {levelname} {name} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "simple",
        },
    },
    "loggers": {
        "ris": {
            "handlers": ["console"],
            "level": LOG_LEVEL,
            "propagate": False,
        },
    },
}

# Localization
LANGUAGE_CODE = "en-us"
USE_I18N = False
