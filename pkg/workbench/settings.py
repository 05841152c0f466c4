import os
from pathlib import Path


BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv("DJANGO_SECRET_KEY", "arcane-workbench-offline")
DEBUG = False
ALLOWED_HOSTS: list[str] = []

INSTALLED_APPS = [
    "arcane",
]

DATABASES: dict[str, dict] = {}

USE_I18N = False
USE_TZ = True
TIME_ZONE = "UTC"
LANGUAGE_CODE = "en-us"

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

ARCANE_LOG = os.getenv("ARCANE_LOG", "WARNING").strip().upper() or "WARNING"

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {
            "format": "%(asctime)s %(levelname)s %(name)s %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "plain",
        },
    },
    "loggers": {
        "arcane": {
            "handlers": ["console"],
            "level": ARCANE_LOG,
            "propagate": False,
        },
    },
}

ARCANE_SEED = int(os.getenv("ARCANE_SEED", "20240101"))
ARCANE_OUTPUT_DIR = Path(os.getenv("ARCANE_OUTPUT_DIR", str(BASE_DIR / "out")))
ARCANE_REPORT_FORMATS = [
    item.strip()
    for item in os.getenv("ARCANE_REPORT_FORMATS", "json,csv").split(",")
    if item.strip()
]
ARCANE_ROSTER_PATH = Path(
    os.getenv("ARCANE_ROSTER_PATH", str(BASE_DIR / "arcane" / "data" / "roster.yaml"))
)

ARCANE_DATASET = {
    "campaigns_per_actor": int(os.getenv("ARCANE_CAMPAIGNS_PER_ACTOR", "12")),
    "window_start": os.getenv("ARCANE_WINDOW_START", "2024-01-01"),
    "window_end": os.getenv("ARCANE_WINDOW_END", "2025-06-30"),
    "evasion_enabled": os.getenv("ARCANE_EVASION_ENABLED", "1") not in {"0", "false", "no"},
}

ARCANE_ATTRIBUTION = {
    "decay_rate": float(os.getenv("ARCANE_DECAY_RATE", "0.005")),
    "similarity_threshold": float(os.getenv("ARCANE_SIMILARITY_THRESHOLD", "0.45")),
    "confidence_threshold": float(os.getenv("ARCANE_CONFIDENCE_THRESHOLD", "0.85")),
    "min_train": int(os.getenv("ARCANE_MIN_TRAIN", "1")),
    "likelihood_slope": float(os.getenv("ARCANE_LIKELIHOOD_SLOPE", "0.45")),
    "likelihood_floor": float(os.getenv("ARCANE_LIKELIHOOD_FLOOR", "0.05")),
    "carry_prior": os.getenv("ARCANE_CARRY_PRIOR", "0") in {"1", "true", "yes"},
}

ARCANE_EVALUATION = {
    "pairs": int(os.getenv("ARCANE_PAIRS", "2000")),
    "evasion_levels": [0.0, 0.25, 0.5, 0.75, 1.0],
    "trials": int(os.getenv("ARCANE_TRIALS", "20")),
    "min_train_values": [1, 2, 3, 4, 5, 6],
    "workers": int(os.getenv("ARCANE_WORKERS", "1")),
}
