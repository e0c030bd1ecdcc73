"""
Django settings for Retigp project.

Proyecto de línea de comandos: regresión con procesos gaussianos sobre
vectores de características de imágenes de fondo de ojo, graduadas 0-4.
No hay superficie web; solo comandos de gestión (manage.py train, predict,
evaluate, synth, sweep).
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Sin vistas ni sesiones; Django la exige igual al arrancar.
SECRET_KEY = os.environ.get('RETIGP_SECRET_KEY', 'retigp-solo-linea-de-comandos')

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'Grados',
]

# Sin modelos: no hace falta base de datos.
DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


def _env_int(nombre, defecto):
    valor = os.environ.get(nombre)
    return int(valor) if valor else defecto


# Parámetros del pipeline: 1.5 binariza el grado, 0.84 es el umbral de la
# regla de incertidumbre.
RETIGP = {
    'GRADE_THRESHOLD': 1.5,
    'STD_THRESHOLD': 0.84,
    'MAX_TRAIN': _env_int('RETIGP_MAX_TRAIN', 2000),
    'RESTARTS': _env_int('RETIGP_RESTARTS', 3),
    'SEED': 0,
    'MAX_ITER': 200,
    'LML_TOL': 1e-6,
    'GRAD_TOL': 1e-5,
    'PREDICT_BATCH': 1024,
    'SWEEP_GRID': [round(0.05 * i, 2) for i in range(41)],
    'SHOW_PROGRESS': os.environ.get('RETIGP_SHOW_PROGRESS', '') == '1',
    # Generador sintético
    'SYNTH_N_PER_GRADE': [50, 50, 50, 50, 50],
    'SYNTH_DIMENSION': 8,
    'SYNTH_SEPARATION': 3.0,
    'SYNTH_NOISE': 0.5,
    'SYNTH_TEST_FRACTION': 0.3,
}


# Logging: todo a stderr, los artefactos de salida quedan limpios.
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'Grados': {
            'handlers': ['console'],
            'level': os.environ.get('RETIGP_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}
