from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from Grados.exceptions import RetigpError
from Grados.pipeline import RunConfig, run


def _opciones():
    cfg = settings.RETIGP
    return {
        'train_csv': (('--train-csv',), {'help': 'CSV de entrenamiento (id,grade,f0,...)'}),
        'test_csv': (('--test-csv',), {'help': 'CSV a predecir o evaluar'}),
        'model': (('--model',), {'help': 'Archivo del modelo'}),
        'out': (('--out',), {'help': 'Archivo de salida'}),
        'grade_threshold': (('--grade-threshold',), {
            'type': float, 'default': cfg['GRADE_THRESHOLD'],
            'help': 'Umbral sobre la media posterior (por defecto %(default)s)'}),
        'std_threshold': (('--std-threshold',), {
            'type': float, 'default': cfg['STD_THRESHOLD'],
            'help': 'Negativos con std mayor a este valor pasan a positivos (por defecto %(default)s)'}),
        'flip': (('--no-flip',), {
            'dest': 'flip', 'action': 'store_false',
            'help': 'Desactiva la regla de incertidumbre'}),
        'max_train': (('--max-train',), {'type': int, 'default': cfg['MAX_TRAIN']}),
        'restarts': (('--restarts',), {'type': int, 'default': cfg['RESTARTS']}),
        'seed': (('--seed',), {'type': int, 'default': cfg['SEED']}),
        'n_per_grade': (('--n-per-grade',), {
            'type': int, 'nargs': 5, 'default': cfg['SYNTH_N_PER_GRADE'],
            'help': 'Muestras por grado 0..4'}),
        'dimension': (('--dimension',), {'type': int, 'default': cfg['SYNTH_DIMENSION']}),
        'separation': (('--separation',), {'type': float, 'default': cfg['SYNTH_SEPARATION']}),
        'noise': (('--noise',), {'type': float, 'default': cfg['SYNTH_NOISE']}),
        'test_out': (('--test-out',), {'help': 'Si se indica, escribe también una partición de prueba'}),
        'test_fraction': (('--test-fraction',), {'type': float, 'default': cfg['SYNTH_TEST_FRACTION']}),
        'std_grid': (('--std-grid',), {
            'type': float, 'nargs': '+', 'default': cfg['SWEEP_GRID'],
            'help': 'Valores de std_threshold a evaluar'}),
    }


class PipelineCommand(BaseCommand):
    """Base de los comandos: cada subclase define command y sus opciones."""
    command = None
    opciones = ()

    def add_arguments(self, parser):
        definiciones = _opciones()
        for nombre in self.opciones:
            flags, kwargs = definiciones[nombre]
            parser.add_argument(*flags, **kwargs)

    def handle(self, *args, **options):
        cfg = settings.RETIGP
        campos = {
            'max_iter': cfg['MAX_ITER'],
            'lml_tol': cfg['LML_TOL'],
            'grad_tol': cfg['GRAD_TOL'],
            'predict_batch': cfg['PREDICT_BATCH'],
            'show_progress': cfg['SHOW_PROGRESS'],
        }
        for nombre in self.opciones:
            valor = options.get(nombre)
            if valor is not None:
                campos[nombre] = tuple(valor) if isinstance(valor, list) else valor

        try:
            resultado = run(RunConfig(command=self.command, **campos))
        except RetigpError as exc:
            raise CommandError(str(exc), returncode=exc.exit_status)

        for clave, valor in resultado.summary.items():
            self.stdout.write(f"{clave}: {valor}")
