from ._base import PipelineCommand


class Command(PipelineCommand):
    help = "Genera un CSV de características sintéticas (y opcionalmente una partición de prueba)."
    command = 'synth'
    opciones = ('out', 'test_out', 'test_fraction', 'n_per_grade', 'dimension', 'separation', 'noise', 'seed')
