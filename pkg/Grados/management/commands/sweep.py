from ._base import PipelineCommand


class Command(PipelineCommand):
    help = "Sensibilidad y especificidad para cada valor de --std-grid, una fila por umbral."
    command = 'sweep'
    opciones = ('model', 'test_csv', 'out', 'grade_threshold', 'std_grid')
