from ._base import PipelineCommand


class Command(PipelineCommand):
    help = "Escribe por muestra id,mean,std,referable,flipped."
    command = 'predict'
    opciones = ('model', 'test_csv', 'out', 'grade_threshold', 'std_threshold', 'flip')
