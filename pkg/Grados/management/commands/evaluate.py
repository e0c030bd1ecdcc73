from ._base import PipelineCommand


class Command(PipelineCommand):
    help = ("Predice y evalúa: confusión, sensibilidad, especificidad, AUC e incertidumbre por grupo. "
            "Escribe el reporte JSON, uno de texto y las tablas de cajas y ROC.")
    command = 'evaluate'
    opciones = ('model', 'test_csv', 'out', 'grade_threshold', 'std_threshold', 'flip')
