from ._base import PipelineCommand


class Command(PipelineCommand):
    help = "Ajusta el normalizador y el GP sobre un CSV de entrenamiento y guarda el modelo."
    command = 'train'
    opciones = ('train_csv', 'model', 'max_train', 'restarts', 'seed')
