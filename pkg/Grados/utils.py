import logging
import os
from pathlib import Path
from tempfile import NamedTemporaryFile

logger = logging.getLogger(__name__)


def _a_temporal(path, datos):
    """Escribe datos en un temporal junto a path y devuelve su nombre."""
    path.parent.mkdir(parents=True, exist_ok=True)
    temporal = NamedTemporaryFile(dir=path.parent, prefix=f".{path.name}.", suffix='.tmp', delete=False)
    try:
        with temporal:
            temporal.write(datos)
            temporal.flush()
            os.fsync(temporal.fileno())
    except BaseException:
        os.unlink(temporal.name)
        raise
    return temporal.name


def _borrar(nombres):
    for nombre in nombres:
        if os.path.exists(nombre):
            os.unlink(nombre)


def escribir_varios(salidas):
    """
    Escribe un conjunto de archivos [(path, contenido), ...] (str o bytes).
    Primero se escriben todos los temporales y solo después se renombran, en
    el orden dado: si falla una escritura no aparece ninguno de los archivos.
    """
    preparados = []
    try:
        for path, contenido in salidas:
            path = Path(path)
            datos = contenido.encode('utf-8') if isinstance(contenido, str) else contenido
            preparados.append((path, _a_temporal(path, datos), len(datos)))
    except BaseException:
        _borrar(temporal for _, temporal, _ in preparados)
        raise

    for i, (path, temporal, n) in enumerate(preparados):
        try:
            os.replace(temporal, path)
        except BaseException:
            _borrar(t for _, t, _ in preparados[i:])
            raise
        logger.debug("escrito %s (%d bytes)", path, n)
    return [path for path, _, _ in preparados]


def escribir_atomico(path, contenido):
    """
    Escribe contenido en path pasando por un temporal del mismo directorio y
    os.replace: quien lea el archivo nunca lo ve a medias.
    """
    return escribir_varios([(path, contenido)])[0]


def tabla_csv(df, sep=','):
    return df.to_csv(sep=sep, index=False, lineterminator='\n')


def guardar_tabla(df, path):
    """Guarda un DataFrame como CSV (sin índice, fin de línea \\n) de forma atómica."""
    return escribir_atomico(path, tabla_csv(df))
