"""
Ingesta de características, normalización, persistencia del modelo y
generador sintético que reemplaza al extractor CNN en pruebas de escritorio.

Formato CSV: cabecera ``id,grade,f0,...,f{D-1}``, UTF-8, sin comillas.

Archivo de modelo (enteros little-endian):

    magic           8 bytes   b'RETIGPM\\n'
    version         uint32    FORMAT_VERSION
    header_len      uint32    bytes de la cabecera JSON
    payload_len     uint64    bytes de los arreglos
    checksum        32 bytes  sha256(cabecera + payload)
    cabecera        JSON UTF-8 (claves ordenadas): arreglos (nombre, dtype, forma),
                    train_subset_seed, jitter, lml
    payload         arreglos float64 '<f8' en orden C, concatenados
"""
import csv
import dataclasses
import hashlib
import json
import logging
import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from . import gp
from .exceptions import ChecksumError, InputError, ModelLoadError, ParseError, VersionError
from .kernel import Hyperparams
from .utils import escribir_atomico, guardar_tabla

logger = logging.getLogger(__name__)

STD_FLOOR = 1e-8
N_GRADES = 5

MAGIC = b'RETIGPM\n'
FORMAT_VERSION = 1
_FIXED = struct.Struct('<8sIIQ32s')
_RECOMPUTE_TOL = 1e-10


@dataclass(frozen=True)
class FeatureRecord:
    id: str
    features: np.ndarray
    grade: int


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray
    std: np.ndarray

    @property
    def dimension(self):
        return self.mean.shape[0]

    @property
    def degenerate(self):
        return self.std <= STD_FLOOR


@dataclass(frozen=True)
class DatasetManifest:
    path: str
    n_records: int
    dimension: int
    grade_histogram: tuple


def records_to_arrays(records):
    if not records:
        raise InputError("no hay registros")
    ids = [r.id for r in records]
    X = np.vstack([np.asarray(r.features, dtype=float) for r in records])
    grades = np.array([r.grade for r in records], dtype=int)
    return ids, X, grades


def _histograma(grades):
    return tuple(int(c) for c in np.bincount(np.asarray(grades, dtype=int), minlength=N_GRADES))


def _a_float(texto):
    # float() redondea correctamente el decimal; lo no numérico queda como nan
    try:
        return float(texto)
    except ValueError:
        return float('nan')


def load_feature_csv(path):
    """Lee un CSV de características; devuelve (registros, DatasetManifest)."""
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"no existe el archivo {path}")

    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8', quoting=csv.QUOTE_NONE)
    except pd.errors.EmptyDataError:
        raise ParseError("archivo vacío, falta la cabecera", line=1)
    except pd.errors.ParserError as exc:
        # pandas informa "Expected N fields in line L, saw M"
        match = re.search(r'line (\d+)', str(exc))
        raise ParseError(f"ancho de fila inconsistente ({exc})", line=int(match.group(1)) if match else None)
    except UnicodeDecodeError as exc:
        raise ParseError(f"el archivo no es UTF-8: {exc}")

    columnas = list(df.columns)
    dimension = len(columnas) - 2
    esperadas = ['id', 'grade'] + [f'f{i}' for i in range(max(dimension, 0))]
    if dimension < 1 or columnas != esperadas:
        raise ParseError(f"cabecera inválida, se esperaba id,grade,f0,...: {','.join(columnas[:6])}", line=1)
    if df.empty:
        raise ParseError("no records: el archivo solo tiene cabecera", line=2)

    incompletas = df.isna().any(axis=1).to_numpy()
    if incompletas.any():
        raise ParseError("fila con menos campos que la cabecera", line=int(np.argmax(incompletas)) + 2)

    texto_grado = df['grade'].str.strip()
    no_enteros = ~texto_grado.str.fullmatch(r'[+-]?\d+').to_numpy()
    if no_enteros.any():
        i = int(np.argmax(no_enteros))
        raise ParseError(f"grado no entero: {df['grade'].iloc[i]!r}", line=i + 2)
    grades = texto_grado.map(int).to_numpy(dtype=int)
    fuera = (grades < 0) | (grades >= N_GRADES)
    if fuera.any():
        i = int(np.argmax(fuera))
        raise ParseError(f"grado fuera de rango 0-4: {grades[i]}", line=i + 2)

    columnas_f = esperadas[2:]
    X = df[columnas_f].map(_a_float).to_numpy(dtype=float)
    no_finitas = ~np.isfinite(X).all(axis=1)
    if no_finitas.any():
        i = int(np.argmax(no_finitas))
        raise ParseError("característica no finita o no numérica", line=i + 2)

    ids = df['id'].tolist()
    records = [FeatureRecord(ids[i], X[i], int(grades[i])) for i in range(len(ids))]
    manifest = DatasetManifest(str(path), len(records), dimension, _histograma(grades))
    logger.info("leídos %d registros (D=%d) de %s, histograma %s",
                manifest.n_records, dimension, path, list(manifest.grade_histogram))
    return records, manifest


def export_feature_csv(records, path):
    ids, X, grades = records_to_arrays(records)
    df = pd.DataFrame(X, columns=[f'f{i}' for i in range(X.shape[1])])
    df.insert(0, 'grade', grades)
    df.insert(0, 'id', ids)
    return guardar_tabla(df, path)


def fit_normalizer(train):
    _, X, _ = records_to_arrays(train)
    mean = X.mean(axis=0)
    std = np.maximum(X.std(axis=0), STD_FLOOR)
    return NormStats(mean, std)


def _features(records_or_matrix):
    if isinstance(records_or_matrix, (list, tuple)):
        return records_to_arrays(records_or_matrix)[1]
    X = np.asarray(records_or_matrix, dtype=float)
    return X[np.newaxis, :] if X.ndim == 1 else X


def apply_normalizer(stats, records):
    """Z-score con las estadísticas de entrenamiento; columnas constantes quedan en 0."""
    X = _features(records)
    if X.shape[1] != stats.dimension:
        raise InputError(f"dimensión {X.shape[1]} distinta de la del normalizador {stats.dimension}")
    Z = (X - stats.mean) / stats.std
    Z[:, stats.degenerate] = 0.0
    return Z


def invert_normalizer(stats, Z):
    Z = np.asarray(Z, dtype=float)
    return Z * stats.std + stats.mean


def synthesize_dataset(n_per_grade, D, separation, noise, seed):
    """
    Muestras del grado g ~ N(g * separation * u, noise^2 I), con u un vector
    unitario fijado por la semilla: los grados quedan sobre una recta.
    """
    n_per_grade = [int(n) for n in n_per_grade]
    if len(n_per_grade) != N_GRADES or min(n_per_grade) < 0:
        raise InputError(f"n_per_grade debe tener 5 enteros no negativos: {n_per_grade}")
    if int(D) < 2:
        raise InputError(f"D debe ser >= 2, se recibió {D}")
    if not separation > 0 or not noise > 0:
        raise InputError("separation y noise deben ser positivos")

    rng = np.random.default_rng(seed)
    u = rng.standard_normal(int(D))
    u /= np.linalg.norm(u)

    records = []
    for grade, n in enumerate(n_per_grade):
        X = grade * separation * u + noise * rng.standard_normal((n, int(D)))
        records.extend(FeatureRecord(f's{seed}-g{grade}-{i:05d}', X[i], grade) for i in range(n))
    return records


def split_records(records, test_fraction, seed):
    """Partición entrenamiento/prueba estratificada por grado; conserva el orden original."""
    if not 0 < test_fraction < 1:
        raise InputError(f"test_fraction debe estar en (0, 1): {test_fraction}")
    rng = np.random.default_rng(seed)
    grades = np.array([r.grade for r in records], dtype=int)
    es_prueba = np.zeros(len(records), dtype=bool)
    for grade in range(N_GRADES):
        idx = np.flatnonzero(grades == grade)
        n_test = int(round(test_fraction * len(idx)))
        es_prueba[rng.permutation(idx)[:n_test]] = True
    train = [r for r, t in zip(records, es_prueba) if not t]
    test = [r for r, t in zip(records, es_prueba) if t]
    return train, test


def corrupt_grades(records, fraction, seed):
    """Reemplaza una fracción de los grados por otro grado distinto, al azar."""
    if not 0 <= fraction <= 1:
        raise InputError(f"fraction debe estar en [0, 1]: {fraction}")
    rng = np.random.default_rng(seed)
    n = len(records)
    elegidos = rng.choice(n, size=int(round(fraction * n)), replace=False)
    corruptos = list(records)
    for i in elegidos:
        nuevo = (corruptos[i].grade + int(rng.integers(1, N_GRADES))) % N_GRADES
        corruptos[i] = dataclasses.replace(corruptos[i], grade=nuevo)
    return corruptos


def _arreglos_modelo(model):
    arreglos = {
        'log_hp': model.hp.as_array(),
        'X_train': model.X_train,
        'y_train': model.y_train,
        'chol_L': model.chol_L,
        'alpha': model.alpha,
    }
    if model.normalizer is not None:
        arreglos['norm_mean'] = model.normalizer.mean
        arreglos['norm_std'] = model.normalizer.std
    return arreglos


def serialize_model(model):
    arreglos = _arreglos_modelo(model)
    partes, descriptores = [], []
    for nombre, arr in arreglos.items():
        arr = np.ascontiguousarray(arr, dtype='<f8')
        descriptores.append({'name': nombre, 'dtype': '<f8', 'shape': list(arr.shape)})
        partes.append(arr.tobytes(order='C'))
    payload = b''.join(partes)
    cabecera = json.dumps({
        'arrays': descriptores,
        'train_subset_seed': int(model.train_subset_seed),
        'jitter': float(model.jitter),
        'lml': float(model.lml),
    }, sort_keys=True).encode('utf-8')
    checksum = hashlib.sha256(cabecera + payload).digest()
    return _FIXED.pack(MAGIC, FORMAT_VERSION, len(cabecera), len(payload), checksum) + cabecera + payload


def save_model(model, path):
    escribir_atomico(path, serialize_model(model))
    logger.info("modelo guardado en %s (n=%d, D=%d)", path, model.n_train, model.dimension)
    return Path(path)


def _max_rel_diff(a, b):
    escala = max(1.0, float(np.max(np.abs(b))) if b.size else 1.0)
    return float(np.max(np.abs(a - b))) / escala if a.size else 0.0


def deserialize_model(datos):
    if len(datos) < _FIXED.size:
        raise ModelLoadError("archivo de modelo truncado")
    magic, version, header_len, payload_len, checksum = _FIXED.unpack_from(datos)
    if magic != MAGIC:
        raise ModelLoadError("no es un archivo de modelo (magic incorrecto)")
    if version != FORMAT_VERSION:
        raise VersionError(f"versión de formato {version} no soportada (se espera {FORMAT_VERSION})")
    if len(datos) != _FIXED.size + header_len + payload_len:
        raise ModelLoadError("archivo de modelo truncado o con bytes sobrantes")

    cuerpo = datos[_FIXED.size:]
    if hashlib.sha256(cuerpo).digest() != checksum:
        raise ChecksumError("checksum del modelo no coincide")

    try:
        cabecera = json.loads(cuerpo[:header_len].decode('utf-8'))
        arreglos, offset = {}, header_len
        for desc in cabecera['arrays']:
            forma = tuple(desc['shape'])
            n_bytes = 8 * int(np.prod(forma, dtype=np.int64))
            arreglos[desc['name']] = np.frombuffer(cuerpo, dtype='<f8', count=n_bytes // 8,
                                                   offset=offset).reshape(forma).astype(float)
            offset += n_bytes
        hp = Hyperparams.from_array(arreglos['log_hp'])
        X, y = arreglos['X_train'], arreglos['y_train']
        seed = int(cabecera['train_subset_seed'])
    except (KeyError, ValueError, TypeError) as exc:
        raise ModelLoadError(f"contenido del modelo inválido: {exc}")

    normalizer = None
    if 'norm_mean' in arreglos:
        normalizer = NormStats(arreglos['norm_mean'], arreglos['norm_std'])

    # Se refactoriza para verificar; se conservan los arreglos guardados
    recalculado = gp.condition(X, y, hp, normalizer=normalizer, train_subset_seed=seed)
    for nombre in ('chol_L', 'alpha'):
        if _max_rel_diff(getattr(recalculado, nombre), arreglos[nombre]) > _RECOMPUTE_TOL:
            raise ChecksumError(f"{nombre} recalculado no coincide con el guardado")

    return gp.GPModel(
        hp=hp,
        X_train=X,
        y_train=y,
        chol_L=arreglos['chol_L'],
        alpha=arreglos['alpha'],
        normalizer=normalizer,
        train_subset_seed=seed,
        jitter=float(cabecera.get('jitter', recalculado.jitter)),
        lml=float(cabecera.get('lml', recalculado.lml)),
    )


def load_model(path):
    path = Path(path)
    try:
        datos = path.read_bytes()
    except OSError as exc:
        raise ModelLoadError(f"no se pudo leer el modelo {path}: {exc.strerror}")
    model = deserialize_model(datos)
    logger.info("modelo cargado de %s (n=%d, D=%d)", path, model.n_train, model.dimension)
    return model
