"""
Flujo train / predict / evaluate / synth / sweep: data -> gp -> diagnosis -> metrics.

Cada comando de gestión arma un RunConfig y llama a run(). Los errores del
dominio se propagan como RetigpError; el comando los convierte en código de
salida (1 entrada, 2 numérico).
"""
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from tqdm import tqdm

from . import data, diagnosis, gp, metrics
from .exceptions import InputError
from .utils import escribir_varios, guardar_tabla, tabla_csv

logger = logging.getLogger(__name__)

COMMANDS = ('train', 'predict', 'evaluate', 'synth', 'sweep')

_REQUERIDOS = {
    'train': ('train_csv', 'model'),
    'predict': ('model', 'test_csv', 'out'),
    'evaluate': ('model', 'test_csv', 'out'),
    'synth': ('out',),
    'sweep': ('model', 'test_csv', 'out'),
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    train_csv: str = None
    test_csv: str = None
    model: str = None
    out: str = None
    grade_threshold: float = diagnosis.GRADE_THRESHOLD
    std_threshold: float = diagnosis.STD_THRESHOLD
    flip: bool = True
    max_train: int = 2000
    restarts: int = 3
    seed: int = 0
    max_iter: int = 200
    lml_tol: float = 1e-6
    grad_tol: float = 1e-5
    predict_batch: int = 1024
    show_progress: bool = False
    # synth
    n_per_grade: tuple = (50, 50, 50, 50, 50)
    dimension: int = 8
    separation: float = 3.0
    noise: float = 0.5
    test_out: str = None
    test_fraction: float = 0.3
    # sweep
    std_grid: tuple = ()

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"comando desconocido {self.command!r}, opciones: {', '.join(COMMANDS)}")
        for nombre in ('grade_threshold', 'std_threshold'):
            if not math.isfinite(float(getattr(self, nombre))):
                raise InputError(f"{nombre} debe ser finito")
        faltan = [f"--{n.replace('_', '-')}" for n in _REQUERIDOS[self.command] if not getattr(self, n)]
        if faltan:
            raise InputError(f"{self.command} requiere {', '.join(faltan)}")
        if self.command == 'sweep' and not self.std_grid:
            raise InputError("sweep requiere al menos un valor en --std-grid")

    def fit_config(self):
        return gp.FitConfig(
            max_train=self.max_train,
            restarts=self.restarts,
            seed=self.seed,
            max_iter=self.max_iter,
            lml_tol=self.lml_tol,
            grad_tol=self.grad_tol,
            show_progress=self.show_progress,
        )


@dataclass
class RunResult:
    command: str
    status: int = 0
    artifacts: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def _train(config, resultado):
    records, manifest = data.load_feature_csv(config.train_csv)
    stats = data.fit_normalizer(records)
    Z = data.apply_normalizer(stats, records)
    grades = np.array([r.grade for r in records], dtype=int)

    model = gp.fit(Z, grades, config.fit_config(), normalizer=stats)
    resultado.artifacts.append(data.save_model(model, config.model))

    hp = model.hp
    resultado.summary.update({
        'n_records': manifest.n_records,
        'n_train': model.n_train,
        'dimension': model.dimension,
        'lml': model.lml,
        'length_scale': hp.length_scale,
        'signal_variance': hp.signal_variance,
        'noise_variance': hp.noise_variance,
        'jitter': model.jitter,
    })


def _predicciones(config):
    model = data.load_model(config.model)
    if model.normalizer is None:
        raise InputError("el modelo no trae estadísticas de normalización")
    records, _ = data.load_feature_csv(config.test_csv)
    Z = data.apply_normalizer(model.normalizer, records)
    medias, stds = gp.predict_arrays(model, Z, batch_size=config.predict_batch,
                                     show_progress=config.show_progress)
    predicciones = [gp.Prediction(float(m), float(s)) for m, s in zip(medias, stds)]
    return records, medias, predicciones


def _predict(config, resultado):
    records, medias, predicciones = _predicciones(config)
    decisiones = diagnosis.decide(predicciones, config.grade_threshold, config.std_threshold, flip=config.flip)
    df = pd.DataFrame({
        'id': [r.id for r in records],
        'mean': [d.mean for d in decisiones],
        'std': [d.std for d in decisiones],
        'referable': [d.referable for d in decisiones],
        'flipped': [d.flipped for d in decisiones],
    })
    resultado.artifacts.append(guardar_tabla(df, config.out))
    resultado.summary.update({
        'n_samples': len(decisiones),
        'referable': int(df['referable'].sum()),
        'flipped': int(df['flipped'].sum()),
    })


def _rutas_reporte(out):
    out = Path(out)
    return {
        'json': out,
        'text': out.with_suffix('.txt'),
        'boxplot': out.with_name(f"{out.stem}_boxplot.tsv"),
        'roc': out.with_name(f"{out.stem}_roc.tsv"),
    }


def _evaluate(config, resultado):
    records, medias, predicciones = _predicciones(config)
    grades = [r.grade for r in records]
    labels = [diagnosis.grade_to_referable(g) for g in grades]

    con_flip = diagnosis.decide(predicciones, config.grade_threshold, config.std_threshold, flip=config.flip)
    solo_umbral = diagnosis.decide(predicciones, config.grade_threshold, flip=False)
    reporte = metrics.evaluate(con_flip, labels, medias, grades=grades)
    reporte_umbral = metrics.evaluate(solo_umbral, labels, medias)

    documento = {
        'config': {
            'model': str(config.model),
            'test_csv': str(config.test_csv),
            'grade_threshold': config.grade_threshold,
            'std_threshold': config.std_threshold,
            'flip': config.flip,
        },
        'auc_score': 'posterior_mean',
        'with_flip': reporte.to_dict(),
        'threshold_only': reporte_umbral.to_dict(),
    }
    rutas = _rutas_reporte(config.out)
    roc = pd.DataFrame(columns=['fpr', 'tpr', 'threshold'])
    if reporte.auc is not None:
        fpr, tpr, umbrales = metrics.roc_curve(medias, labels)
        roc = pd.DataFrame({'fpr': fpr, 'tpr': tpr, 'threshold': umbrales})

    # El JSON se renombra al final: si existe, el resto del reporte también
    resultado.artifacts += escribir_varios([
        (rutas['boxplot'], metrics.box_table(reporte.group_stats)),
        (rutas['roc'], tabla_csv(roc, sep='\t')),
        (rutas['text'], reporte.to_text() + reporte_umbral.to_text(prefix='threshold_only.')),
        (rutas['json'], json.dumps(documento, indent=2, sort_keys=True) + '\n'),
    ])
    resultado.summary.update({
        'tp': reporte.tp, 'fp': reporte.fp, 'tn': reporte.tn, 'fn': reporte.fn,
        'sensitivity': reporte.sensitivity if reporte.sensitivity is not None else metrics.UNDEFINED,
        'specificity': reporte.specificity if reporte.specificity is not None else metrics.UNDEFINED,
        'auc': reporte.auc if reporte.auc is not None else metrics.UNDEFINED,
        'flips': reporte.flips,
    })


def _synth(config, resultado):
    records = data.synthesize_dataset(config.n_per_grade, config.dimension, config.separation,
                                      config.noise, config.seed)
    if config.test_out:
        train, test = data.split_records(records, config.test_fraction, config.seed)
        resultado.artifacts.append(data.export_feature_csv(train, config.out))
        resultado.artifacts.append(data.export_feature_csv(test, config.test_out))
        resultado.summary.update({'n_train': len(train), 'n_test': len(test)})
    else:
        resultado.artifacts.append(data.export_feature_csv(records, config.out))
        resultado.summary['n_records'] = len(records)


def _sweep(config, resultado):
    records, medias, predicciones = _predicciones(config)
    labels = [diagnosis.grade_to_referable(r.grade) for r in records]

    filas = []
    for umbral in tqdm(config.std_grid, desc='barrido', disable=not config.show_progress):
        decisiones = diagnosis.decide(predicciones, config.grade_threshold, float(umbral), flip=True)
        conteo = metrics.confusion(decisiones, labels)
        sensitivity, specificity = metrics.sens_spec(*conteo)
        filas.append({
            'std_threshold': float(umbral),
            **conteo._asdict(),
            'sensitivity': metrics.UNDEFINED if sensitivity is None else sensitivity,
            'specificity': metrics.UNDEFINED if specificity is None else specificity,
            'flips': sum(1 for d in decisiones if d.flipped),
        })
    resultado.artifacts.append(guardar_tabla(pd.DataFrame(filas), config.out))
    resultado.summary['rows'] = len(filas)


_ACCIONES = {
    'train': _train,
    'predict': _predict,
    'evaluate': _evaluate,
    'synth': _synth,
    'sweep': _sweep,
}


def run(config):
    resultado = RunResult(command=config.command)
    try:
        _ACCIONES[config.command](config, resultado)
    except OSError as exc:
        raise InputError(f"error de archivo: {exc}") from exc
    for artefacto in resultado.artifacts:
        logger.info("%s: escrito %s", config.command, artefacto)
    return resultado
