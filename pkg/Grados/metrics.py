"""
Métricas de evaluación: matriz de confusión, sensibilidad/especificidad,
AUC por estadístico de rangos y estadísticas de incertidumbre por grupo
(TP, FP, TN, FN).

Los cocientes sin denominador (clase vacía) se informan como None
("undefined" en el reporte de texto), nunca como 0.
Cuartiles: interpolación lineal entre estadísticos de orden
(numpy.percentile, method='linear').
"""
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.stats import rankdata

from .exceptions import InputError

GROUPS = ('TP', 'FP', 'TN', 'FN')
QUARTILE_METHOD = 'linear'
UNDEFINED = 'undefined'


class Confusion(NamedTuple):
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass(frozen=True)
class BoxStats:
    count: int
    min: Optional[float] = None
    q1: Optional[float] = None
    median: Optional[float] = None
    q3: Optional[float] = None
    max: Optional[float] = None

    def to_dict(self):
        return {'count': self.count, 'min': self.min, 'q1': self.q1, 'median': self.median,
                'q3': self.q3, 'max': self.max}


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    tn: int
    fn: int
    sensitivity: Optional[float]
    specificity: Optional[float]
    auc: Optional[float]
    group_stats: dict
    flips: int = 0
    quartile_method: str = QUARTILE_METHOD
    grading: dict = field(default=None)

    @property
    def n_samples(self):
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self):
        d = {
            'n_samples': self.n_samples,
            'tp': self.tp,
            'fp': self.fp,
            'tn': self.tn,
            'fn': self.fn,
            'sensitivity': self.sensitivity,
            'specificity': self.specificity,
            'auc': self.auc,
            'flips': self.flips,
            'quartile_method': self.quartile_method,
            'group_stats': {g: self.group_stats[g].to_dict() for g in GROUPS},
        }
        if self.grading is not None:
            d['grading'] = self.grading
        return d

    def to_text(self, prefix=''):
        """Una métrica por línea, 'clave: valor'."""
        lineas = []

        def agregar(clave, valor):
            texto = UNDEFINED if valor is None else (repr(valor) if isinstance(valor, float) else str(valor))
            lineas.append(f"{prefix}{clave}: {texto}")

        for clave in ('n_samples', 'tp', 'fp', 'tn', 'fn', 'sensitivity', 'specificity', 'auc',
                      'flips', 'quartile_method'):
            agregar(clave, getattr(self, clave))
        for g in GROUPS:
            for clave, valor in self.group_stats[g].to_dict().items():
                agregar(f"std.{g}.{clave}", valor)
        if self.grading is not None:
            for clave in ('mae', 'rmse', 'grade_accuracy'):
                agregar(f"grading.{clave}", self.grading[clave])
        return '\n'.join(lineas) + '\n'


def _labels(labels, n=None):
    labels = np.asarray(labels, dtype=bool).ravel()
    if n is not None and labels.shape[0] != n:
        raise InputError(f"longitudes distintas: {n} decisiones/puntajes y {labels.shape[0]} etiquetas")
    return labels


def confusion(decisions, labels):
    if len(decisions) == 0:
        raise InputError("no hay decisiones para evaluar")
    labels = _labels(labels, len(decisions))
    pred = np.array([d.referable for d in decisions], dtype=bool)
    return Confusion(
        tp=int(np.sum(pred & labels)),
        fp=int(np.sum(pred & ~labels)),
        tn=int(np.sum(~pred & ~labels)),
        fn=int(np.sum(~pred & labels)),
    )


def sens_spec(tp, fp, tn, fn):
    sensitivity = tp / (tp + fn) if tp + fn > 0 else None
    specificity = tn / (tn + fp) if tn + fp > 0 else None
    return sensitivity, specificity


def _check_scores(scores, labels):
    scores = np.asarray(scores, dtype=float).ravel()
    labels = _labels(labels, scores.shape[0])
    n_pos = int(labels.sum())
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InputError("el AUC necesita muestras de ambas clases")
    return scores, labels, n_pos, n_neg


def roc_auc(scores, labels):
    """AUC = (suma de rangos de positivos - n_pos(n_pos+1)/2) / (n_pos n_neg), rangos medios en empates."""
    scores, labels, n_pos, n_neg = _check_scores(scores, labels)
    rangos = rankdata(scores, method='average')
    u = float(rangos[labels].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def roc_curve(scores, labels):
    """Puntos (fpr, tpr) para cada umbral distinto (positivo si score >= umbral), desde (0, 0)."""
    scores, labels, n_pos, n_neg = _check_scores(scores, labels)
    orden = np.argsort(-scores, kind='mergesort')
    s, y = scores[orden], labels[orden]
    # último índice de cada bloque de puntajes iguales
    cortes = np.r_[np.flatnonzero(np.diff(s) != 0), s.shape[0] - 1]
    tp = np.cumsum(y)[cortes]
    fp = np.cumsum(~y)[cortes]
    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    thresholds = np.r_[np.inf, s[cortes]]
    return fpr, tpr, thresholds


def trapezoid_auc(fpr, tpr):
    fpr = np.asarray(fpr, dtype=float)
    tpr = np.asarray(tpr, dtype=float)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def box_stats(values):
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        return BoxStats(count=0)
    q = np.percentile(values, [0, 25, 50, 75, 100], method=QUARTILE_METHOD)
    return BoxStats(int(values.size), *(float(v) for v in q))


def _grupos(decisions, labels):
    pred = np.array([d.referable for d in decisions], dtype=bool)
    return {
        'TP': pred & labels,
        'FP': pred & ~labels,
        'TN': ~pred & ~labels,
        'FN': ~pred & labels,
    }


def group_uncertainty_stats(decisions, labels):
    if len(decisions) == 0:
        raise InputError("no hay decisiones para evaluar")
    labels = _labels(labels, len(decisions))
    stds = np.array([d.std for d in decisions], dtype=float)
    return {g: box_stats(stds[mascara]) for g, mascara in _grupos(decisions, labels).items()}


def grading_stats(means, stds, grades):
    """Errores de graduación y resumen por grado real (grado vs. predicción)."""
    means = np.asarray(means, dtype=float)
    stds = np.asarray(stds, dtype=float)
    grades = np.asarray(grades, dtype=int)
    error = means - grades
    redondeado = np.clip(np.floor(means + 0.5), 0, 4).astype(int)
    por_grado = {}
    for g in range(5):
        mascara = grades == g
        n = int(mascara.sum())
        por_grado[str(g)] = {
            'count': n,
            'mean_prediction': float(means[mascara].mean()) if n else None,
            'mean_std': float(stds[mascara].mean()) if n else None,
        }
    return {
        'mae': float(np.mean(np.abs(error))),
        'rmse': float(np.sqrt(np.mean(error ** 2))),
        'grade_accuracy': float(np.mean(redondeado == grades)),
        'per_grade': por_grado,
    }


def evaluate(decisions, labels, scores, grades=None):
    """
    EvalReport completo. El AUC se calcula sobre scores (la media posterior) y
    queda en None si falta una de las clases.
    """
    conteo = confusion(decisions, labels)
    sensitivity, specificity = sens_spec(*conteo)
    grading = None
    if grades is not None:
        grading = grading_stats(scores, [d.std for d in decisions], grades)
    return EvalReport(
        *conteo,
        sensitivity=sensitivity,
        specificity=specificity,
        auc=roc_auc(scores, labels) if conteo.tp + conteo.fn and conteo.tn + conteo.fp else None,
        group_stats=group_uncertainty_stats(decisions, labels),
        flips=sum(1 for d in decisions if d.flipped),
        grading=grading,
    )


def box_table(group_stats):
    """Tabla separada por tabuladores, lista para graficar cajas."""
    lineas = ['group\tcount\tmin\tq1\tmedian\tq3\tmax']
    for g in GROUPS:
        b = group_stats[g]
        valores = [b.min, b.q1, b.median, b.q3, b.max]
        lineas.append('\t'.join([g, str(b.count)] + ['' if v is None else repr(v) for v in valores]))
    return '\n'.join(lineas) + '\n'
