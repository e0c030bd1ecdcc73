"""
Regresión exacta con procesos gaussianos sobre grados 0-4.

Las etiquetas se usan crudas (sin centrar): el umbral 1.5 se aplica
directamente a la media posterior.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize
from scipy.linalg import lapack
from scipy.spatial.distance import pdist
from tqdm import tqdm

from .exceptions import InputError, NumericalError, OptimizationError
from .kernel import NOISE_FLOOR, Hyperparams, as_matrix, kernel_matrix, kernel_matrix_gradients

logger = logging.getLogger(__name__)

JITTER_LEVELS = (0.0, 1e-10, 1e-8, 1e-6, 1e-4)
VALID_GRADES = (0, 1, 2, 3, 4)
VAR_FLOOR = 1e-2
# Valor devuelto al optimizador cuando K no factoriza en ningún nivel de jitter
_PENALTY = 1e20


@dataclass(frozen=True)
class FitConfig:
    max_train: int = 2000
    restarts: int = 3
    seed: int = 0
    max_iter: int = 200
    lml_tol: float = 1e-6
    grad_tol: float = 1e-5
    show_progress: bool = False

    def __post_init__(self):
        if int(self.max_train) < 2:
            raise InputError(f"max_train debe ser >= 2, se recibió {self.max_train}")
        if int(self.restarts) < 1:
            raise InputError(f"restarts debe ser >= 1, se recibió {self.restarts}")
        if int(self.max_iter) < 1:
            raise InputError(f"max_iter debe ser >= 1, se recibió {self.max_iter}")


@dataclass(frozen=True)
class Prediction:
    mean: float
    std: float


@dataclass(frozen=True)
class GPModel:
    """
    Estado entrenado. X_train ya está normalizada con normalizer; chol_L
    factoriza K + sn2*I (+ jitter) y alpha resuelve (K + sn2*I) alpha = y.
    """
    hp: Hyperparams
    X_train: np.ndarray
    y_train: np.ndarray
    chol_L: np.ndarray
    alpha: np.ndarray
    normalizer: object = None
    train_subset_seed: int = 0
    jitter: float = 0.0
    lml: float = float('nan')

    def __post_init__(self):
        for nombre in ('X_train', 'y_train', 'chol_L', 'alpha'):
            arr = np.array(getattr(self, nombre), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, nombre, arr)

    @property
    def n_train(self):
        return self.X_train.shape[0]

    @property
    def dimension(self):
        return self.X_train.shape[1]


def _check_xy(X, y):
    X = as_matrix(X, 'X')
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise InputError(f"X tiene {X.shape[0]} filas pero y tiene {y.shape[0]} valores")
    if X.shape[0] < 2:
        raise InputError("se necesitan al menos 2 muestras de entrenamiento")
    return X, y


def validate_grades(y):
    y = np.asarray(y)
    if y.size == 0 or not np.all(np.isin(y, VALID_GRADES)):
        malos = np.unique(y[~np.isin(y, VALID_GRADES)]) if y.size else []
        raise InputError(f"grados fuera de {{0..4}}: {list(malos)[:5]}")


def cholesky_with_jitter(M):
    """
    Factor de Cholesky inferior de M, subiendo el jitter por
    JITTER_LEVELS * mean(diag(M)) hasta que la factorización funcione.

    Devuelve (L, jitter_usado) con L @ L.T == M + jitter_usado * I.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError(f"se esperaba una matriz cuadrada, se recibió forma {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InputError("la matriz tiene entradas no finitas")

    n = M.shape[0]
    escala = float(np.mean(np.diag(M)))
    info = 0
    for nivel in JITTER_LEVELS:
        jitter = nivel * escala
        if nivel > 0 and not jitter > 0:
            continue
        A = M + jitter * np.eye(n) if jitter else M
        L, info = lapack.dpotrf(A, lower=1, clean=1)
        if info == 0:
            if jitter:
                logger.warning("Cholesky necesitó jitter %.3e (n=%d)", jitter, n)
            return np.ascontiguousarray(L), jitter
        if info < 0:
            raise InputError(f"dpotrf rechazó el argumento {-info}")

    raise NumericalError(
        f"Cholesky falló con todos los niveles de jitter (menor principal {info})",
        index=info - 1,
    )


def _lml_and_factor(X, y, hp):
    dK_dlog_l, K = kernel_matrix_gradients(X, hp)
    n = K.shape[0]
    sn2 = hp.noise_variance

    Ky = K.copy()
    Ky[np.diag_indices_from(Ky)] += sn2
    L, jitter = cholesky_with_jitter(Ky)
    alpha = linalg.cho_solve((L, True), y)

    lml = -0.5 * float(y @ alpha) - float(np.log(np.diag(L)).sum()) - 0.5 * n * math.log(2.0 * math.pi)

    # 0.5 * tr((alpha alpha^T - Ky^-1) dK); las matrices son simétricas
    W = np.outer(alpha, alpha) - linalg.cho_solve((L, True), np.eye(n))
    grad = np.array([
        0.5 * float(np.sum(W * dK_dlog_l)),
        0.5 * float(np.sum(W * K)),
        # en el piso es la derivada por la derecha; los límites no dejan bajar más
        0.5 * sn2 * float(np.trace(W)),
    ])
    return lml, grad, L, alpha, jitter


def log_marginal_likelihood(X, y, hp):
    """Devuelve (lml, grad) con grad respecto de (log l, log sf2, log sn2)."""
    X, y = _check_xy(X, y)
    lml, grad, _, _, _ = _lml_and_factor(X, y, hp)
    return lml, grad


def condition(X, y, hp, normalizer=None, train_subset_seed=0):
    """Construye un GPModel para hiperparámetros fijos."""
    X, y = _check_xy(X, y)
    K = kernel_matrix(X, X, hp)
    K[np.diag_indices_from(K)] += hp.noise_variance
    L, jitter = cholesky_with_jitter(K)
    alpha = linalg.cho_solve((L, True), y)
    lml = -0.5 * float(y @ alpha) - float(np.log(np.diag(L)).sum()) - 0.5 * len(y) * math.log(2.0 * math.pi)
    return GPModel(
        hp=hp,
        X_train=X,
        y_train=y,
        chol_L=L,
        alpha=alpha,
        normalizer=normalizer,
        train_subset_seed=int(train_subset_seed),
        jitter=jitter,
        lml=lml,
    )


def median_pairwise_distance(X):
    d = pdist(as_matrix(X, 'X'))
    mediana = float(np.median(d)) if d.size else 0.0
    return mediana if mediana > 0 else 1.0


def _objetivo(X, y):
    def f(theta):
        try:
            lml, grad = log_marginal_likelihood(X, y, Hyperparams.from_array(theta))
        except NumericalError:
            return _PENALTY, np.zeros(3)
        if not (math.isfinite(lml) and np.all(np.isfinite(grad))):
            return _PENALTY, np.zeros(3)
        return -lml, -grad
    return f


def _lml_o_nan(X, y, theta):
    try:
        lml, _ = log_marginal_likelihood(X, y, Hyperparams.from_array(theta))
    except NumericalError:
        return float('nan')
    return lml


def learn_hyperparams(X, y, config, rng=None):
    """
    Maximiza la verosimilitud marginal con L-BFGS-B desde config.restarts
    puntos iniciales. Devuelve (Hyperparams, lml); el lml devuelto nunca es
    menor que el de ningún punto inicial.
    """
    X, y = _check_xy(X, y)
    if rng is None:
        rng = np.random.default_rng(config.seed)

    m = median_pairwise_distance(X)
    var_y = max(float(np.var(y)), VAR_FLOOR)
    bounds = [
        (math.log(1e-2 * m), math.log(1e3 * m)),
        (math.log(1e-4), math.log(1e4)),
        (math.log(NOISE_FLOOR), math.log(1e2)),
    ]

    iniciales = []
    for r in range(config.restarts):
        log_l = math.log(m) if r == 0 else rng.uniform(math.log(0.5 * m), math.log(2.0 * m))
        iniciales.append(np.array([log_l, math.log(var_y), math.log(0.1 * var_y)]))

    objetivo = _objetivo(X, y)
    mejor_lml, mejor_theta = -math.inf, None
    for r, theta0 in enumerate(tqdm(iniciales, desc='reinicios', disable=not config.show_progress)):
        lml0 = _lml_o_nan(X, y, theta0)
        candidatos = [(lml0, theta0)]

        escala = max(abs(lml0), 1.0) if math.isfinite(lml0) else 1.0
        res = optimize.minimize(
            objetivo,
            theta0,
            jac=True,
            method='L-BFGS-B',
            bounds=bounds,
            options={
                'maxiter': config.max_iter,
                'ftol': config.lml_tol / escala,
                'gtol': config.grad_tol,
            },
        )
        candidatos.append((_lml_o_nan(X, y, res.x), res.x))
        logger.info("reinicio %d: lml inicial %.6f, final %.6f (%d iteraciones, %s)",
                    r, lml0, candidatos[-1][0], res.nit, res.message)

        for lml, theta in candidatos:
            if math.isfinite(lml) and lml > mejor_lml:
                mejor_lml, mejor_theta = lml, np.array(theta, dtype=float)

    if mejor_theta is None:
        raise OptimizationError("ningún reinicio produjo una verosimilitud finita")

    hp = Hyperparams.from_array(mejor_theta)
    if hp.noise_at_floor:
        logger.warning("sn2 quedó en el piso %.0e", NOISE_FLOOR)
    logger.info("óptimo: l=%.4g sf2=%.4g sn2=%.4g lml=%.6f",
                hp.length_scale, hp.signal_variance, hp.noise_variance, mejor_lml)
    return hp, mejor_lml


def fit(X, y, config, normalizer=None):
    X, y = _check_xy(X, y)
    validate_grades(y)

    rng = np.random.default_rng(config.seed)
    n = X.shape[0]
    if n > config.max_train:
        idx = np.sort(rng.choice(n, size=config.max_train, replace=False))
        X, y = X[idx], y[idx]
        logger.info("subconjunto de entrenamiento: %d de %d filas (semilla %d)", config.max_train, n, config.seed)

    hp, _ = learn_hyperparams(X, y, config, rng)
    return condition(X, y, hp, normalizer=normalizer, train_subset_seed=config.seed)


def predict_arrays(model, X_query, batch_size=1024, show_progress=False):
    """Media y desviación estándar posteriores para cada fila de X_query."""
    Xq = as_matrix(X_query, 'X_query')
    if Xq.shape[1] != model.dimension:
        raise InputError(f"dimensión de consulta {Xq.shape[1]} distinta de la del modelo {model.dimension}")

    hp = model.hp
    prior = hp.signal_variance + hp.noise_variance
    medias = np.empty(Xq.shape[0])
    stds = np.empty(Xq.shape[0])

    inicios = range(0, Xq.shape[0], max(int(batch_size), 1))
    for inicio in tqdm(inicios, desc='predicción', disable=not show_progress):
        lote = Xq[inicio:inicio + batch_size]
        Ks = kernel_matrix(lote, model.X_train, hp)
        medias[inicio:inicio + len(lote)] = Ks @ model.alpha
        v = linalg.solve_triangular(model.chol_L, Ks.T, lower=True)
        var = prior - np.einsum('ij,ij->j', v, v)
        stds[inicio:inicio + len(lote)] = np.sqrt(np.maximum(var, 0.0))
    return medias, stds


def predict(model, X_query, batch_size=1024):
    medias, stds = predict_arrays(model, X_query, batch_size=batch_size)
    return [Prediction(float(m), float(s)) for m, s in zip(medias, stds)]
