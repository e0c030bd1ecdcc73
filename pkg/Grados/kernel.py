"""
Kernel RBF isotrópico.

Convención:

    k(x, y) = sf2 * exp(-||x - y||^2 / (2 * l^2))

con l la escala de longitud y sf2 la varianza de señal. Los tres
hiperparámetros (l, sf2 y la varianza de ruido sn2) se guardan en escala
logarítmica para optimizar sin restricciones. sn2 solo se suma a la matriz
de Gram dentro de Grados.gp.
"""
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InputError

NOISE_FLOOR = 1e-8


@dataclass(frozen=True)
class Hyperparams:
    log_length_scale: float
    log_signal_variance: float
    log_noise_variance: float

    def __post_init__(self):
        for nombre in ('log_length_scale', 'log_signal_variance', 'log_noise_variance'):
            valor = float(getattr(self, nombre))
            if not math.isfinite(valor):
                raise InputError(f"hiperparámetro {nombre} no finito: {valor}")
            object.__setattr__(self, nombre, valor)

    @property
    def length_scale(self):
        return math.exp(self.log_length_scale)

    @property
    def signal_variance(self):
        return math.exp(self.log_signal_variance)

    @property
    def noise_variance(self):
        # Piso para que K + sn2*I nunca sea singular
        return max(math.exp(self.log_noise_variance), NOISE_FLOOR)

    @property
    def noise_at_floor(self):
        return self.log_noise_variance <= math.log(NOISE_FLOOR)

    def as_array(self):
        return np.array([self.log_length_scale, self.log_signal_variance, self.log_noise_variance])

    @classmethod
    def from_array(cls, theta):
        theta = np.asarray(theta, dtype=float)
        return cls(float(theta[0]), float(theta[1]), float(theta[2]))

    @classmethod
    def from_values(cls, length_scale, signal_variance, noise_variance):
        return cls(math.log(length_scale), math.log(signal_variance), math.log(noise_variance))


def as_matrix(A, nombre):
    """Un vector 1-D se toma como una sola fila (una consulta de dimensión D)."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[np.newaxis, :]
    if A.ndim != 2 or A.shape[1] < 1:
        raise InputError(f"{nombre} debe ser una matriz n x D con D >= 1, se recibió forma {A.shape}")
    return A


def _check_dims(A, B):
    if A.shape[1] != B.shape[1]:
        raise InputError(f"dimensiones incompatibles: {A.shape[1]} vs {B.shape[1]}")


def rbf_eval(x, y, hp):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size == 0 or x.shape != y.shape:
        raise InputError(f"dimensiones incompatibles: {x.size} vs {y.size}")
    d = x - y
    return hp.signal_variance * math.exp(-float(d @ d) / (2.0 * hp.length_scale ** 2))


def squared_distances(A, B=None):
    """
    Distancias euclídeas al cuadrado por ||a||^2 + ||b||^2 - 2 a.b, recortadas en 0.

    Si B es None (o idéntica a A) el resultado es exactamente simétrico y con
    diagonal nula.
    """
    A = as_matrix(A, 'A')
    simetrica = B is None or B is A
    if not simetrica:
        B = as_matrix(B, 'B')
        _check_dims(A, B)
        simetrica = A.shape == B.shape and np.array_equal(A, B)
    if simetrica:
        B = A

    aa = np.einsum('ij,ij->i', A, A)
    bb = aa if simetrica else np.einsum('ij,ij->i', B, B)
    d2 = aa[:, np.newaxis] + bb[np.newaxis, :] - 2.0 * (A @ B.T)
    np.maximum(d2, 0.0, out=d2)

    if simetrica:
        # Se copia el triángulo superior en el inferior: simetría exacta
        d2 = np.triu(d2, 1)
        d2 = d2 + d2.T
    return d2


def _kernel_from_sq(d2, hp):
    return hp.signal_variance * np.exp(-d2 / (2.0 * hp.length_scale ** 2))


def kernel_matrix(A, B, hp):
    return _kernel_from_sq(squared_distances(A, B), hp)


def kernel_matrix_gradients(A, hp):
    """
    Derivadas de K(A, A) respecto de log l y log sf2 (sin término de ruido).

    dK/dlog l = K * d2 / l^2 y dK/dlog sf2 = K, elemento a elemento.
    """
    A = as_matrix(A, 'A')
    d2 = squared_distances(A)
    K = _kernel_from_sq(d2, hp)
    dK_dlog_l = K * (d2 / hp.length_scale ** 2)
    return dK_dlog_l, K.copy()
