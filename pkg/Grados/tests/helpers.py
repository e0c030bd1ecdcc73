import math
import shutil
import tempfile
from pathlib import Path

import numpy as np

from Grados import data, gp
from Grados.kernel import Hyperparams, kernel_matrix


class TempDirMixin:
    def setUp(self):
        super().setUp()
        self.tmp = Path(tempfile.mkdtemp(prefix='retigp-test-'))
        self.addCleanup(shutil.rmtree, self.tmp, ignore_errors=True)


def hp(length_scale=1.0, signal_variance=1.0, noise_variance=0.1):
    return Hyperparams.from_values(length_scale, signal_variance, noise_variance)


def sample_prior(X, hp_true, seed):
    """Muestra y ~ GP(0, K + sn2 I) en los puntos X."""
    rng = np.random.default_rng(seed)
    K = kernel_matrix(X, X, hp_true)
    K[np.diag_indices_from(K)] += hp_true.noise_variance
    L, _ = gp.cholesky_with_jitter(K)
    return L @ rng.standard_normal(X.shape[0])


def small_model(seed=0, n=12, D=3):
    """Modelo chico con normalizador, sin optimizar hiperparámetros."""
    rng = np.random.default_rng(seed)
    grades = rng.integers(0, 5, size=n)
    records = [data.FeatureRecord(f'r{i}', rng.standard_normal(D) + grades[i], int(grades[i])) for i in range(n)]
    stats = data.fit_normalizer(records)
    Z = data.apply_normalizer(stats, records)
    model = gp.condition(Z, grades, hp(length_scale=math.sqrt(D)), normalizer=stats, train_subset_seed=seed)
    return model, records


def write_csv(path, header, rows):
    lines = [','.join(header)] + [','.join(str(v) for v in row) for row in rows]
    Path(path).write_text('\n'.join(lines) + '\n', encoding='utf-8')
    return Path(path)
