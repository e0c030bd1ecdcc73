import numpy as np
from django.test import SimpleTestCase

from Grados.diagnosis import (
    GRADE_THRESHOLD, STD_THRESHOLD, Decision, apply_uncertainty_flip, binarize, decide, grade_to_referable,
)
from Grados.exceptions import InputError
from Grados.gp import Prediction


class GradeToReferableTests(SimpleTestCase):
    def test_grados(self):
        self.assertEqual([grade_to_referable(g) for g in range(5)], [False, False, True, True, True])

    def test_numpy_int(self):
        self.assertTrue(grade_to_referable(np.int64(3)))

    def test_invalidos(self):
        for malo in (-1, 5, 2.0, True, '2', None):
            with self.assertRaises(InputError, msg=repr(malo)):
                grade_to_referable(malo)


class BinarizeTests(SimpleTestCase):
    def test_umbral_incluido(self):
        self.assertTrue(binarize(Prediction(1.5, 0.1)).referable)
        self.assertFalse(binarize(Prediction(np.nextafter(1.5, 0.0), 0.1)).referable)

    def test_ejemplos(self):
        self.assertFalse(binarize(Prediction(0.2, 0.3)).referable)
        self.assertTrue(binarize(Prediction(3.7, 0.3)).referable)
        d = binarize(Prediction(1.0, 0.5), grade_threshold=0.9)
        self.assertTrue(d.referable)
        self.assertFalse(d.flipped)
        self.assertEqual((d.mean, d.std), (1.0, 0.5))

    def test_monotono(self):
        medias = np.linspace(-1.0, 5.0, 121)
        referables = [binarize(Prediction(m, 0.2)).referable for m in medias]
        # una vez positivo, todo lo que sigue también
        self.assertEqual(referables, sorted(referables))


class UncertaintyFlipTests(SimpleTestCase):
    def test_umbral_estricto(self):
        self.assertFalse(apply_uncertainty_flip(binarize(Prediction(1.0, 0.84))).flipped)
        d = apply_uncertainty_flip(binarize(Prediction(1.0, 0.8401)))
        self.assertTrue(d.referable)
        self.assertTrue(d.flipped)

    def test_positivo_no_se_voltea(self):
        d = apply_uncertainty_flip(binarize(Prediction(2.4, 5.0)))
        self.assertTrue(d.referable)
        self.assertFalse(d.flipped)

    def test_idempotente(self):
        rng = np.random.default_rng(1)
        for m, s in zip(rng.uniform(-1, 5, 200), rng.uniform(0, 2, 200)):
            una = apply_uncertainty_flip(binarize(Prediction(m, s)))
            self.assertEqual(apply_uncertainty_flip(una), una)

    def test_solo_agrega_positivos(self):
        rng = np.random.default_rng(2)
        preds = [Prediction(m, s) for m, s in zip(rng.uniform(-1, 5, 300), rng.uniform(0, 2, 300))]
        antes = decide(preds, flip=False)
        despues = decide(preds)
        for a, d in zip(antes, despues):
            if a.referable:
                self.assertEqual(a, d)
            self.assertEqual(d.flipped, d.referable and not a.referable)
            self.assertEqual((a.mean, a.std), (d.mean, d.std))

    def test_umbral_infinito_no_voltea(self):
        preds = [Prediction(0.1, 100.0), Prediction(1.4, 3.0)]
        self.assertEqual(decide(preds, std_threshold=float('inf')), decide(preds, flip=False))

    def test_constantes(self):
        self.assertEqual(GRADE_THRESHOLD, 1.5)
        self.assertEqual(STD_THRESHOLD, 0.84)


class DecisionTests(SimpleTestCase):
    def test_volteada_no_referible(self):
        with self.assertRaises(InputError):
            Decision(referable=False, flipped=True, mean=0.0, std=1.0)

    def test_inmutable(self):
        d = Decision(True, False, 2.0, 0.1)
        with self.assertRaises(AttributeError):
            d.referable = False
