import struct

import numpy as np
from django.test import SimpleTestCase
from scipy.spatial.distance import cdist

from Grados import data, gp
from Grados.exceptions import ChecksumError, InputError, ModelLoadError, ParseError, VersionError

from .helpers import TempDirMixin, small_model, write_csv

HEADER = ['id', 'grade', 'f0', 'f1', 'f2', 'f3']


class LoadFeatureCsvTests(TempDirMixin, SimpleTestCase):
    def test_histograma(self):
        filas = [[f'img{i}', g, 0.1 * i, -1.5, 2, 1e-3] for i, g in enumerate([0, 0, 0, 4, 4])]
        path = write_csv(self.tmp / 'a.csv', HEADER, filas)
        records, manifest = data.load_feature_csv(path)
        self.assertEqual(manifest.grade_histogram, (3, 0, 0, 0, 2))
        self.assertEqual((manifest.n_records, manifest.dimension), (5, 4))
        self.assertEqual([r.id for r in records], [f'img{i}' for i in range(5)])
        np.testing.assert_array_equal(records[2].features, [0.2, -1.5, 2.0, 1e-3])

    def test_forma_particion_de_prueba(self):
        grades = [0] * 7407 + [1] * 689 + [4] * 694
        filas = [[f'p{i}', g, g * 0.5, i % 7] for i, g in enumerate(grades)]
        path = write_csv(self.tmp / 'test.csv', ['id', 'grade', 'f0', 'f1'], filas)
        records, manifest = data.load_feature_csv(path)
        self.assertEqual(manifest.grade_histogram, (7407, 689, 0, 0, 694))
        self.assertEqual(sum(manifest.grade_histogram), len(records))

    def test_solo_cabecera(self):
        path = write_csv(self.tmp / 'vacio.csv', HEADER, [])
        with self.assertRaisesMessage(ParseError, 'no records'):
            data.load_feature_csv(path)

    def test_archivo_vacio(self):
        path = self.tmp / 'nada.csv'
        path.write_bytes(b'')
        with self.assertRaises(ParseError) as ctx:
            data.load_feature_csv(path)
        self.assertEqual(ctx.exception.line, 1)

    def test_no_existe(self):
        with self.assertRaises(ParseError):
            data.load_feature_csv(self.tmp / 'falta.csv')

    def test_cabecera_invalida(self):
        path = write_csv(self.tmp / 'c.csv', ['id', 'grade', 'x0'], [['a', 1, 0.5]])
        with self.assertRaises(ParseError) as ctx:
            data.load_feature_csv(path)
        self.assertEqual(ctx.exception.line, 1)

    def assertErrorEnLinea(self, filas, linea):
        path = write_csv(self.tmp / 'e.csv', ['id', 'grade', 'f0', 'f1'], filas)
        with self.assertRaises(ParseError) as ctx:
            data.load_feature_csv(path)
        self.assertEqual(ctx.exception.line, linea, str(ctx.exception))
        self.assertIn(f'línea {linea}', str(ctx.exception))

    def test_errores_con_linea(self):
        bien = ['a', 1, 0.5, 0.25]
        casos = {
            'ancho': [bien, ['b', 2, 0.1, 0.2, 0.3]],
            'corta': [bien, bien, ['c', 2, 0.1]],
            'grado no entero': [bien, ['b', '2.0', 0.1, 0.2]],
            'grado fuera de rango': [bien, bien, bien, ['b', 7, 0.1, 0.2]],
            'grado negativo': [['b', -1, 0.1, 0.2]],
            'inf': [bien, ['b', 2, 'inf', 0.2]],
            'nan': [bien, ['b', 2, 0.1, 'nan']],
            'texto': [bien, ['b', 2, 'abc', 0.2]],
        }
        lineas = {'ancho': 3, 'corta': 4, 'grado no entero': 3, 'grado fuera de rango': 5,
                  'grado negativo': 2, 'inf': 3, 'nan': 3, 'texto': 3}
        for nombre, filas in casos.items():
            with self.subTest(nombre):
                self.assertErrorEnLinea(filas, lineas[nombre])

    def test_exportar_y_leer(self):
        records = data.synthesize_dataset([3, 2, 2, 1, 4], 3, 2.0, 0.4, seed=5)
        path = data.export_feature_csv(records, self.tmp / 'sub' / 'syn.csv')
        leidos, manifest = data.load_feature_csv(path)
        self.assertEqual(manifest.grade_histogram, (3, 2, 2, 1, 4))
        for a, b in zip(records, leidos):
            self.assertEqual((a.id, a.grade), (b.id, b.grade))
            np.testing.assert_array_equal(a.features, b.features)

    def test_decimales_exactos(self):
        escalas = 10.0 ** np.arange(-3, 3).repeat(34)[:200, np.newaxis]
        valores = np.random.default_rng(23).standard_normal((200, 2)) * escalas
        filas = [[f'p{i}', i % 5, repr(float(a)), repr(float(b))] for i, (a, b) in enumerate(valores)]
        path = write_csv(self.tmp / 'd.csv', ['id', 'grade', 'f0', 'f1'], filas)
        records, _ = data.load_feature_csv(path)
        np.testing.assert_array_equal(np.vstack([r.features for r in records]), valores)


class NormalizerTests(SimpleTestCase):
    def records(self, X):
        return [data.FeatureRecord(str(i), x, 0) for i, x in enumerate(X)]

    def test_zscore(self):
        rng = np.random.default_rng(20)
        train = self.records(rng.normal(3.0, 2.5, size=(60, 5)))
        stats = data.fit_normalizer(train)
        Z = data.apply_normalizer(stats, train)
        np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-10)
        np.testing.assert_allclose(Z.std(axis=0), 1.0, atol=1e-10)

    def test_columna_constante(self):
        X = np.random.default_rng(0).standard_normal((10, 3))
        X[:, 1] = 4.2
        stats = data.fit_normalizer(self.records(X))
        self.assertTrue(stats.degenerate[1])
        self.assertEqual(stats.std[1], data.STD_FLOOR)
        Z = data.apply_normalizer(stats, self.records(X))
        np.testing.assert_array_equal(Z[:, 1], np.zeros(10))

    def test_estadisticas_de_entrenamiento(self):
        rng = np.random.default_rng(21)
        train = self.records(rng.normal(0.0, 1.0, size=(50, 3)))
        test = self.records(rng.normal(2.0, 3.0, size=(20, 3)))
        con_train = data.apply_normalizer(data.fit_normalizer(train), test)
        con_test = data.apply_normalizer(data.fit_normalizer(test), test)
        self.assertFalse(np.allclose(con_train, con_test))

    def test_inversa(self):
        rng = np.random.default_rng(22)
        X = rng.normal(-5.0, 10.0, size=(30, 4))
        stats = data.fit_normalizer(self.records(X))
        np.testing.assert_allclose(data.invert_normalizer(stats, data.apply_normalizer(stats, X)), X,
                                   rtol=0, atol=1e-9)

    def test_dimension_distinta(self):
        stats = data.fit_normalizer(self.records(np.ones((3, 2))))
        with self.assertRaises(InputError):
            data.apply_normalizer(stats, np.ones((2, 3)))


class SynthesizeTests(TempDirMixin, SimpleTestCase):
    def test_cantidades(self):
        records = data.synthesize_dataset([10] * 5, 4, 3.0, 0.5, seed=1)
        self.assertEqual(len(records), 50)
        self.assertEqual(np.bincount([r.grade for r in records]).tolist(), [10] * 5)

    def test_vecino_mas_cercano(self):
        records = data.synthesize_dataset([50] * 5, 8, 3.0, 0.5, seed=2)
        _, X, grades = data.records_to_arrays(records)
        d = cdist(X, X)
        np.fill_diagonal(d, np.inf)
        acierto = np.mean(grades[np.argmin(d, axis=1)] == grades)
        self.assertGreaterEqual(acierto, 0.95)

    def test_determinista(self):
        a = data.export_feature_csv(data.synthesize_dataset([5] * 5, 3, 2.0, 0.3, seed=9), self.tmp / 'a.csv')
        b = data.export_feature_csv(data.synthesize_dataset([5] * 5, 3, 2.0, 0.3, seed=9), self.tmp / 'b.csv')
        self.assertEqual(a.read_bytes(), b.read_bytes())

    def test_centroides_alineados(self):
        noise = 0.5
        records = data.synthesize_dataset([200] * 5, 6, 2.0, noise, seed=4)
        _, X, grades = data.records_to_arrays(records)
        centroides = np.array([X[grades == g].mean(axis=0) for g in range(5)])
        centrados = centroides - centroides.mean(axis=0)
        _, _, vt = np.linalg.svd(centrados)
        residuos = centrados - np.outer(centrados @ vt[0], vt[0])
        self.assertLess(np.max(np.linalg.norm(residuos, axis=1)), noise)

    def test_argumentos_invalidos(self):
        with self.assertRaises(InputError):
            data.synthesize_dataset([10] * 4, 3, 1.0, 0.5, seed=0)
        with self.assertRaises(InputError):
            data.synthesize_dataset([10] * 5, 1, 1.0, 0.5, seed=0)
        with self.assertRaises(InputError):
            data.synthesize_dataset([10] * 5, 3, 1.0, 0.0, seed=0)


class SplitAndCorruptTests(SimpleTestCase):
    def setUp(self):
        self.records = data.synthesize_dataset([20, 20, 20, 20, 20], 3, 1.0, 0.5, seed=8)

    def test_particion_estratificada(self):
        train, test = data.split_records(self.records, 0.25, seed=8)
        self.assertEqual(np.bincount([r.grade for r in test]).tolist(), [5] * 5)
        self.assertEqual(len(train) + len(test), 100)
        ids = [r.id for r in self.records]
        self.assertEqual(sorted(ids.index(r.id) for r in train), [ids.index(r.id) for r in train])
        self.assertFalse({r.id for r in train} & {r.id for r in test})

    def test_fraccion_invalida(self):
        with self.assertRaises(InputError):
            data.split_records(self.records, 1.0, seed=0)

    def test_corromper(self):
        corruptos = data.corrupt_grades(self.records, 0.1, seed=3)
        cambiados = [a for a, b in zip(self.records, corruptos) if a.grade != b.grade]
        self.assertEqual(len(cambiados), 10)
        self.assertTrue(all(0 <= r.grade <= 4 for r in corruptos))
        self.assertEqual([r.id for r in corruptos], [r.id for r in self.records])
        self.assertEqual(np.bincount([r.grade for r in self.records]).tolist(), [20] * 5)


class ModelArchiveTests(TempDirMixin, SimpleTestCase):
    def setUp(self):
        super().setUp()
        self.model, self.records = small_model(seed=3)
        self.path = data.save_model(self.model, self.tmp / 'modelo.bin')

    def test_ida_y_vuelta(self):
        cargado = data.load_model(self.path)
        self.assertEqual(cargado.hp, self.model.hp)
        self.assertEqual(cargado.train_subset_seed, 3)
        np.testing.assert_array_equal(cargado.X_train, self.model.X_train)
        np.testing.assert_array_equal(cargado.normalizer.mean, self.model.normalizer.mean)
        np.testing.assert_array_equal(cargado.normalizer.std, self.model.normalizer.std)

        Xq = np.random.default_rng(30).standard_normal((25, 3))
        antes = gp.predict_arrays(self.model, Xq)
        despues = gp.predict_arrays(cargado, Xq)
        np.testing.assert_array_equal(antes[0], despues[0])
        np.testing.assert_array_equal(antes[1], despues[1])
        self.assertEqual(data.serialize_model(cargado), self.path.read_bytes())

    def test_byte_corrupto(self):
        datos = bytearray(self.path.read_bytes())
        datos[-3] ^= 0x01
        with self.assertRaises(ChecksumError):
            data.deserialize_model(bytes(datos))

    def test_version_desconocida(self):
        datos = bytearray(self.path.read_bytes())
        struct.pack_into('<I', datos, 8, data.FORMAT_VERSION + 1)
        with self.assertRaises(VersionError):
            data.deserialize_model(bytes(datos))

    def test_truncado_y_magic(self):
        datos = self.path.read_bytes()
        for malo in (datos[:-8], datos[:20], b'', b'XXXXXXXX' + datos[8:]):
            with self.assertRaises(ModelLoadError):
                data.deserialize_model(malo)

    def test_factor_inconsistente(self):
        m = self.model
        alterado = gp.GPModel(m.hp, m.X_train, m.y_train, m.chol_L, m.alpha * 2.0, m.normalizer, 3)
        with self.assertRaises(ChecksumError):
            data.deserialize_model(data.serialize_model(alterado))

    def test_archivo_inexistente(self):
        with self.assertRaises(ModelLoadError):
            data.load_model(self.tmp / 'no.bin')
