"""
Decisiones clínicas sobre la salida del GP.

- Grados 0 y 1: no referible; 2, 3 y 4: referible.
- binarize: referible si mean >= grade_threshold (1.5 cae en positivo).
- apply_uncertainty_flip: un negativo con std > std_threshold (estricto) pasa a positivo.
"""
import dataclasses
import numbers
from dataclasses import dataclass

from .exceptions import InputError

GRADE_THRESHOLD = 1.5
STD_THRESHOLD = 0.84


@dataclass(frozen=True)
class Decision:
    referable: bool
    flipped: bool
    mean: float
    std: float

    def __post_init__(self):
        if self.flipped and not self.referable:
            raise InputError("una decisión volteada tiene que ser referible")


def grade_to_referable(grade):
    if isinstance(grade, bool) or not isinstance(grade, numbers.Integral) or not 0 <= grade <= 4:
        raise InputError(f"grado fuera de rango 0-4: {grade!r}")
    return bool(grade >= 2)


def binarize(pred, grade_threshold=GRADE_THRESHOLD):
    return Decision(referable=bool(pred.mean >= grade_threshold), flipped=False,
                    mean=float(pred.mean), std=float(pred.std))


def apply_uncertainty_flip(d, std_threshold=STD_THRESHOLD):
    if not d.referable and d.std > std_threshold:
        return dataclasses.replace(d, referable=True, flipped=True)
    return d


def decide(predictions, grade_threshold=GRADE_THRESHOLD, std_threshold=STD_THRESHOLD, flip=True):
    decisiones = [binarize(p, grade_threshold) for p in predictions]
    if flip:
        decisiones = [apply_uncertainty_flip(d, std_threshold) for d in decisiones]
    return decisiones
