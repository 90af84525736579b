"""
Postać kanoniczna wiązek rzędu 2 na rozdmuchanej płaszczyźnie.

Wiązka rozszczepiająca się jako O(j) + O(-j) nad dywizorem wyjątkowym ma
macierz przejścia [[z^j, p], [0, z^-j]], gdzie p = suma p_il z^l u^i po oknie
W_j = {(i, l) : 1 <= i <= 2j-2, i-j+1 <= l <= j-1}. Moduł zawiera okna,
macierze przejścia, zanurzenie Phi_j: p -> z u^2 p, jego częściową odwrotność
oraz test należenia do obrazu.
"""

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

from config import DEFAULT_COEFF_BOUND
from helpers import FORM_SCHEMA, RecordError, validate_record
from laurent import ZERO, BiLaurent, GaussianRational

TransitionMatrix = Tuple[Tuple[BiLaurent, BiLaurent], Tuple[BiLaurent, BiLaurent]]


class CanonicalFormError(ValueError):
    """Poziom j lub nośnik p nie spełnia niezmienników postaci kanonicznej."""


class LevelMismatchError(ValueError):
    """Dwie postaci kanoniczne na różnych poziomach j."""


# =============================================================================
# OKNA WSPÓŁCZYNNIKÓW
# =============================================================================


class WindowIndex(NamedTuple):
    i: int  # wykładnik u
    l: int  # noqa: E741  (wykładnik z)


@lru_cache(maxsize=None)
def window(j: int) -> Tuple[WindowIndex, ...]:
    """
    Okno W_j indeksów (i, l) współczynników p_il, posortowane po (i, l).

    Args:
        j: Poziom rozszczepienia (j >= 1)

    Returns:
        Krotka indeksów; jej długość to (j-1)(2j-1)

    Raises:
        CanonicalFormError: dla j <= 0
    """
    if j < 1:
        raise CanonicalFormError(f"Poziom j musi być >= 1, otrzymano {j}")
    return tuple(
        WindowIndex(i, l)
        for i in range(1, 2 * j - 1)
        for l in range(i - j + 1, j)  # noqa: E741
    )


def window_size(j: int) -> int:
    """N = (j-1)(2j-1)."""
    if j < 1:
        raise CanonicalFormError(f"Poziom j musi być >= 1, otrzymano {j}")
    return (j - 1) * (2 * j - 1)


def in_window(j: int, uexp: int, zexp: int) -> bool:
    return 1 <= uexp <= 2 * j - 2 and uexp - j + 1 <= zexp <= j - 1


# =============================================================================
# POSTAĆ KANONICZNA
# =============================================================================


@dataclass(frozen=True)
class CanonicalForm:
    """Poziom j i wielomian p o nośniku w oknie W_j (punkt C^N)."""

    j: int
    p: BiLaurent = field(default_factory=BiLaurent.zero)

    def __post_init__(self) -> None:
        if self.j < 1:
            raise CanonicalFormError(f"Poziom j musi być >= 1, otrzymano {self.j}")
        outside = [(u, z) for u, z in self.p.support() if not in_window(self.j, u, z)]
        if outside:
            raise CanonicalFormError(
                f"Wyrazy {outside} poza oknem W_{self.j} (u=i, z=l)"
            )

    @classmethod
    def zero(cls, j: int) -> "CanonicalForm":
        return cls(j, BiLaurent.zero())

    @classmethod
    def from_coefficients(cls, j: int, coeffs: Mapping[Tuple[int, int], Any]) -> "CanonicalForm":
        """Z mapy {(i, l): p_il}."""
        return cls(j, BiLaurent({(i, l): value for (i, l), value in coeffs.items()}))

    def coeff(self, i: int, l: int) -> GaussianRational:  # noqa: E741
        return self.p.coeff(i, l)

    def is_zero(self) -> bool:
        return self.p.is_zero()

    def to_record(self) -> Dict[str, Any]:
        return {"j": self.j, "coeffs": self.p.to_records()}

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "CanonicalForm":
        """
        Wczytuje rekord {"j": int, "coeffs": [...]}.

        Raises:
            RecordError: rekord nie spełnia schematu albo nośnik wychodzi poza okno
        """
        validate_record(record, FORM_SCHEMA, "postaci kanonicznej")
        try:
            return cls(record["j"], BiLaurent.from_records(record["coeffs"]))
        except CanonicalFormError as exc:
            raise RecordError(str(exc)) from exc

    def __str__(self) -> str:
        return f"[j={self.j}] p = {self.p}"


def coefficient_vector(cf: CanonicalForm) -> List[GaussianRational]:
    """Współrzędne p w C^N w kolejności window(j)."""
    return [cf.coeff(idx.i, idx.l) for idx in window(cf.j)]


def from_coefficient_vector(j: int, vector: Sequence[Any]) -> CanonicalForm:
    indices = window(j)
    if len(vector) != len(indices):
        raise CanonicalFormError(
            f"Wektor ma długość {len(vector)}, okno W_{j} ma {len(indices)} elementów"
        )
    return CanonicalForm.from_coefficients(
        j, {(idx.i, idx.l): value for idx, value in zip(indices, vector)}
    )


# =============================================================================
# MACIERZ PRZEJŚCIA
# =============================================================================


def transition_matrix(cf: CanonicalForm) -> TransitionMatrix:
    """[[z^j, p], [0, z^-j]]."""
    return (
        (BiLaurent.monomial(0, cf.j), cf.p),
        (BiLaurent.zero(), BiLaurent.monomial(0, -cf.j)),
    )


def determinant(matrix: TransitionMatrix) -> BiLaurent:
    (a, b), (c, d) = matrix
    return a * d - b * c


# =============================================================================
# ZANURZENIE PHI_J
# =============================================================================


def phi(cf: CanonicalForm) -> CanonicalForm:
    """
    Phi_j: p -> z u^2 p, z poziomu j na j+1.

    Indeksy przechodzą (i, l) -> (i+2, l+1); wynik zawsze mieści się w W_{j+1}.
    """
    return CanonicalForm(cf.j + 1, cf.p.shift(2, 1))


def phi_inverse(cf: CanonicalForm) -> Optional[CanonicalForm]:
    """
    Odzyskuje przeciwobraz: p -> z^-1 u^-2 p, z poziomu j+1 na j.

    Returns:
        Postać na poziomie j albo None, gdy cf nie leży w obrazie zbioru
        (jakiś wyraz ma i w {1, 2}) lub cf jest na poziomie 1
    """
    if cf.j < 2:
        return None
    if any(u < 3 for u, _ in cf.p.support()):
        return None
    return CanonicalForm(cf.j - 1, cf.p.shift(-2, -1))


def in_image(cf: CanonicalForm) -> bool:
    """
    Czy p_il = 0 dla i = 1, 2 (równania domkniętego obrazu Phi).

    Poziom 1 nie ma poziomu źródłowego, więc zwraca False (zgodnie z phi_inverse).
    """
    if cf.j < 2:
        return False
    return all(u >= 3 for u, _ in cf.p.support())


# =============================================================================
# LOSOWE POSTACI
# =============================================================================


def random_rational(rng: random.Random, bound: int) -> Fraction:
    """Losowa liczba wymierna o liczniku w [-bound, bound] i mianowniku w [1, bound]."""
    return Fraction(rng.randint(-bound, bound), rng.randint(1, bound))


def random_form(
    j: int, seed: int, bound: int = DEFAULT_COEFF_BOUND, gaussian: bool = True
) -> CanonicalForm:
    """
    Deterministyczna losowa postać kanoniczna.

    Args:
        j: Poziom
        seed: Ziarno (ta sama trójka (j, seed, bound) daje tę samą postać)
        bound: Ograniczenie liczników i mianowników współczynników
        gaussian: Czy losować także części urojone

    Returns:
        CanonicalForm o współczynnikach nad window(j)
    """
    if bound < 1:
        raise ValueError(f"bound musi być >= 1, otrzymano {bound}")
    rng = random.Random(f"form:{j}:{seed}:{bound}:{int(gaussian)}")
    coeffs = {}
    for idx in window(j):
        re = random_rational(rng, bound)
        im = random_rational(rng, bound) if gaussian else Fraction(0)
        value = GaussianRational(re, im)
        if value != ZERO:
            coeffs[(idx.i, idx.l)] = value
    return CanonicalForm.from_coefficients(j, coeffs)
