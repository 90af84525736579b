"""
Dokładne skalary i obcięte dwuwymiarowe wielomiany Laurenta.

GaussianRational to ciało współczynników (wymierne z jednostką urojoną),
BiLaurent to skończenie nośne szeregi: wielomian w u (wykładnik >= 0),
Laurent w z. Wszystkie funkcje p, a, b, c, d, alpha, beta, gamma, delta
są wartościami typu BiLaurent.
"""

import math
from fractions import Fraction
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

from helpers import format_rational, parse_rational

RationalLike = Union[int, Fraction, str]
Monomial = Tuple[int, int]  # (uexp, zexp)

# Wartownik rzędu w u dla zera
INFINITY = math.inf


# =============================================================================
# GAUSSIAN RATIONAL
# =============================================================================


def _to_fraction(value: Any) -> Fraction:
    if type(value) is Fraction:
        return value
    if isinstance(value, float):
        raise TypeError("Liczby zmiennoprzecinkowe nie są dozwolone w rdzeniu dokładnym")
    if isinstance(value, str):
        return parse_rational(value)
    return Fraction(value)


class GaussianRational:
    """
    Dokładny skalar re + im*i, obie części jako Fraction (najprostsza postać,
    dodatni mianownik). Obiekty są niemutowalne.
    """

    __slots__ = ("re", "im")

    def __init__(self, re: RationalLike = 0, im: RationalLike = 0) -> None:
        object.__setattr__(self, "re", _to_fraction(re))
        object.__setattr__(self, "im", _to_fraction(im))

    @classmethod
    def _make(cls, re: Fraction, im: Fraction) -> "GaussianRational":
        obj = object.__new__(cls)
        object.__setattr__(obj, "re", re)
        object.__setattr__(obj, "im", im)
        return obj

    def __setattr__(self, name: str, value: Any) -> None:
        raise AttributeError("GaussianRational jest niemutowalny")

    def __reduce__(self) -> Tuple[Any, ...]:
        return (GaussianRational, (self.re, self.im))

    # -- arytmetyka ----------------------------------------------------------

    def __add__(self, other: Any) -> "GaussianRational":
        other = to_gaussian(other)
        return GaussianRational._make(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other: Any) -> "GaussianRational":
        other = to_gaussian(other)
        return GaussianRational._make(self.re - other.re, self.im - other.im)

    def __rsub__(self, other: Any) -> "GaussianRational":
        return to_gaussian(other) - self

    def __neg__(self) -> "GaussianRational":
        return GaussianRational._make(-self.re, -self.im)

    def __mul__(self, other: Any) -> "GaussianRational":
        other = to_gaussian(other)
        if not self.im and not other.im:
            return GaussianRational._make(self.re * other.re, self.im)
        return GaussianRational._make(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "GaussianRational":
        return self * to_gaussian(other).inverse()

    def __rtruediv__(self, other: Any) -> "GaussianRational":
        return to_gaussian(other) * self.inverse()

    def inverse(self) -> "GaussianRational":
        if not self:
            raise ZeroDivisionError("Dzielenie przez zero w GaussianRational")
        if not self.im:
            return GaussianRational._make(1 / self.re, self.im)
        norm = self.norm()
        return GaussianRational._make(self.re / norm, -self.im / norm)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational._make(self.re, -self.im)

    def norm(self) -> Fraction:
        """Kwadrat modułu: re^2 + im^2."""
        return self.re * self.re + self.im * self.im

    # -- porównania i konwersje ---------------------------------------------

    def __eq__(self, other: Any) -> bool:
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return not self.im and self.re == other
        return NotImplemented

    def __hash__(self) -> int:
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    @property
    def is_real(self) -> bool:
        return not self.im

    @property
    def size(self) -> int:
        """Rozmiar dokładny (suma długości bitowych liczników i mianowników)."""
        return (
            self.re.numerator.bit_length()
            + self.re.denominator.bit_length()
            + self.im.numerator.bit_length()
            + self.im.denominator.bit_length()
        )

    def __repr__(self) -> str:
        return f"GaussianRational({str(self.re)!r}, {str(self.im)!r})"

    def __str__(self) -> str:
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"


ZERO = GaussianRational._make(Fraction(0), Fraction(0))
ONE = GaussianRational._make(Fraction(1), Fraction(0))
I_UNIT = GaussianRational._make(Fraction(0), Fraction(1))


def to_gaussian(value: Any) -> GaussianRational:
    """Konwertuje int / Fraction / "num/den" / GaussianRational na GaussianRational."""
    if isinstance(value, GaussianRational):
        return value
    if isinstance(value, complex):
        raise TypeError("Liczby zespolone float nie są dozwolone w rdzeniu dokładnym")
    return GaussianRational._make(_to_fraction(value), Fraction(0))


# =============================================================================
# BI-LAURENT
# =============================================================================


class BiLaurent:
    """
    Skończenie nośny szereg sum c * z^zexp * u^uexp, uexp >= 0.

    Postać kanoniczna: brak zapisanych zerowych współczynników, więc równość
    jest równością nośników i współczynników.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Mapping[Monomial, Any]] = None) -> None:
        clean: Dict[Monomial, GaussianRational] = {}
        for (uexp, zexp), coeff in (terms or {}).items():
            if uexp < 0:
                raise ValueError(f"Wykładnik u musi być >= 0, otrzymano {uexp}")
            value = to_gaussian(coeff)
            if value:
                clean[(int(uexp), int(zexp))] = value
        self._terms = clean

    @classmethod
    def _from_clean(cls, terms: Dict[Monomial, GaussianRational]) -> "BiLaurent":
        obj = object.__new__(cls)
        obj._terms = terms
        return obj

    @classmethod
    def monomial(cls, uexp: int, zexp: int, coeff: Any = 1) -> "BiLaurent":
        return cls({(uexp, zexp): coeff})

    @classmethod
    def zero(cls) -> "BiLaurent":
        return cls._from_clean({})

    @classmethod
    def constant(cls, coeff: Any) -> "BiLaurent":
        return cls({(0, 0): coeff})

    # -- dostęp -------------------------------------------------------------

    def coeff(self, uexp: int, zexp: int) -> GaussianRational:
        return self._terms.get((uexp, zexp), ZERO)

    def items(self) -> Iterator[Tuple[Monomial, GaussianRational]]:
        """Wyrazy posortowane po (uexp, zexp)."""
        return iter(sorted(self._terms.items()))

    def support(self) -> List[Monomial]:
        return sorted(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def constant_term(self) -> GaussianRational:
        """Współczynnik przy z^0 u^0 (wartość w początku układu)."""
        return self.coeff(0, 0)

    # -- arytmetyka ---------------------------------------------------------

    def __add__(self, other: Any) -> "BiLaurent":
        other = _to_bilaurent(other)
        result = dict(self._terms)
        for key, value in other._terms.items():
            total = result.get(key, ZERO) + value
            if total:
                result[key] = total
            else:
                result.pop(key, None)
        return BiLaurent._from_clean(result)

    __radd__ = __add__

    def __neg__(self) -> "BiLaurent":
        return BiLaurent._from_clean({k: -v for k, v in self._terms.items()})

    def __sub__(self, other: Any) -> "BiLaurent":
        return self + (-_to_bilaurent(other))

    def __rsub__(self, other: Any) -> "BiLaurent":
        return _to_bilaurent(other) - self

    def __mul__(self, other: Any) -> "BiLaurent":
        if isinstance(other, BiLaurent):
            return mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, factor: Any) -> "BiLaurent":
        factor = to_gaussian(factor)
        if not factor:
            return BiLaurent.zero()
        return BiLaurent._from_clean({k: v * factor for k, v in self._terms.items()})

    def shift(self, du: int, dz: int) -> "BiLaurent":
        """
        Mnoży przez z^dz u^du.

        Raises:
            ValueError: gdy któryś wyraz dostałby ujemny wykładnik u
        """
        if self._terms and min(u for u, _ in self._terms) + du < 0:
            raise ValueError(f"Przesunięcie o u^{du} daje ujemny wykładnik u")
        return BiLaurent._from_clean(
            {(u + du, z + dz): v for (u, z), v in self._terms.items()}
        )

    # -- predykaty i rzędy --------------------------------------------------

    def is_v_holomorphic(self) -> bool:
        return is_v_holomorphic(self)

    def u_order(self) -> float:
        return u_order(self)

    def max_uexp(self) -> int:
        return max((u for u, _ in self._terms), default=-1)

    def truncate_u(self, level: int) -> "BiLaurent":
        return truncate_u(self, level)

    def forbidden_terms(self) -> List[Tuple[Monomial, GaussianRational]]:
        """Wyrazy z^m u^i z m > i (nieholomorficzne w mapie V)."""
        return [((u, z), v) for (u, z), v in self.items() if z > u]

    # -- porównania ---------------------------------------------------------

    def __eq__(self, other: Any) -> bool:
        if isinstance(other, BiLaurent):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self._terms == _to_bilaurent(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:
        return f"BiLaurent({self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for (u, z), value in self.items():
            factors = []
            if z:
                factors.append("z" if z == 1 else f"z^{z}")
            if u:
                factors.append("u" if u == 1 else f"u^{u}")
            coeff = str(value)
            if not value.is_real and value.re:
                coeff = f"({coeff})"
            if factors:
                monomial = "*".join(factors)
                parts.append(monomial if value == 1 else f"{coeff}*{monomial}")
            else:
                parts.append(coeff)
        return " + ".join(parts)

    # -- serializacja -------------------------------------------------------

    def to_records(self) -> List[Dict[str, Any]]:
        """Lista rekordów {u, z, re, im} w stałej kolejności, bez zer."""
        return [
            {
                "u": u,
                "z": z,
                "re": format_rational(value.re),
                "im": format_rational(value.im),
            }
            for (u, z), value in self.items()
        ]

    @classmethod
    def from_records(cls, records: Iterable[Mapping[str, Any]]) -> "BiLaurent":
        terms: Dict[Monomial, GaussianRational] = {}
        for record in records:
            key = (int(record["u"]), int(record["z"]))
            value = GaussianRational(
                parse_rational(record["re"]), parse_rational(record.get("im", "0/1"))
            )
            terms[key] = terms.get(key, ZERO) + value
        return cls(terms)


def _to_bilaurent(value: Any) -> BiLaurent:
    if isinstance(value, BiLaurent):
        return value
    return BiLaurent.constant(value)


# =============================================================================
# OPERACJE
# =============================================================================


def mul(f: BiLaurent, g: BiLaurent) -> BiLaurent:
    """
    Dokładny iloczyn splotowy.

    Nośnik wyniku zawiera się w sumie Minkowskiego nośników.
    """
    if not f._terms or not g._terms:
        return BiLaurent.zero()
    result: Dict[Monomial, GaussianRational] = {}
    for (u1, z1), c1 in f._terms.items():
        for (u2, z2), c2 in g._terms.items():
            key = (u1 + u2, z1 + z2)
            result[key] = result.get(key, ZERO) + c1 * c2
    return BiLaurent._from_clean({k: v for k, v in result.items() if v})


def is_v_holomorphic(f: BiLaurent) -> bool:
    """
    Czy f jest holomorficzne w (xi, v) = (z^-1, zu).

    Wyraz z^m u^i jest holomorficzny w mapie V dokładnie gdy m <= i.
    """
    return all(z <= u for u, z in f._terms)


def u_order(f: BiLaurent) -> float:
    """Najmniejszy wykładnik u w nośniku; INFINITY dla zera."""
    if not f._terms:
        return INFINITY
    return min(u for u, _ in f._terms)


def truncate_u(f: BiLaurent, level: int) -> BiLaurent:
    """Zostawia wyrazy z uexp <= level (obcięcie do otoczenia formalnego)."""
    if level < 0:
        raise ValueError(f"Poziom obcięcia musi być >= 0, otrzymano {level}")
    return BiLaurent._from_clean({k: v for k, v in f._terms.items() if k[0] <= level})


# Zmienne mapy U oraz v = zu
Z = BiLaurent.monomial(0, 1)
U = BiLaurent.monomial(1, 0)
V = BiLaurent.monomial(1, 1)
