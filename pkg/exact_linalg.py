"""
Dokładna algebra liniowa nad GaussianRational.

Jądro macierzy (redukcja wierszowa bez zaokrągleń), rozwiązanie szczególne
układu niejednorodnego oraz test, czy forma kwadratowa znika tożsamościowo
na podprzestrzeni (przez polaryzację).
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Set, Tuple

import numpy as np

from laurent import ONE, ZERO, GaussianRational, to_gaussian

logger = logging.getLogger(__name__)

Vector = List[GaussianRational]
SparseRow = Dict[int, GaussianRational]


# =============================================================================
# MACIERZ
# =============================================================================


@dataclass
class ExactMatrix:
    """
    Macierz rows x cols o wpisach GaussianRational.

    Wiersze są trzymane jako słowniki {kolumna: wartość} bez zer
    (from_dense przyjmuje pełną siatkę). Macierz bez wierszy (brak więzów) jest dopuszczalna.
    """

    rows: int
    cols: int
    entries: List[SparseRow] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.cols < 1 or self.rows < 0:
            raise ValueError(f"Niepoprawne wymiary macierzy: {self.rows}x{self.cols}")
        if len(self.entries) != self.rows:
            raise ValueError(
                f"Liczba wierszy ({len(self.entries)}) nie zgadza się z rows={self.rows}"
            )
        clean_entries = []
        for row in self.entries:
            clean: SparseRow = {}
            for col, value in row.items():
                if not 0 <= col < self.cols:
                    raise ValueError(f"Kolumna {col} poza zakresem 0..{self.cols - 1}")
                value = to_gaussian(value)
                if value:
                    clean[col] = value
            clean_entries.append(clean)
        self.entries = clean_entries

    @classmethod
    def from_dense(cls, grid: Sequence[Sequence[Any]]) -> "ExactMatrix":
        if not grid or not grid[0]:
            raise ValueError("Macierz gęsta musi mieć co najmniej jeden wiersz i kolumnę")
        cols = len(grid[0])
        if any(len(row) != cols for row in grid):
            raise ValueError("Wiersze macierzy gęstej mają różne długości")
        entries = [{c: v for c, v in enumerate(row)} for row in grid]
        return cls(rows=len(grid), cols=cols, entries=entries)

    @classmethod
    def from_rows(cls, cols: int, rows: Iterable[Mapping[int, Any]]) -> "ExactMatrix":
        entries = [dict(row) for row in rows]
        return cls(rows=len(entries), cols=cols, entries=entries)

    def apply(self, vector: Sequence[Any]) -> Vector:
        """Iloczyn M * x."""
        if len(vector) != self.cols:
            raise ValueError(f"Wektor ma długość {len(vector)}, oczekiwano {self.cols}")
        result = []
        for row in self.entries:
            total = ZERO
            for col, value in row.items():
                x = vector[col]
                if x:
                    total = total + value * x
            result.append(total)
        return result

    def to_numpy(self) -> np.ndarray:
        """Kopia zespolona float (tylko dla oracle'a zmiennoprzecinkowego)."""
        array = np.zeros((self.rows, self.cols), dtype=complex)
        for r, row in enumerate(self.entries):
            for c, value in row.items():
                array[r, c] = complex(value)
        return array


# =============================================================================
# REDUKCJA WIERSZOWA
# =============================================================================


def _axpy(target: SparseRow, factor: GaussianRational, source: SparseRow) -> None:
    """target += factor * source (w miejscu, bez zapisywania zer)."""
    for col, value in source.items():
        total = target.get(col, ZERO) + factor * value
        if total:
            target[col] = total
        else:
            target.pop(col, None)


def _row_reduce(
    rows: Iterable[SparseRow], protected: Set[int] = frozenset()
) -> Tuple[Dict[int, SparseRow], bool]:
    """
    Zredukowana postać schodkowa, wiersz po wierszu.

    Element główny w każdym nowym wierszu to wpis o najmniejszym rozmiarze
    dokładnym (remis: najmniejszy indeks kolumny). Kolumny z `protected`
    nigdy nie są kolumnami głównymi.

    Returns:
        (pivots, consistent): pivots[kolumna] to wiersz z jedynką w tej kolumnie
        i zerami we wszystkich pozostałych kolumnach głównych; consistent=False,
        gdy któryś wiersz zredukował się do samych kolumn chronionych.
    """
    pivots: Dict[int, SparseRow] = {}
    consistent = True
    for source in rows:
        row = dict(source)
        for col in [c for c in row if c in pivots]:
            factor = row.get(col)
            if factor:
                _axpy(row, -factor, pivots[col])
        if not row:
            continue

        candidates = [c for c in row if c not in protected]
        if not candidates:
            consistent = False
            continue

        pivot_col = min(candidates, key=lambda c: (row[c].size, c))
        inverse = row[pivot_col].inverse()
        row = {c: v * inverse for c, v in row.items()}
        row[pivot_col] = ONE

        for other in pivots.values():
            factor = other.get(pivot_col)
            if factor:
                _axpy(other, -factor, row)
        pivots[pivot_col] = row

    return pivots, consistent


def nullspace(matrix: ExactMatrix) -> List[Vector]:
    """
    Dokładna baza jądra {x : Mx = 0}.

    Kolejność bazy jest deterministyczna: po rosnących kolumnach wolnych.

    Args:
        matrix: Macierz układu

    Returns:
        Lista wektorów bazowych (pusta, gdy M jest różnowartościowa)
    """
    pivots, _ = _row_reduce(matrix.entries)
    free_cols = [c for c in range(matrix.cols) if c not in pivots]
    logger.debug(
        "nullspace: %dx%d, rząd %d, wymiar jądra %d",
        matrix.rows,
        matrix.cols,
        len(pivots),
        len(free_cols),
    )

    # kolumna wolna -> {kolumna główna: -R[kolumna główna][kolumna wolna]}
    dependents: Dict[int, Dict[int, GaussianRational]] = {c: {} for c in free_cols}
    for pivot_col, row in pivots.items():
        for col, value in row.items():
            if col != pivot_col:
                dependents[col][pivot_col] = -value

    basis = []
    for free_col in free_cols:
        vector = [ZERO] * matrix.cols
        vector[free_col] = ONE
        for pivot_col, value in dependents[free_col].items():
            vector[pivot_col] = value
        basis.append(vector)
    return basis


def rank(matrix: ExactMatrix) -> int:
    pivots, _ = _row_reduce(matrix.entries)
    return len(pivots)


def solve(matrix: ExactMatrix, rhs: Sequence[Any]) -> Optional[Vector]:
    """
    Rozwiązanie szczególne Mx = rhs ze wszystkimi zmiennymi wolnymi równymi 0.

    Returns:
        Wektor rozwiązania albo None, gdy układ jest sprzeczny
    """
    if len(rhs) != matrix.rows:
        raise ValueError(f"Prawa strona ma długość {len(rhs)}, oczekiwano {matrix.rows}")
    rhs_col = matrix.cols
    augmented = []
    for row, value in zip(matrix.entries, rhs):
        extended = dict(row)
        value = to_gaussian(value)
        if value:
            extended[rhs_col] = -value
        augmented.append(extended)

    pivots, consistent = _row_reduce(augmented, protected={rhs_col})
    if not consistent:
        return None

    solution = [ZERO] * matrix.cols
    for pivot_col, row in pivots.items():
        value = row.get(rhs_col)
        if value:
            solution[pivot_col] = -value
    return solution


# =============================================================================
# FORMY KWADRATOWE
# =============================================================================


@dataclass(frozen=True)
class QuadraticForm:
    """
    q(x) = suma coeff * x[row] * x[col] po wyrazach (row <= col).

    Dla wyznacznika w początku: q(G) = a00*d00 - b00*c00.
    """

    dim: int
    terms: Tuple[Tuple[int, int, GaussianRational], ...]

    def __post_init__(self) -> None:
        normalized = []
        for row, col, coeff in self.terms:
            if not 0 <= row <= col < self.dim:
                raise ValueError(f"Wyraz ({row}, {col}) poza zakresem lub row > col")
            normalized.append((row, col, to_gaussian(coeff)))
        object.__setattr__(self, "terms", tuple(normalized))

    @property
    def support(self) -> List[int]:
        return sorted({idx for row, col, _ in self.terms for idx in (row, col)})

    def evaluate(self, x: Sequence[GaussianRational]) -> GaussianRational:
        total = ZERO
        for row, col, coeff in self.terms:
            if x[row] and x[col]:
                total = total + coeff * x[row] * x[col]
        return total

    def polar(self, x: Sequence[GaussianRational], y: Sequence[GaussianRational]) -> GaussianRational:
        """q(x + y) - q(x) - q(y)."""
        total = ZERO
        for row, col, coeff in self.terms:
            total = total + coeff * (x[row] * y[col] + y[row] * x[col])
        return total


class SpanCheck(NamedTuple):
    vanishes: bool
    witness: Optional[Vector]


def quadratic_vanishes_on_span(form: QuadraticForm, basis: Sequence[Vector]) -> SpanCheck:
    """
    Czy q znika w każdym punkcie span(basis).

    W charakterystyce 0: q = 0 na span{v_1..v_k} wtedy i tylko wtedy, gdy
    q(v_i) = 0 dla wszystkich i oraz q(v_i + v_j) = 0 dla i < j. Świadek
    jest szukany w tej kolejności: najpierw wektory bazy, potem sumy par
    w porządku leksykograficznym.

    Returns:
        SpanCheck(vanishes, witness): witness to wektor x z q(x) != 0
    """
    for vector in basis:
        if len(vector) != form.dim:
            raise ValueError(f"Wektor bazy ma długość {len(vector)}, oczekiwano {form.dim}")

    for vector in basis:
        if form.evaluate(vector):
            return SpanCheck(False, list(vector))

    # wektory zerowe na nośniku q nie zmieniają wartości q na sumach
    support = form.support
    active = [v for v in basis if any(v[idx] for idx in support)]
    for a in range(len(active)):
        for b in range(a + 1, len(active)):
            if form.polar(active[a], active[b]):
                witness = [x + y for x, y in zip(active[a], active[b])]
                return SpanCheck(False, witness)
    return SpanCheck(True, None)
