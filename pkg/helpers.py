"""
Funkcje pomocnicze dla biblioteki Moduli Wiązek.

Zawiera parsowanie i formatowanie liczb wymiernych, walidację rekordów
(jsonschema), zapis i odczyt JSONL oraz formatowanie werdyktów do wyświetlenia.
"""

import json
import re
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Union

import jsonschema

from config import VERDICT_LABELS

PathLike = Union[str, Path]


class RecordError(ValueError):
    """Rekord JSON nie spełnia schematu albo niezmienników dziedziny."""


# =============================================================================
# PARSOWANIE LICZB WYMIERNYCH
# =============================================================================

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


def parse_rational(text: Any) -> Fraction:
    """
    Konwertuje zapis "num/den" na Fraction.

    Obsługuje formaty:
    - "3/4" -> 3/4
    - "-6/8" -> -3/4
    - "5" -> 5
    - Fraction / int -> bez zmian

    Args:
        text: Tekst "num/den", liczba całkowita lub Fraction

    Returns:
        Fraction w najprostszej postaci

    Raises:
        RecordError: gdy zapis nie jest dokładną liczbą wymierną (np. "0.5")
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)

    match = _RATIONAL_RE.match(str(text))
    if not match:
        raise RecordError(f"Niepoprawna liczba wymierna: {text!r} (oczekiwano 'num/den')")
    numerator = int(match.group(1))
    denominator = int(match.group(2)) if match.group(2) else 1
    if denominator == 0:
        raise RecordError(f"Zerowy mianownik: {text!r}")
    return Fraction(numerator, denominator)


def format_rational(value: Fraction) -> str:
    """Zapis "num/den" bez części dziesiętnych (mianownik zawsze obecny)."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


# =============================================================================
# SCHEMATY REKORDÓW
# =============================================================================

_RATIONAL_PATTERN = r"^[+-]?\d+(/\d+)?$"

TERM_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["u", "z", "re", "im"],
    "properties": {
        "u": {"type": "integer", "minimum": 0},
        "z": {"type": "integer"},
        "re": {"type": "string", "pattern": _RATIONAL_PATTERN},
        "im": {"type": "string", "pattern": _RATIONAL_PATTERN},
    },
}

TERMS_SCHEMA: Dict[str, Any] = {"type": "array", "items": TERM_SCHEMA}

FORM_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["j", "coeffs"],
    "properties": {
        "j": {"type": "integer", "minimum": 1},
        "coeffs": TERMS_SCHEMA,
    },
}

CERTIFICATE_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["j", "p", "pprime", "G"],
    "properties": {
        "j": {"type": "integer", "minimum": 1},
        "p": TERMS_SCHEMA,
        "pprime": TERMS_SCHEMA,
        "G": {
            "type": "object",
            "required": ["a", "b", "c", "d"],
            "properties": {name: TERMS_SCHEMA for name in ("a", "b", "c", "d")},
        },
        "params": {
            "type": ["object", "null"],
            "required": ["U", "Z"],
            "additionalProperties": False,
            "properties": {
                "U": {"type": "integer", "minimum": 0},
                "Z": {"type": "integer", "minimum": 0},
            },
        },
        "seed": {"type": ["integer", "null"]},
        "level": {"type": ["integer", "null"], "minimum": 0},
    },
}


def validate_record(record: Any, schema: Mapping[str, Any], what: str) -> None:
    """
    Sprawdza rekord względem schematu JSON.

    Args:
        record: Zdekodowany rekord JSON
        schema: Schemat (np. FORM_SCHEMA)
        what: Nazwa rekordu do komunikatu błędu

    Raises:
        RecordError: gdy rekord nie spełnia schematu
    """
    try:
        jsonschema.validate(instance=record, schema=schema)
    except jsonschema.ValidationError as exc:
        raise RecordError(f"Niepoprawny rekord {what}: {exc.message}") from exc


# =============================================================================
# JSONL
# =============================================================================


def dump_record(record: Mapping[str, Any]) -> str:
    """Deterministyczny zapis jednej linii JSON (posortowane klucze)."""
    return json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def write_jsonl(path: PathLike, records: Iterable[Mapping[str, Any]]) -> int:
    """
    Zapisuje rekordy jako JSONL (jeden rekord na linię).

    Returns:
        Liczba zapisanych rekordów
    """
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(dump_record(record) + "\n")
            count += 1
    return count


def iter_jsonl(path: PathLike) -> Iterator[Dict[str, Any]]:
    """Czyta rekordy JSONL, pomijając puste linie."""
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordError(f"{path}:{line_no}: niepoprawny JSON ({exc.msg})") from exc


def read_jsonl(path: PathLike) -> List[Dict[str, Any]]:
    return list(iter_jsonl(path))


# =============================================================================
# FORMATOWANIE DO WYŚWIETLENIA
# =============================================================================


def format_verdict_line(record: Mapping[str, Any]) -> str:
    """
    Jednolinijkowy opis werdyktu do konsoli.

    Args:
        record: Rekord werdyktu (klucze: verdict, U, Z lub Mz)

    Returns:
        Np. "⛔ Nieizomorficzne (certyfikat) [U=4, Mz=4]"
    """
    kind = record.get("verdict", "?")
    label = VERDICT_LABELS.get(kind, kind)
    window = ", ".join(
        f"{key}={record[key]}" for key in ("U", "Z", "Mz") if record.get(key) is not None
    )
    return f"{label} [{window}]" if window else label


def verdict_histogram(kinds: Iterable[str]) -> Dict[str, int]:
    """Liczności werdyktów w stałej kolejności (wszystkie trzy klucze obecne)."""
    histogram = {kind: 0 for kind in VERDICT_LABELS}
    for kind in kinds:
        histogram[kind] = histogram.get(kind, 0) + 1
    return histogram
