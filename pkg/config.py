"""
Konfiguracja i stałe dla biblioteki Moduli Wiązek na Rozdmuchanej Płaszczyźnie.

Centralizuje wszystkie "magic numbers": domyślne okna obcięcia, limity
pogłębiania, progi oracle'a zmiennoprzecinkowego, etykiety i kolory raportów.
"""

import os
from typing import List, Tuple

# =============================================================================
# OKNA OBCIĘCIA (TRUNCATION)
# =============================================================================

# Domyślne okno: U = 2j, Z = 4j
DEFAULT_U_FACTOR = 2
DEFAULT_Z_FACTOR = 4

# Jeden krok pogłębiania: (U + 2, Z + 4)
DEEPENING_STEP_U = 2
DEEPENING_STEP_Z = 4

DEFAULT_DEEPENING_CAP = 2

# =============================================================================
# GENEROWANIE DANYCH
# =============================================================================

# Liczniki i mianowniki losowych współczynników są ograniczone przez bound
DEFAULT_COEFF_BOUND = 5

# Stopień (w v = zu) wielomianów a, d w rodzinie cechowania orbit_sample
ORBIT_GAUGE_DEGREE = 2
ORBIT_RETRY_BUDGET = 5

# =============================================================================
# ORACLE ZMIENNOPRZECINKOWY
# =============================================================================

SVD_RELATIVE_THRESHOLD = 1e-9
PROBE_TRIALS = 8
PROBE_RELATIVE_THRESHOLD = 1e-6

# =============================================================================
# KAMPANIE
# =============================================================================

SUITES: Tuple[str, ...] = (
    "welldef",
    "injective",
    "saturation",
    "closedness",
    "stabilization",
    "monotonicity",
)

# Ile losowych par wolno wylosować, szukając par CertifiedNonIso
INJECTIVE_DRAW_FACTOR = 4

REPORT_FILE = "report.json"
ROWS_FILE = "rows.jsonl"
CERTIFICATES_FILE = "certificates.jsonl"
TIMINGS_FILE = "timings.jsonl"
CSV_FILE = "report.csv"
EXCEL_FILE = "report.xlsx"

# Stała kolejność kolumn CSV
REPORT_CSV_COLUMNS: List[str] = [
    "suite",
    "index",
    "j",
    "verdict",
    "U",
    "Z",
    "passed",
    "certificate_id",
    "note",
]

# =============================================================================
# ETYKIETY UI (POLSKIE)
# =============================================================================

VERDICT_LABELS = {
    "CertifiedIso": "✅ Izomorficzne (certyfikat)",
    "CertifiedNonIso": "⛔ Nieizomorficzne (certyfikat)",
    "Undecided": "⚠️ Nierozstrzygnięte",
}

SUITE_LABELS = {
    "welldef": "Poprawność Φ_j",
    "injective": "Różnowartościowość Φ_j",
    "saturation": "Nasycenie obrazu",
    "closedness": "Domkniętość obrazu",
    "stabilization": "Stabilizacja obcięcia",
    "monotonicity": "Monotoniczność NonIso",
}

# =============================================================================
# KOLORY I SZEROKOŚCI KOLUMN EXCEL
# =============================================================================

EXCEL_COLORS = {
    "header_bg": "2F5597",
    "header_font": "FFFFFF",
    "border": "E0E0E0",
    "red_fill": "FFE6E6",
    "yellow_fill": "FFFFCC",
    "green_fill": "E6FFE6",
}

EXCEL_COLUMN_WIDTHS = {
    "suite": 16,
    "index": 8,
    "j": 6,
    "verdict": 18,
    "U": 6,
    "Z": 6,
    "passed": 10,
    "certificate_id": 16,
    "note": 40,
}

# Progi dla kolorowania odsetka zaliczonych przypadków
# Format: (próg_górny, kolor_hex)
PASS_RATE_THRESHOLDS: List[Tuple[int, str]] = [
    (50, EXCEL_COLORS["red_fill"]),
    (99, EXCEL_COLORS["yellow_fill"]),
    (100, EXCEL_COLORS["green_fill"]),
]

def get_color_for_pass_rate(percent: float) -> str:
    """Zwraca kolor hex dla odsetka zaliczonych przypadków (0-100)."""
    for upper, color in PASS_RATE_THRESHOLDS:
        if percent <= upper:
            return color
    return EXCEL_COLORS["green_fill"]


# =============================================================================
# NADPISYWANIE ZE ZMIENNYCH ŚRODOWISKOWYCH
# =============================================================================

ENV_PREFIX = "BLOWUP_"


def get_int_setting(name: str, default: int) -> int:
    """
    Zwraca ustawienie całkowite, z możliwością nadpisania przez BLOWUP_<NAME>.

    Args:
        name: Nazwa ustawienia bez prefiksu (np. "DEEPENING_CAP")
        default: Wartość domyślna z tego modułu

    Returns:
        Wartość ze środowiska lub domyślna
    """
    raw = os.getenv(ENV_PREFIX + name, "").strip()
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"Zmienna {ENV_PREFIX}{name} musi być liczbą całkowitą: {raw!r}")


def get_float_setting(name: str, default: float) -> float:
    """Jak get_int_setting, dla wartości zmiennoprzecinkowych."""
    raw = os.getenv(ENV_PREFIX + name, "").strip()
    if not raw:
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"Zmienna {ENV_PREFIX}{name} musi być liczbą: {raw!r}")
