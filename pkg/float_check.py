"""
Niezależny oracle zmiennoprzecinkowy dla silnika dokładnego.

Porównuje wymiar jądra układu koniecznego (dokładny vs SVD z progiem
względnym) oraz wynik testu polaryzacji z losową próbą formy wyznacznika
na zmiennoprzecinkowej bazie jądra. Wynik jest wyłącznie doradczy:
rozbieżność wskazuje błąd w silniku, nigdy nie zmienia werdyktu dokładnego.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

import numpy as np

from canonical import CanonicalForm
from config import (
    PROBE_RELATIVE_THRESHOLD,
    PROBE_TRIALS,
    SVD_RELATIVE_THRESHOLD,
    get_float_setting,
)
from exact_linalg import nullspace, quadratic_vanishes_on_span
from iso_engine import TruncationParams, assemble_necessity_system

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CrossCheckRecord:
    j: int
    U: int
    Z: int
    exact_nullity: int
    float_nullity: int
    exact_iso_possible: bool
    probe_iso_possible: bool
    max_probe: float

    @property
    def nullity_agrees(self) -> bool:
        return self.exact_nullity == self.float_nullity

    @property
    def probe_agrees(self) -> bool:
        return self.exact_iso_possible == self.probe_iso_possible

    @property
    def agrees(self) -> bool:
        return self.nullity_agrees and self.probe_agrees

    def to_record(self) -> Dict[str, Any]:
        record = asdict(self)
        record["max_probe"] = float(f"{self.max_probe:.6e}")
        record["nullity_agrees"] = self.nullity_agrees
        record["probe_agrees"] = self.probe_agrees
        record["agrees"] = self.agrees
        return record


def float_nullspace(array: np.ndarray, rtol: float) -> np.ndarray:
    """
    Baza jądra przez SVD; wartości osobliwe <= rtol * s_max traktowane jako zero.

    Returns:
        Macierz cols x k, kolumny tworzą ortonormalną bazę jądra
    """
    cols = array.shape[1]
    if array.shape[0] == 0:
        return np.eye(cols, dtype=complex)
    _, s, vh = np.linalg.svd(array, full_matrices=True)
    tol = rtol * s[0] if s.size > 0 and s[0] > 0 else 0.0
    rank = int(np.sum(s > tol))
    return vh[rank:].T.conj()


def cross_check_float(
    p: CanonicalForm,
    pprime: CanonicalForm,
    params: Optional[TruncationParams] = None,
    seed: int = 0,
) -> CrossCheckRecord:
    """
    Porównuje silnik dokładny z obliczeniem zmiennoprzecinkowym.

    Args:
        p, pprime: Postaci na tym samym poziomie
        params: Okno obcięcia (domyślnie jak w decide_iso)
        seed: Ziarno losowych kombinacji bazy jądra

    Returns:
        CrossCheckRecord z wymiarami jąder i wynikami obu testów
    """
    params = (params or TruncationParams.default_for(p.j)).for_level(p.j)
    system = assemble_necessity_system(p, pprime, params)
    form = system.layout.determinant_form()

    basis = nullspace(system.matrix)
    exact_iso_possible = not quadratic_vanishes_on_span(form, basis).vanishes

    rtol = get_float_setting("SVD_RELATIVE_THRESHOLD", SVD_RELATIVE_THRESHOLD)
    null_basis = float_nullspace(system.matrix.to_numpy(), rtol)

    layout = system.layout
    a00, b00 = layout.index("a", 0, 0), layout.index("b", 0, 0)
    c00, d00 = layout.index("c", 0, 0), layout.index("d", 0, 0)

    rng = np.random.default_rng(seed)
    max_probe = 0.0
    k = null_basis.shape[1]
    if k:
        for _ in range(PROBE_TRIALS):
            coeffs = rng.standard_normal(k) + 1j * rng.standard_normal(k)
            x = null_basis @ coeffs
            value = x[a00] * x[d00] - x[b00] * x[c00]
            scale = float(np.vdot(x, x).real)
            if scale > 0:
                max_probe = max(max_probe, abs(value) / scale)

    record = CrossCheckRecord(
        j=p.j,
        U=params.U,
        Z=params.Z,
        exact_nullity=len(basis),
        float_nullity=k,
        exact_iso_possible=exact_iso_possible,
        probe_iso_possible=bool(max_probe > PROBE_RELATIVE_THRESHOLD),
        max_probe=max_probe,
    )
    if not record.agrees:
        logger.warning("cross_check_float: rozbieżność z silnikiem dokładnym: %s", record.to_record())
    return record
