"""
Silnik izomorfizmów postaci kanonicznych.

Dwie postaci p, p' na poziomie j wyznaczają izomorficzne wiązki dokładnie
wtedy, gdy istnieje cechowanie G = [[a, b], [c, d]] holomorficzne w (z, u),
dla którego

    [[alpha, beta], [gamma, delta]] = T_p' G T_p^-1
      = [[a + z^-j p' c,  z^2j b + z^j (p' d - a p) - p p' c],
         [z^-2j c,        d - z^-j p c]]

jest holomorficzne w (z^-1, zu), a det G jest jednostką. Więzy są liniowe
w współczynnikach G, więc decyzja sprowadza się do dwóch dokładnych
układów liniowych:

- układ konieczny (wiersze i <= U, m <= Z - 2j): spełnia go obcięcie
  każdego prawdziwego świadka, więc CertifiedNonIso jest rozstrzygające;
- układ dostateczny (wszystkie zabronione jednomiany dokładnego iloczynu):
  każde rozwiązanie jest świadkiem bez obcięcia, więc CertifiedIso jest
  rozstrzygające.

Luka między nimi jest domykana pogłębianiem okna i raportowana jako Undecided.
"""

import logging
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, NamedTuple, Optional, Tuple, Union

from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from canonical import (
    CanonicalForm,
    LevelMismatchError,
    from_coefficient_vector,
    phi,
    phi_inverse,
    random_rational,
    window,
)
from config import (
    DEEPENING_STEP_U,
    DEEPENING_STEP_Z,
    DEFAULT_COEFF_BOUND,
    DEFAULT_DEEPENING_CAP,
    DEFAULT_U_FACTOR,
    DEFAULT_Z_FACTOR,
    ORBIT_GAUGE_DEGREE,
    ORBIT_RETRY_BUDGET,
    get_int_setting,
)
from exact_linalg import (
    ExactMatrix,
    QuadraticForm,
    Vector,
    nullspace,
    quadratic_vanishes_on_span,
    solve,
)
from helpers import CERTIFICATE_SCHEMA, RecordError, validate_record
from laurent import ONE, ZERO, BiLaurent, GaussianRational, truncate_u

logger = logging.getLogger(__name__)

GAUGE_ENTRIES: Tuple[str, ...] = ("a", "b", "c", "d")
CONJUGATE_ENTRIES: Tuple[str, ...] = ("alpha", "beta", "gamma", "delta")


class GaugeError(ValueError):
    """Cechowanie nie jest holomorficzne w mapie U (ujemny wykładnik z lub u)."""


class CertificateError(RuntimeError):
    """Certyfikat zbudowany przez silnik nie przeszedł dokładnej weryfikacji."""


class OrbitSampleError(RuntimeError):
    """Nie udało się wylosować punktu orbity dla danej rodziny cechowań."""


# =============================================================================
# TYPY DZIEDZINY
# =============================================================================


@dataclass(frozen=True)
class GaugeCandidate:
    """Macierz [[a, b], [c, d]] wielomianów z wykładnikami z, u >= 0."""

    a: BiLaurent
    b: BiLaurent
    c: BiLaurent
    d: BiLaurent

    def __post_init__(self) -> None:
        for name in GAUGE_ENTRIES:
            bad = [(u, z) for u, z in getattr(self, name).support() if z < 0]
            if bad:
                raise GaugeError(f"Wpis {name} ma wyrazy z ujemnym wykładnikiem z: {bad}")

    @classmethod
    def identity(cls) -> "GaugeCandidate":
        return cls.diagonal(ONE, ONE)

    @classmethod
    def diagonal(cls, t: Any, s: Any) -> "GaugeCandidate":
        return cls(BiLaurent.constant(t), BiLaurent.zero(), BiLaurent.zero(), BiLaurent.constant(s))

    def entries(self) -> Dict[str, BiLaurent]:
        return {name: getattr(self, name) for name in GAUGE_ENTRIES}

    def determinant(self) -> BiLaurent:
        return self.a * self.d - self.b * self.c

    def det_at_origin(self) -> GaussianRational:
        """q(G) = a00 d00 - b00 c00."""
        return (
            self.a.constant_term() * self.d.constant_term()
            - self.b.constant_term() * self.c.constant_term()
        )

    def truncate_u(self, level: int) -> "GaugeCandidate":
        return GaugeCandidate(*(truncate_u(getattr(self, n), level) for n in GAUGE_ENTRIES))

    def to_record(self) -> Dict[str, Any]:
        return {name: getattr(self, name).to_records() for name in GAUGE_ENTRIES}

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "GaugeCandidate":
        return cls(*(BiLaurent.from_records(record[name]) for name in GAUGE_ENTRIES))


@dataclass(frozen=True)
class ConjugateMatrix:
    alpha: BiLaurent
    beta: BiLaurent
    gamma: BiLaurent
    delta: BiLaurent

    def entries(self) -> Dict[str, BiLaurent]:
        return {name: getattr(self, name) for name in CONJUGATE_ENTRIES}

    def is_v_holomorphic(self, level: Optional[int] = None) -> bool:
        """Czy wszystkie wpisy są holomorficzne w mapie V (opcjonalnie mod u^(level+1))."""
        for entry in self.entries().values():
            if level is not None:
                entry = truncate_u(entry, level)
            if not entry.is_v_holomorphic():
                return False
        return True


@dataclass(frozen=True)
class TruncationParams:
    """Okno obcięcia niewiadomych: uexp <= U, zexp <= Z; limit pogłębień."""

    U: int
    Z: int
    deepening_cap: int = DEFAULT_DEEPENING_CAP

    @classmethod
    def default_for(cls, j: int) -> "TruncationParams":
        return cls(
            U=DEFAULT_U_FACTOR * j,
            Z=DEFAULT_Z_FACTOR * j,
            deepening_cap=get_int_setting("DEEPENING_CAP", DEFAULT_DEEPENING_CAP),
        )

    def for_level(self, j: int) -> "TruncationParams":
        """Podnosi U, Z do minimów U >= 2j-2, Z >= 2j+1."""
        u_min, z_min = 2 * j - 2, 2 * j + 1
        if self.U >= u_min and self.Z >= z_min:
            return self
        logger.warning(
            "Okno (U=%d, Z=%d) poniżej minimum dla j=%d, podnoszę do (%d, %d)",
            self.U,
            self.Z,
            j,
            max(self.U, u_min),
            max(self.Z, z_min),
        )
        return TruncationParams(max(self.U, u_min), max(self.Z, z_min), self.deepening_cap)

    def deepened(self) -> "TruncationParams":
        return TruncationParams(
            self.U + DEEPENING_STEP_U, self.Z + DEEPENING_STEP_Z, self.deepening_cap
        )

    def z_cap(self, j: int) -> int:
        """Mz = Z - 2j: najwyższy wykładnik z wierszy układu koniecznego."""
        return self.Z - 2 * j

    def to_record(self) -> Dict[str, int]:
        return {"U": self.U, "Z": self.Z}


@dataclass(frozen=True)
class Certificate:
    """
    Konstruktywny świadek izomorfizmu p ~ p'.

    level = None oznacza świadka bez obcięcia; level = k oznacza świadka
    w k-tym otoczeniu formalnym (wszystko modulo u^(k+1)).
    """

    j: int
    p: CanonicalForm
    pprime: CanonicalForm
    gauge: GaugeCandidate
    params: Optional[TruncationParams] = None
    seed: Optional[int] = None
    level: Optional[int] = None

    def to_record(self) -> Dict[str, Any]:
        record = {
            "j": self.j,
            "p": self.p.p.to_records(),
            "pprime": self.pprime.p.to_records(),
            "G": self.gauge.to_record(),
            "params": self.params.to_record() if self.params else None,
            "seed": self.seed,
        }
        if self.level is not None:
            record["level"] = self.level
        return record

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "Certificate":
        validate_record(record, CERTIFICATE_SCHEMA, "certyfikatu")
        j = record["j"]
        try:
            p = CanonicalForm(j, BiLaurent.from_records(record["p"]))
            pprime = CanonicalForm(j, BiLaurent.from_records(record["pprime"]))
            gauge = GaugeCandidate.from_record(record["G"])
        except ValueError as exc:
            raise RecordError(f"Niepoprawny certyfikat: {exc}") from exc
        params = record.get("params")
        return cls(
            j=j,
            p=p,
            pprime=pprime,
            gauge=gauge,
            params=TruncationParams(params["U"], params["Z"]) if params is not None else None,
            seed=record.get("seed"),
            level=record.get("level"),
        )


@dataclass(frozen=True)
class CertifiedIso:
    certificate: Certificate
    kind: str = field(default="CertifiedIso", init=False)

    def to_record(self) -> Dict[str, Any]:
        params = self.certificate.params
        return {
            "verdict": self.kind,
            "U": params.U if params else None,
            "Z": params.Z if params else None,
            "certificate": self.certificate.to_record(),
        }


@dataclass(frozen=True)
class CertifiedNonIso:
    U: int
    Mz: int
    kind: str = field(default="CertifiedNonIso", init=False)

    def to_record(self) -> Dict[str, Any]:
        return {"verdict": self.kind, "U": self.U, "Mz": self.Mz}


@dataclass(frozen=True)
class Undecided:
    U: int
    Z: int
    kind: str = field(default="Undecided", init=False)

    def to_record(self) -> Dict[str, Any]:
        return {"verdict": self.kind, "U": self.U, "Z": self.Z}


Verdict = Union[CertifiedIso, CertifiedNonIso, Undecided]


# =============================================================================
# UKŁAD WSPÓŁRZĘDNYCH NIEWIADOMYCH
# =============================================================================


class ColumnLabel(NamedTuple):
    entry: str
    uexp: int
    zexp: int


class RowLabel(NamedTuple):
    entry: str
    uexp: int
    zexp: int


@dataclass(frozen=True)
class GaugeLayout:
    """
    Kolumny: współczynniki a, b, c, d nad {0 <= uexp <= U, 0 <= zexp <= Z},
    kolejność kolumnowa po (wpis, uexp, zexp).
    """

    U: int
    Z: int

    @property
    def block(self) -> int:
        return (self.U + 1) * (self.Z + 1)

    @property
    def size(self) -> int:
        return len(GAUGE_ENTRIES) * self.block

    def index(self, entry: str, uexp: int, zexp: int) -> int:
        return GAUGE_ENTRIES.index(entry) * self.block + uexp * (self.Z + 1) + zexp

    def label(self, col: int) -> ColumnLabel:
        entry_idx, rest = divmod(col, self.block)
        uexp, zexp = divmod(rest, self.Z + 1)
        return ColumnLabel(GAUGE_ENTRIES[entry_idx], uexp, zexp)

    def vector_to_gauge(self, vector: Vector) -> GaugeCandidate:
        terms: Dict[str, Dict[Tuple[int, int], GaussianRational]] = {n: {} for n in GAUGE_ENTRIES}
        for col, value in enumerate(vector):
            if value:
                label = self.label(col)
                terms[label.entry][(label.uexp, label.zexp)] = value
        return GaugeCandidate(*(BiLaurent(terms[n]) for n in GAUGE_ENTRIES))

    def gauge_to_vector(self, gauge: GaugeCandidate) -> Vector:
        vector = [ZERO] * self.size
        for name, poly in gauge.entries().items():
            for (u, z), value in poly.items():
                if u > self.U or z > self.Z:
                    raise GaugeError(f"Wyraz {name}: u^{u} z^{z} poza oknem (U={self.U}, Z={self.Z})")
                vector[self.index(name, u, z)] = value
        return vector

    def determinant_form(self) -> QuadraticForm:
        """q = a00 d00 - b00 c00 na współrzędnych tego układu."""
        return QuadraticForm(
            dim=self.size,
            terms=(
                (self.index("a", 0, 0), self.index("d", 0, 0), ONE),
                (self.index("b", 0, 0), self.index("c", 0, 0), -ONE),
            ),
        )


@dataclass
class LinearSystem:
    """Macierz więzów z etykietami wierszy (wpis, uexp, zexp) i kolumn."""

    matrix: ExactMatrix
    layout: GaugeLayout
    row_labels: List[RowLabel]

    def without_rows(self, predicate: Callable[[RowLabel], bool]) -> "LinearSystem":
        """Kopia bez wierszy spełniających predicate."""
        kept = [
            (label, row)
            for label, row in zip(self.row_labels, self.matrix.entries)
            if not predicate(label)
        ]
        matrix = ExactMatrix.from_rows(self.matrix.cols, [row for _, row in kept])
        return LinearSystem(matrix, self.layout, [label for label, _ in kept])


# =============================================================================
# SPRZĘŻENIE I SKŁADANIE UKŁADÓW
# =============================================================================


def _check_levels(p: CanonicalForm, pprime: CanonicalForm) -> int:
    if p.j != pprime.j:
        raise LevelMismatchError(f"Postaci na różnych poziomach: j={p.j} i j={pprime.j}")
    return p.j


def conjugate(p: CanonicalForm, pprime: CanonicalForm, gauge: GaugeCandidate) -> ConjugateMatrix:
    """
    Dokładne T_p' G T_p^-1 według wzorów (*).

    Raises:
        LevelMismatchError: gdy p i p' są na różnych poziomach
    """
    j = _check_levels(p, pprime)
    a, b, c, d = gauge.a, gauge.b, gauge.c, gauge.d
    z_j = BiLaurent.monomial(0, j)
    z_minus_j = BiLaurent.monomial(0, -j)
    return ConjugateMatrix(
        alpha=a + z_minus_j * pprime.p * c,
        beta=BiLaurent.monomial(0, 2 * j) * b + z_j * (pprime.p * d - a * p.p) - p.p * pprime.p * c,
        gamma=BiLaurent.monomial(0, -2 * j) * c,
        delta=d - z_minus_j * p.p * c,
    )


def _multipliers(p: CanonicalForm, pprime: CanonicalForm, j: int) -> Dict[str, Dict[str, BiLaurent]]:
    """Wkład jednostkowego wyrazu każdego wpisu G w każdy wpis sprzężenia."""
    z_j = BiLaurent.monomial(0, j)
    z_minus_j = BiLaurent.monomial(0, -j)
    table = {
        "a": {"alpha": BiLaurent.constant(1), "beta": -(z_j * p.p)},
        "b": {"beta": BiLaurent.monomial(0, 2 * j)},
        "c": {
            "alpha": z_minus_j * pprime.p,
            "beta": -(p.p * pprime.p),
            "gamma": BiLaurent.monomial(0, -2 * j),
            "delta": -(z_minus_j * p.p),
        },
        "d": {"beta": z_j * pprime.p, "delta": BiLaurent.constant(1)},
    }
    return {e: {t: m for t, m in targets.items() if not m.is_zero()} for e, targets in table.items()}


def _assemble(
    p: CanonicalForm,
    pprime: CanonicalForm,
    layout: GaugeLayout,
    u_cap: Optional[int],
    z_cap: Optional[int],
) -> LinearSystem:
    """
    Wiersze = współczynniki przy zabronionych jednomianach z^m u^i (m > i)
    wpisów sprzężenia, opcjonalnie ograniczone do i <= u_cap, m <= z_cap.
    """
    j = _check_levels(p, pprime)
    rows: Dict[RowLabel, Dict[int, GaussianRational]] = {}
    for entry, targets in _multipliers(p, pprime, j).items():
        for target, multiplier in targets.items():
            terms = list(multiplier.items())
            for uexp in range(layout.U + 1):
                for zexp in range(layout.Z + 1):
                    col = layout.index(entry, uexp, zexp)
                    for (mu, mz), coeff in terms:
                        ti, tm = uexp + mu, zexp + mz
                        if tm <= ti:
                            continue
                        if u_cap is not None and ti > u_cap:
                            continue
                        if z_cap is not None and tm > z_cap:
                            continue
                        row = rows.setdefault(RowLabel(target, ti, tm), {})
                        total = row.get(col, ZERO) + coeff
                        if total:
                            row[col] = total
                        else:
                            row.pop(col, None)

    order = {name: idx for idx, name in enumerate(CONJUGATE_ENTRIES)}
    labels = sorted(
        (label for label, row in rows.items() if row),
        key=lambda r: (order[r.entry], r.uexp, r.zexp),
    )
    matrix = ExactMatrix.from_rows(layout.size, [rows[label] for label in labels])
    logger.debug(
        "Układ j=%d (U=%d, Z=%d, u_cap=%s, z_cap=%s): %d wierszy, %d kolumn",
        j,
        layout.U,
        layout.Z,
        u_cap,
        z_cap,
        matrix.rows,
        matrix.cols,
    )
    return LinearSystem(matrix, layout, labels)


def assemble_necessity_system(
    p: CanonicalForm, pprime: CanonicalForm, params: TruncationParams
) -> LinearSystem:
    """
    Układ konieczny: zabronione jednomiany z i <= U oraz m <= Mz = Z - 2j.

    Każdy taki wiersz zależy tylko od współczynników G z uexp <= U
    i zexp <= m + 2j <= Z, więc obcięcie dowolnego świadka go spełnia.
    """
    j = _check_levels(p, pprime)
    layout = GaugeLayout(params.U, params.Z)
    return _assemble(p, pprime, layout, u_cap=params.U, z_cap=params.z_cap(j))


def assemble_sufficiency_system(
    p: CanonicalForm, pprime: CanonicalForm, params: TruncationParams
) -> LinearSystem:
    """Układ dostateczny: wszystkie zabronione jednomiany dokładnego sprzężenia."""
    layout = GaugeLayout(params.U, params.Z)
    return _assemble(p, pprime, layout, u_cap=None, z_cap=None)


# =============================================================================
# CERTYFIKATY
# =============================================================================


def verify_certificate(cert: Certificate) -> bool:
    """
    Dokładna weryfikacja certyfikatu, bez żadnego obcięcia.

    Sprawdza: (a) G holomorficzne w (z, u), (b) wszystkie wpisy sprzężenia
    holomorficzne w (z^-1, zu), (c) q(G) != 0. Dla certyfikatu z level = k
    warunki (b) i (c) dotyczą wszystkiego modulo u^(k+1).

    Returns:
        True, gdy certyfikat dowodzi izomorfizmu
    """
    if not (cert.p.j == cert.pprime.j == cert.j):
        logger.debug("Certyfikat: niezgodne poziomy")
        return False
    gauge = cert.gauge
    for name, poly in gauge.entries().items():
        if any(z < 0 for _, z in poly.support()):
            logger.debug("Certyfikat: wpis %s ma ujemny wykładnik z", name)
            return False

    if cert.level is not None:
        gauge = gauge.truncate_u(cert.level)
    conj = conjugate(cert.p, cert.pprime, gauge)
    if not conj.is_v_holomorphic(cert.level):
        logger.debug("Certyfikat: sprzężenie nie jest holomorficzne w mapie V")
        return False
    q_value = gauge.det_at_origin()
    if not q_value:
        logger.debug("Certyfikat: wyznacznik w początku równy 0")
        return False

    # część u^0 wyznacznika musi być stała w z
    det_u0 = truncate_u(gauge.determinant(), 0)
    if det_u0 != BiLaurent.constant(q_value):
        logger.warning("Certyfikat: część u^0 det G nie jest stała: %s", det_u0)
        return False
    return True


def _issue_certificate(
    p: CanonicalForm,
    pprime: CanonicalForm,
    gauge: GaugeCandidate,
    params: Optional[TruncationParams] = None,
    seed: Optional[int] = None,
    level: Optional[int] = None,
) -> Certificate:
    cert = Certificate(p.j, p, pprime, gauge, params=params, seed=seed, level=level)
    if not verify_certificate(cert):
        raise CertificateError(f"Silnik zbudował certyfikat, który nie przechodzi weryfikacji: {p} ~ {pprime}")
    return cert


# =============================================================================
# DECYZJA
# =============================================================================


def _scalar_ratio(p: CanonicalForm, pprime: CanonicalForm) -> Optional[GaussianRational]:
    """lambda z p' = lambda p, o ile istnieje i jest niezerowa."""
    if p.is_zero() or pprime.is_zero() or p.p.support() != pprime.p.support():
        return None
    (u, z), first = next(p.p.items())
    ratio = pprime.p.coeff(u, z) / first
    return ratio if pprime.p == p.p.scale(ratio) else None


def _fast_path(
    p: CanonicalForm, pprime: CanonicalForm, params: TruncationParams
) -> Optional[CertifiedIso]:
    if p.p == pprime.p:
        logger.debug("decide_iso: p' = p, cechowanie identycznościowe")
        return CertifiedIso(_issue_certificate(p, pprime, GaugeCandidate.identity(), params))
    ratio = _scalar_ratio(p, pprime)
    if ratio is not None:
        logger.debug("decide_iso: p' = %s * p, cechowanie diag(lambda, 1)", ratio)
        gauge = GaugeCandidate.diagonal(ratio, ONE)
        return CertifiedIso(_issue_certificate(p, pprime, gauge, params))
    return None


def _decide_in_window(
    p: CanonicalForm,
    pprime: CanonicalForm,
    params: TruncationParams,
    u_cap: Optional[int] = None,
) -> Optional[Verdict]:
    """
    Jedna runda: układ konieczny, potem dostateczny.

    u_cap ogranicza wiersze obu układów do i <= u_cap (otoczenie formalne).

    Returns:
        Werdykt rozstrzygający albo None, gdy okno nie wystarcza
    """
    j = p.j
    layout = GaugeLayout(params.U, params.Z)
    form = layout.determinant_form()
    z_cap = params.z_cap(j)

    necessity = _assemble(p, pprime, layout, u_cap=params.U if u_cap is None else u_cap, z_cap=z_cap)
    check = quadratic_vanishes_on_span(form, nullspace(necessity.matrix))
    if check.vanishes:
        return CertifiedNonIso(U=params.U, Mz=z_cap)

    sufficiency = _assemble(p, pprime, layout, u_cap=u_cap, z_cap=None)
    check = quadratic_vanishes_on_span(form, nullspace(sufficiency.matrix))
    if check.vanishes:
        return None

    gauge = layout.vector_to_gauge(check.witness)
    cert = _issue_certificate(p, pprime, gauge, params, level=u_cap)
    return CertifiedIso(cert)


def decide_iso(
    p: CanonicalForm, pprime: CanonicalForm, params: Optional[TruncationParams] = None
) -> Verdict:
    """
    Rozstrzyga p ~ p' z certyfikatem.

    Args:
        p, pprime: Postaci kanoniczne na tym samym poziomie j
        params: Okno obcięcia (domyślnie U = 2j, Z = 4j)

    Returns:
        CertifiedIso (z certyfikatem), CertifiedNonIso(U, Mz) albo Undecided(U, Z)

    Raises:
        LevelMismatchError: gdy poziomy się różnią
    """
    j = _check_levels(p, pprime)
    params = (params or TruncationParams.default_for(j)).for_level(j)

    fast = _fast_path(p, pprime, params)
    if fast is not None:
        return fast

    current = params
    for round_no in range(params.deepening_cap + 1):
        verdict = _decide_in_window(p, pprime, current)
        if verdict is not None:
            logger.debug("decide_iso j=%d: %s w oknie (U=%d, Z=%d)", j, verdict.kind, current.U, current.Z)
            return verdict
        if round_no < params.deepening_cap:
            current = current.deepened()
            logger.info("decide_iso j=%d: pogłębiam okno do (U=%d, Z=%d)", j, current.U, current.Z)
    return Undecided(U=current.U, Z=current.Z)


# =============================================================================
# TRANSPORT ŚWIADKÓW WZDŁUŻ PHI
# =============================================================================


def transport_witness_up(cert: Certificate) -> Optional[Certificate]:
    """
    Przenosi świadka z (p, p') na (Phi(p), Phi(p')).

    G_bar = diag(u, u^-1) G diag(u^-1, u) = [[a, u^2 b], [u^-2 c, d]];
    sprzężenie przechodzi na [[alpha, v^2 beta], [v^-2 gamma, delta]], v = zu.

    Returns:
        Certyfikat na poziomie j+1 albo None, gdy u^2 nie dzieli c
    """
    if cert.level is not None:
        logger.warning("transport_witness_up: certyfikaty otoczenia formalnego nie są przenoszone")
        return None
    gauge = cert.gauge
    if gauge.c.u_order() < 2:
        logger.warning("transport_witness_up: warunek nie spełniony, u^2 nie dzieli c")
        return None
    lifted = GaugeCandidate(gauge.a, gauge.b.shift(2, 0), gauge.c.shift(-2, 0), gauge.d)
    return _issue_certificate(
        phi(cert.p),
        phi(cert.pprime),
        lifted,
        seed=cert.seed,
    )


def transport_witness_down(cert: Certificate) -> Optional[Certificate]:
    """
    Odwrotny kierunek: z (Phi(p), Phi(p')) na (p, p').

    G = [[a_bar, u^-2 b_bar], [u^2 c_bar, d_bar]].

    Returns:
        Certyfikat na poziomie j-1 albo None, gdy postaci nie leżą w obrazie
        lub u^2 nie dzieli b_bar
    """
    if cert.level is not None:
        return None
    source = phi_inverse(cert.p)
    target = phi_inverse(cert.pprime)
    if source is None or target is None:
        return None
    gauge = cert.gauge
    if gauge.b.u_order() < 2:
        logger.warning("transport_witness_down: warunek nie spełniony, u^2 nie dzieli b")
        return None
    lowered = GaugeCandidate(gauge.a, gauge.b.shift(-2, 0), gauge.c.shift(2, 0), gauge.d)
    return _issue_certificate(source, target, lowered, seed=cert.seed)


# =============================================================================
# ROZSZCZEPIENIE W OTOCZENIU FORMALNYM
# =============================================================================


def decide_splitting(
    p: CanonicalForm, k: int, params: Optional[TruncationParams] = None
) -> Verdict:
    """
    Czy obcięcie p do u^k jest równoważne postaci zerowej modulo u^(k+1).

    Niewiadome i wiersze są ograniczone do uexp <= k; pogłębiane jest tylko Z.
    """
    if k < 0:
        raise ValueError(f"Poziom otoczenia formalnego musi być >= 0, otrzymano {k}")
    j = p.j
    base = (params or TruncationParams.default_for(j)).for_level(j)
    truncated = CanonicalForm(j, truncate_u(p.p, k))
    zero = CanonicalForm.zero(j)

    current = TruncationParams(U=k, Z=base.Z, deepening_cap=base.deepening_cap)
    if truncated.is_zero():
        cert = _issue_certificate(truncated, zero, GaugeCandidate.identity(), current, level=k)
        return CertifiedIso(cert)

    for round_no in range(base.deepening_cap + 1):
        verdict = _decide_in_window(truncated, zero, current, u_cap=k)
        if verdict is not None:
            return verdict
        if round_no < base.deepening_cap:
            current = TruncationParams(k, current.Z + DEEPENING_STEP_Z, current.deepening_cap)
    return Undecided(U=k, Z=current.Z)


def splits_at_level(p: CanonicalForm, k: int, params: Optional[TruncationParams] = None) -> bool:
    """
    True, gdy wiązka obcięta do k-tego otoczenia formalnego jest trywialnym
    rozszerzeniem O(j) + O(-j) (z certyfikatem).
    """
    verdict = decide_splitting(p, k, params)
    if isinstance(verdict, Undecided):
        logger.warning("splits_at_level: nierozstrzygnięte dla %s, k=%d", p, k)
    return isinstance(verdict, CertifiedIso)


# =============================================================================
# PRÓBKOWANIE ORBIT
# =============================================================================


def _random_unit_in_v(rng: random.Random, degree: int, bound: int) -> BiLaurent:
    """Wielomian w v = zu o niezerowym wyrazie wolnym."""
    constant = ZERO
    while not constant:
        constant = GaussianRational(random_rational(rng, bound))
    terms = {(0, 0): constant}
    for k in range(1, degree + 1):
        terms[(k, k)] = GaussianRational(random_rational(rng, bound))
    return BiLaurent(terms)


def orbit_b_window(j: int) -> Tuple[int, int]:
    """
    Okno (uexp, zexp) niewiadomych b w próbkowaniu orbit.

    Reszta z^j (d p' - a p) ma uexp <= 2j - 2 + D i zexp <= 2j - 1 + D,
    gdzie D = ORBIT_GAUGE_DEGREE; okno nie zależy od okna decyzji.
    """
    return 2 * j - 2 + ORBIT_GAUGE_DEGREE, 2 * j - 1 + 2 * ORBIT_GAUGE_DEGREE


def _orbit_sample_once(
    p: CanonicalForm,
    seed: int,
    attempt: int,
    params: TruncationParams,
    diagonal: Optional[Tuple[BiLaurent, BiLaurent]],
) -> Tuple[CanonicalForm, Certificate]:
    j = p.j
    if diagonal is None:
        rng = random.Random(f"orbit:{j}:{seed}:{attempt}")
        a = _random_unit_in_v(rng, ORBIT_GAUGE_DEGREE, DEFAULT_COEFF_BOUND)
        d = _random_unit_in_v(rng, ORBIT_GAUGE_DEGREE, DEFAULT_COEFF_BOUND)
    else:
        a, d = diagonal

    # niewiadome: p' nad window(j), potem b nad oknem rodziny cechowań
    indices = window(j)
    offset = len(indices)
    b_u, b_z = orbit_b_window(j)
    z_span = b_z + 1
    cols = offset + (b_u + 1) * z_span

    # beta = z^2j b + z^j d p' - z^j a p; zabronione jednomiany muszą zniknąć
    rows: Dict[Tuple[int, int], Dict[int, GaussianRational]] = {}
    rhs: Dict[Tuple[int, int], GaussianRational] = {}

    def add(target: Tuple[int, int], col: int, value: GaussianRational) -> None:
        if target[1] <= target[0]:
            return
        row = rows.setdefault(target, {})
        row[col] = row.get(col, ZERO) + value

    for col, idx in enumerate(indices):
        for (mu, mz), value in d.items():
            add((idx.i + mu, idx.l + mz + j), col, value)
    for uexp in range(b_u + 1):
        for zexp in range(b_z + 1):
            add((uexp, zexp + 2 * j), offset + uexp * z_span + zexp, ONE)
    for (mu, mz), value in (BiLaurent.monomial(0, j) * a * p.p).items():
        if mz > mu:
            rows.setdefault((mu, mz), {})
            rhs[(mu, mz)] = value

    labels = sorted(rows)
    matrix = ExactMatrix.from_rows(cols, [rows[label] for label in labels])
    solution = solve(matrix, [rhs.get(label, ZERO) for label in labels])
    if solution is None:
        raise OrbitSampleError(
            f"Brak próbki orbity dla {p} (ziarno {seed}, próba {attempt}): układ sprzeczny"
        )

    pprime = from_coefficient_vector(j, solution[:offset])
    b = BiLaurent(
        {
            (uexp, zexp): solution[offset + uexp * z_span + zexp]
            for uexp in range(b_u + 1)
            for zexp in range(b_z + 1)
        }
    )
    gauge = GaugeCandidate(a, b, BiLaurent.zero(), d)
    return pprime, _issue_certificate(p, pprime, gauge, params, seed=seed)


def orbit_sample(
    p: CanonicalForm,
    seed: int,
    params: Optional[TruncationParams] = None,
    diagonal: Optional[Tuple[BiLaurent, BiLaurent]] = None,
) -> Tuple[CanonicalForm, Certificate]:
    """
    Losuje p' ~ p z certyfikatem.

    Rodzina cechowań: c = 0, a i d wielomiany w v = zu o niezerowych wyrazach
    wolnych, b dowolne; p' nad window(j) i b wyznacza dokładny układ liniowy.

    Args:
        p: Postać źródłowa
        seed: Ziarno (deterministyczne)
        params: Okno zapisywane w certyfikacie (b ma własne okno, orbit_b_window)
        diagonal: Opcjonalnie ustalone (a, d) zamiast losowych

    Returns:
        (p', certyfikat p ~ p')

    Raises:
        OrbitSampleError: brak próbki po wyczerpaniu limitu prób
    """
    params = (params or TruncationParams.default_for(p.j)).for_level(p.j)
    if diagonal is not None:
        probe = GaugeCandidate(diagonal[0], BiLaurent.zero(), BiLaurent.zero(), diagonal[1])
        if not probe.det_at_origin():
            raise GaugeError("Wyrazy wolne a i d muszą być niezerowe")

    budget = get_int_setting("ORBIT_RETRY_BUDGET", ORBIT_RETRY_BUDGET)
    for attempt in Retrying(
        stop=stop_after_attempt(budget),
        retry=retry_if_exception_type(OrbitSampleError),
        reraise=True,
    ):
        with attempt:
            return _orbit_sample_once(p, seed, attempt.retry_state.attempt_number, params, diagonal)
    raise OrbitSampleError(f"Nie znaleziono próbki orbity dla {p}")  # pragma: no cover
