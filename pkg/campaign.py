"""
Kampanie weryfikacyjne zanurzenia Phi_j.

Każdy suite rozkłada się na niezależne zadania (własne ziarno, własne dane
wejściowe), które mogą być liczone równolegle; raport składa jeden proces
w stałej kolejności zadań, więc wynik nie zależy od liczby workerów.
"""

import logging
import multiprocessing
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from canonical import CanonicalForm, in_image, phi, phi_inverse, random_form
from config import DEFAULT_COEFF_BOUND, INJECTIVE_DRAW_FACTOR, SUITES
from helpers import verdict_histogram
from iso_engine import (
    Certificate,
    CertifiedIso,
    CertifiedNonIso,
    TruncationParams,
    Verdict,
    decide_iso,
    decide_splitting,
    orbit_sample,
    transport_witness_up,
    verify_certificate,
)

logger = logging.getLogger(__name__)

SATURATION_LEVEL = 2


# =============================================================================
# KONFIGURACJA I RAPORT
# =============================================================================


@dataclass(frozen=True)
class CampaignConfig:
    """Parametry jednej kampanii. params=None oznacza domyślne okna dla każdego poziomu."""

    j: int
    pairs: int
    seed: int
    out: Path
    suites: Tuple[str, ...] = SUITES
    params: Optional[TruncationParams] = None
    bound: int = DEFAULT_COEFF_BOUND
    gaussian: bool = True
    workers: int = 1

    def validate(self) -> None:
        """
        Raises:
            ValueError: pusta lista suite'ów, nieznany suite, pairs < 1, j < 1
        """
        if self.j < 1:
            raise ValueError(f"Poziom j musi być >= 1, otrzymano {self.j}")
        if self.pairs < 1:
            raise ValueError(f"pairs musi być >= 1, otrzymano {self.pairs}")
        if not self.suites:
            raise ValueError("Lista suite'ów nie może być pusta")
        unknown = [s for s in self.suites if s not in SUITES]
        if unknown:
            raise ValueError(f"Nieznane suite'y: {unknown} (dostępne: {', '.join(SUITES)})")
        if self.workers < 1:
            raise ValueError(f"workers musi być >= 1, otrzymano {self.workers}")
        if self.out.exists() and not self.out.is_dir():
            raise ValueError(f"Ścieżka wyjściowa {self.out} istnieje i nie jest katalogiem")

    def params_for(self, level: int) -> TruncationParams:
        if self.params is None:
            return TruncationParams.default_for(level)
        return self.params.for_level(level)

    def to_record(self) -> Dict[str, Any]:
        return {
            "j": self.j,
            "pairs": self.pairs,
            "seed": self.seed,
            "suites": list(self.suites),
            "params": self.params.to_record() if self.params else None,
            "deepening_cap": self.params.deepening_cap if self.params else None,
            "bound": self.bound,
            "gaussian": self.gaussian,
        }


@dataclass
class SuiteResult:
    name: str
    passed: int = 0
    failed: int = 0
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def to_record(self) -> Dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "failed": self.failed, "ok": self.ok, "note": self.note}


@dataclass
class CampaignReport:
    config: CampaignConfig
    suites: Dict[str, SuiteResult] = field(default_factory=dict)
    rows: List[Dict[str, Any]] = field(default_factory=list)
    certificates: List[Dict[str, Any]] = field(default_factory=list)
    timings: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(result.ok for result in self.suites.values())

    @property
    def histogram(self) -> Dict[str, int]:
        return verdict_histogram(row["verdict"] for row in self.rows if row["verdict"])

    @property
    def certificate_count(self) -> int:
        return len(self.certificates)

    @property
    def windows_used(self) -> List[List[int]]:
        windows = {(row["U"], row["Z"]) for row in self.rows if row["U"] is not None}
        return [list(window) for window in sorted(windows)]

    def to_record(self) -> Dict[str, Any]:
        """Zawartość report.json (bez czasów, które trafiają do timings.jsonl)."""
        return {
            "config": self.config.to_record(),
            "suites": {name: result.to_record() for name, result in self.suites.items()},
            "histogram": self.histogram,
            "certificate_count": self.certificate_count,
            "windows_used": self.windows_used,
            "all_passed": self.all_passed,
        }


# =============================================================================
# ZADANIA
# =============================================================================


@dataclass(frozen=True)
class Task:
    suite: str
    index: int
    config: CampaignConfig


@dataclass
class TaskOutcome:
    row: Dict[str, Any]
    certificates: List[Dict[str, Any]] = field(default_factory=list)
    seconds: float = 0.0
    accepted: bool = True


def task_seed(seed: int, suite: str, index: int, slot: int = 0) -> int:
    """Ziarno zadania niezależne od procesu (crc32, nie hash())."""
    return zlib.crc32(f"{seed}:{suite}:{index}:{slot}".encode("utf-8"))


def _row(
    task: Task,
    level: int,
    verdict: Optional[Verdict],
    passed: bool,
    certificate_id: Optional[str] = None,
    note: str = "",
) -> Dict[str, Any]:
    U = Z = None
    if verdict is not None:
        record = verdict.to_record()
        U = record["U"]
        Z = record["Mz"] + 2 * level if isinstance(verdict, CertifiedNonIso) else record["Z"]
    return {
        "suite": task.suite,
        "index": task.index,
        "j": level,
        "verdict": verdict.kind if verdict is not None else None,
        "U": U,
        "Z": Z,
        "passed": passed,
        "certificate_id": certificate_id,
        "note": note,
    }


def _certificate_record(cert_id: str, cert: Certificate) -> Dict[str, Any]:
    record = cert.to_record()
    record["id"] = cert_id
    return record


def _random_pair(task: Task, level: int) -> Tuple[CanonicalForm, CanonicalForm]:
    cfg = task.config
    p = random_form(level, task_seed(cfg.seed, task.suite, task.index, 0), cfg.bound, cfg.gaussian)
    q = random_form(level, task_seed(cfg.seed, task.suite, task.index, 1), cfg.bound, cfg.gaussian)
    return p, q


def _welldef(task: Task) -> TaskOutcome:
    cfg = task.config
    seed = task_seed(cfg.seed, task.suite, task.index)
    p = random_form(cfg.j, seed, cfg.bound, cfg.gaussian)
    q, cert = orbit_sample(p, seed, cfg.params_for(cfg.j))

    verdict = decide_iso(phi(p), phi(q), cfg.params_for(cfg.j + 1))
    transported = transport_witness_up(cert)
    notes = []
    if transported is None:
        notes.append("brak transportu świadka")
    if not isinstance(verdict, CertifiedIso):
        notes.append("obrazy nie są CertifiedIso")
        return TaskOutcome(_row(task, cfg.j + 1, verdict, False, note="; ".join(notes)))

    cert_id = f"{task.suite}-{task.index:04d}"
    passed = verify_certificate(verdict.certificate)
    if transported is not None and not verify_certificate(transported):
        notes.append("przeniesiony świadek nie przechodzi weryfikacji")
        passed = False
    return TaskOutcome(
        _row(task, cfg.j + 1, verdict, passed, cert_id, "; ".join(notes)),
        [_certificate_record(cert_id, verdict.certificate)],
    )


def _injective(task: Task) -> TaskOutcome:
    cfg = task.config
    p, q = _random_pair(task, cfg.j)
    base = decide_iso(p, q, cfg.params_for(cfg.j))
    if not isinstance(base, CertifiedNonIso):
        return TaskOutcome(_row(task, cfg.j, base, True, note="para odrzucona"), accepted=False)
    image = decide_iso(phi(p), phi(q), cfg.params_for(cfg.j + 1))
    passed = isinstance(image, CertifiedNonIso)
    return TaskOutcome(_row(task, cfg.j + 1, image, passed, note="" if passed else "obrazy nie są CertifiedNonIso"))


def _saturation(task: Task) -> TaskOutcome:
    cfg = task.config
    seed = task_seed(cfg.seed, task.suite, task.index)
    image = phi(random_form(cfg.j, seed, cfg.bound, cfg.gaussian))
    q2, _ = orbit_sample(image, seed, cfg.params_for(cfg.j + 1))

    verdict = decide_splitting(q2, SATURATION_LEVEL, cfg.params_for(cfg.j + 1))
    representative = phi_inverse(q2)
    notes = []
    if not isinstance(verdict, CertifiedIso):
        notes.append(f"brak rozszczepienia na poziomie {SATURATION_LEVEL}")
    if representative is None:
        notes.append("brak reprezentanta w obrazie")
    elif phi(representative) != q2:
        notes.append("phi(phi_inverse(q)) != q")
    passed = not notes

    if isinstance(verdict, CertifiedIso):
        cert_id = f"{task.suite}-{task.index:04d}"
        return TaskOutcome(
            _row(task, cfg.j + 1, verdict, passed, cert_id, "; ".join(notes)),
            [_certificate_record(cert_id, verdict.certificate)],
        )
    return TaskOutcome(_row(task, cfg.j + 1, verdict, passed, note="; ".join(notes)))


def _closedness(task: Task) -> TaskOutcome:
    cfg = task.config
    p = random_form(cfg.j, task_seed(cfg.seed, task.suite, task.index), cfg.bound, cfg.gaussian)
    image = phi(p)
    violations = sum(1 for u, _ in image.p.support() if u in (1, 2))
    passed = in_image(image) and violations == 0 and phi_inverse(image) == p
    note = "" if passed else f"{violations} naruszeń równań i w {{1, 2}}"
    return TaskOutcome(_row(task, cfg.j + 1, None, passed, note=note))


def _stabilization(task: Task) -> TaskOutcome:
    cfg = task.config
    params = cfg.params_for(cfg.j)
    if task.index % 2 == 0:
        p = random_form(cfg.j, task_seed(cfg.seed, task.suite, task.index), cfg.bound, cfg.gaussian)
        q, _ = orbit_sample(p, task_seed(cfg.seed, task.suite, task.index), params)
    else:
        p, q = _random_pair(task, cfg.j)
    before = decide_iso(p, q, params)
    after = decide_iso(p, q, params.deepened())
    passed = before.kind == after.kind
    note = "" if passed else f"{before.kind} -> {after.kind}"
    return TaskOutcome(_row(task, cfg.j, before, passed, note=note))


def _monotonicity(task: Task) -> TaskOutcome:
    cfg = task.config
    params = cfg.params_for(cfg.j)
    p, q = _random_pair(task, cfg.j)
    verdict = decide_iso(p, q, params)
    if not isinstance(verdict, CertifiedNonIso):
        return TaskOutcome(_row(task, cfg.j, verdict, True, note="nie dotyczy"))
    once = params.deepened()
    flips = [
        larger for larger in (once, once.deepened())
        if not isinstance(decide_iso(p, q, larger), CertifiedNonIso)
    ]
    note = "" if not flips else f"zmiana werdyktu w oknie (U={flips[0].U}, Z={flips[0].Z})"
    return TaskOutcome(_row(task, cfg.j, verdict, not flips, note=note))


SUITE_RUNNERS: Dict[str, Callable[[Task], TaskOutcome]] = {
    "welldef": _welldef,
    "injective": _injective,
    "saturation": _saturation,
    "closedness": _closedness,
    "stabilization": _stabilization,
    "monotonicity": _monotonicity,
}


def run_task(task: Task) -> TaskOutcome:
    """Wykonuje jedno zadanie i mierzy jego czas (funkcja modułowa, do pickle)."""
    started = time.perf_counter()
    try:
        outcome = SUITE_RUNNERS[task.suite](task)
    except Exception as exc:
        logger.exception("Zadanie %s #%d przerwane wyjątkiem", task.suite, task.index)
        note = f"wyjątek {type(exc).__name__}: {exc}"
        outcome = TaskOutcome(_row(task, task.config.j, None, False, note=note))
    outcome.seconds = time.perf_counter() - started
    return outcome


def _map_tasks(tasks: Sequence[Task], workers: int) -> List[TaskOutcome]:
    """Mapowanie zachowujące kolejność; workers > 1 uruchamia pulę procesów."""
    if workers <= 1 or len(tasks) <= 1:
        return [run_task(task) for task in tasks]
    with multiprocessing.Pool(processes=min(workers, len(tasks))) as pool:
        return list(pool.imap(run_task, tasks))


# =============================================================================
# URUCHAMIANIE KAMPANII
# =============================================================================


def _suite_outcomes(config: CampaignConfig, suite: str) -> Tuple[List[TaskOutcome], str]:
    if suite != "injective":
        tasks = [Task(suite, index, config) for index in range(config.pairs)]
        return _map_tasks(tasks, config.workers), ""

    # losuj partiami, aż znajdzie się `pairs` par CertifiedNonIso
    accepted: List[TaskOutcome] = []
    drawn = 0
    limit = config.pairs * INJECTIVE_DRAW_FACTOR
    while len(accepted) < config.pairs and drawn < limit:
        batch = [Task(suite, index, config) for index in range(drawn, min(drawn + config.pairs, limit))]
        drawn += len(batch)
        accepted.extend(o for o in _map_tasks(batch, config.workers) if o.accepted)
    accepted = accepted[: config.pairs]
    note = ""
    if len(accepted) < config.pairs:
        note = f"znaleziono {len(accepted)}/{config.pairs} par CertifiedNonIso w {drawn} losowaniach"
        logger.warning("injective: %s", note)
    return accepted, note


def run_campaign(config: CampaignConfig) -> CampaignReport:
    """
    Wykonuje wybrane suite'y i składa raport (bez zapisu na dysk).

    Porażki asercji suite'ów są danymi w raporcie, nie wyjątkami.

    Raises:
        ValueError: niepoprawna konfiguracja
    """
    config.validate()
    report = CampaignReport(config=config)
    for suite in SUITES:
        if suite not in config.suites:
            continue
        logger.info("Suite %s: j=%d, pairs=%d", suite, config.j, config.pairs)
        outcomes, note = _suite_outcomes(config, suite)
        result = SuiteResult(name=suite, note=note)
        for outcome in outcomes:
            report.rows.append(outcome.row)
            report.certificates.extend(outcome.certificates)
            report.timings.append(
                {"suite": suite, "index": outcome.row["index"], "seconds": round(outcome.seconds, 6)}
            )
            if outcome.row["passed"]:
                result.passed += 1
            else:
                result.failed += 1
        report.suites[suite] = result
        logger.info("Suite %s: %d zaliczonych, %d niezaliczonych", suite, result.passed, result.failed)
    return report
