"""
Wiersz poleceń biblioteki Moduli Wiązek.

Podkomendy: gen, iso, phi, verify, orbit, campaign, report, crosscheck.
Wszystkie obiekty są czytane i pisane jako JSONL (jeden rekord na linię).
"""

import functools
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, Optional, Tuple

import click
from dotenv import load_dotenv

from campaign import CampaignConfig, run_campaign, task_seed
from canonical import CanonicalForm, phi, phi_inverse, random_form
from config import CERTIFICATES_FILE, DEFAULT_COEFF_BOUND, SUITE_LABELS, SUITES
from export_utils import (
    render_report_csv,
    render_report_excel,
    reverify_certificates,
    write_campaign_artifacts,
)
from float_check import cross_check_float
from helpers import RecordError, dump_record, format_verdict_line, iter_jsonl
from iso_engine import (
    CertificateError,
    OrbitSampleError,
    TruncationParams,
    Undecided,
    decide_iso,
    orbit_sample,
)

logger = logging.getLogger(__name__)

EXIT_FAILURE = 1
EXIT_UNDECIDED = 2


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def handle_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """Błędy danych wejściowych, I/O i silnika jako jednolinijkowy komunikat z kodem 1."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except (ValueError, OSError) as exc:
            click.echo(f"❌ {exc}", err=True)
            sys.exit(EXIT_FAILURE)
        except (OrbitSampleError, CertificateError) as exc:
            logger.debug("Błąd silnika", exc_info=True)
            click.echo(f"❌ Błąd silnika: {exc}", err=True)
            sys.exit(EXIT_FAILURE)

    return wrapper


def _build_params(j: int, U: Optional[int], Z: Optional[int], cap: Optional[int]) -> Optional[TruncationParams]:
    """None, gdy nie podano żadnej opcji okna (domyślne okno dla każdego poziomu)."""
    if U is None and Z is None and cap is None:
        return None
    base = TruncationParams.default_for(j)
    return TruncationParams(
        U=base.U if U is None else U,
        Z=base.Z if Z is None else Z,
        deepening_cap=base.deepening_cap if cap is None else cap,
    )


def _emit(records: Iterable[Dict[str, Any]], output: Optional[str]) -> int:
    count = 0
    handle = open(output, "w", encoding="utf-8", newline="\n") if output else None
    try:
        for record in records:
            line = dump_record(record)
            if handle:
                handle.write(line + "\n")
            else:
                click.echo(line)
            count += 1
    finally:
        if handle:
            handle.close()
    return count


def _parse_form(text: str) -> CanonicalForm:
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RecordError(f"Niepoprawny JSON postaci: {exc.msg}") from exc
    return CanonicalForm.from_record(record)


def _read_forms(path: str) -> Iterable[CanonicalForm]:
    for record in iter_jsonl(path):
        yield CanonicalForm.from_record(record)


def _read_pairs(path: str) -> Iterable[Tuple[CanonicalForm, CanonicalForm]]:
    for record in iter_jsonl(path):
        if "p" not in record or "pprime" not in record:
            raise RecordError(f"{path}: rekord pary musi mieć klucze 'p' i 'pprime'")
        yield CanonicalForm.from_record(record["p"]), CanonicalForm.from_record(record["pprime"])


window_options = [
    click.option("--U", "U", type=int, default=None, help="Obcięcie wykładnika u niewiadomych (domyślnie 2j)"),
    click.option("--Z", "Z", type=int, default=None, help="Obcięcie wykładnika z niewiadomych (domyślnie 4j)"),
    click.option("--cap", type=int, default=None, help="Limit kroków pogłębiania (domyślnie 2)"),
]


def with_window_options(func: Callable[..., Any]) -> Callable[..., Any]:
    for option in reversed(window_options):
        func = option(func)
    return func


# =============================================================================
# GRUPA
# =============================================================================


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Logi DEBUG na stderr")
def cli(verbose: bool) -> None:
    """Moduli wiązek rzędu 2 na rozdmuchanej płaszczyźnie: postaci kanoniczne i Phi_j."""
    load_dotenv()
    _configure_logging(verbose)


@cli.command()
@click.option("--j", "j", type=int, required=True, help="Poziom rozszczepienia")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--count", type=int, default=1, show_default=True)
@click.option("--bound", type=int, default=DEFAULT_COEFF_BOUND, show_default=True)
@click.option("--real", is_flag=True, help="Tylko współczynniki wymierne (bez części urojonych)")
@click.option("--out", "output", type=click.Path(dir_okay=False), default=None)
@handle_errors
def gen(j: int, seed: int, count: int, bound: int, real: bool, output: Optional[str]) -> None:
    """Losowe postaci kanoniczne (deterministyczne względem --seed)."""
    records = (random_form(j, seed + k, bound, gaussian=not real).to_record() for k in range(count))
    written = _emit(records, output)
    if output:
        click.echo(f"✅ Zapisano {written} postaci do {output}", err=True)


@cli.command()
@click.argument("pairs_file", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--p", "p_text", default=None, help="Postać p jako rekord JSON")
@click.option("--pprime", "pprime_text", default=None, help="Postać p' jako rekord JSON")
@with_window_options
@click.option("--fail-on-undecided", is_flag=True, help="Kod wyjścia 2, gdy któryś werdykt jest Undecided")
@click.option("--out", "output", type=click.Path(dir_okay=False), default=None)
@handle_errors
def iso(
    pairs_file: Optional[str],
    p_text: Optional[str],
    pprime_text: Optional[str],
    U: Optional[int],
    Z: Optional[int],
    cap: Optional[int],
    fail_on_undecided: bool,
    output: Optional[str],
) -> None:
    """Rozstrzyga izomorfizm par (plik JSONL {"p": ..., "pprime": ...} lub --p/--pprime)."""
    if pairs_file:
        pairs = list(_read_pairs(pairs_file))
    elif p_text and pprime_text:
        pairs = [(_parse_form(p_text), _parse_form(pprime_text))]
    else:
        raise click.UsageError("Podaj PAIRS_FILE albo obie opcje --p i --pprime")

    undecided = 0
    records = []
    for p, pprime in pairs:
        verdict = decide_iso(p, pprime, _build_params(p.j, U, Z, cap))
        record = {"j": p.j, **verdict.to_record()}
        records.append(record)
        undecided += isinstance(verdict, Undecided)
        click.echo(format_verdict_line(record), err=True)
    _emit(records, output)

    if fail_on_undecided and undecided:
        click.echo(f"⚠️ {undecided} werdyktów nierozstrzygniętych", err=True)
        sys.exit(EXIT_UNDECIDED)


@cli.command("phi")
@click.argument("forms_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--inverse", is_flag=True, help="Odwrotność Phi (postaci spoza obrazu są pomijane)")
@click.option("--out", "output", type=click.Path(dir_okay=False), default=None)
@handle_errors
def phi_command(forms_file: str, inverse: bool, output: Optional[str]) -> None:
    """Stosuje zanurzenie Phi_j lub jego częściową odwrotność."""
    skipped = 0
    records = []
    for form in _read_forms(forms_file):
        result = phi_inverse(form) if inverse else phi(form)
        if result is None:
            skipped += 1
            logger.warning("Postać %s nie leży w obrazie Phi", form)
            continue
        records.append(result.to_record())
    _emit(records, output)
    if skipped:
        click.echo(f"❌ Pominięto {skipped} postaci spoza obrazu Phi", err=True)
        sys.exit(EXIT_FAILURE)


@cli.command()
@click.argument("certificates_file", type=click.Path(exists=True, dir_okay=False))
@handle_errors
def verify(certificates_file: str) -> None:
    """Weryfikuje certyfikaty z pliku JSONL (bez ponownego liczenia decyzji)."""
    summary = reverify_certificates(certificates_file)
    if summary.ok:
        click.echo(f"✅ Zweryfikowano {summary.verified}/{summary.total} certyfikatów")
        return
    click.echo(
        f"❌ {len(summary.failed_ids)} z {summary.total} certyfikatów nie przechodzi weryfikacji: "
        + ", ".join(summary.failed_ids),
        err=True,
    )
    sys.exit(EXIT_FAILURE)


@cli.command()
@click.argument("forms_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--count", type=int, default=1, show_default=True)
@with_window_options
@click.option("--out", "output", type=click.Path(dir_okay=False), default=None)
@handle_errors
def orbit(
    forms_file: str,
    seed: int,
    count: int,
    U: Optional[int],
    Z: Optional[int],
    cap: Optional[int],
    output: Optional[str],
) -> None:
    """Losuje postaci równoważne z certyfikatami."""
    records = []
    for index, form in enumerate(_read_forms(forms_file)):
        params = _build_params(form.j, U, Z, cap)
        for k in range(count):
            pprime, cert = orbit_sample(form, task_seed(seed, "orbit", index, k), params)
            records.append({"form": pprime.to_record(), "certificate": cert.to_record()})
    _emit(records, output)


@cli.command()
@click.option("--j", "j", type=int, required=True, help="Poziom źródłowy Phi_j")
@click.option("--pairs", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@with_window_options
@click.option(
    "--suites",
    default=",".join(SUITES),
    show_default=True,
    help="Lista suite'ów oddzielona przecinkami",
)
@click.option("--out", "out", type=click.Path(file_okay=False), required=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--bound", type=int, default=DEFAULT_COEFF_BOUND, show_default=True)
@click.option("--real", is_flag=True, help="Tylko współczynniki wymierne")
@handle_errors
def campaign(
    j: int,
    pairs: int,
    seed: int,
    U: Optional[int],
    Z: Optional[int],
    cap: Optional[int],
    suites: str,
    out: str,
    workers: int,
    bound: int,
    real: bool,
) -> None:
    """Uruchamia suite'y weryfikacyjne Phi_j i zapisuje raport."""
    config = CampaignConfig(
        j=j,
        pairs=pairs,
        seed=seed,
        out=Path(out),
        suites=tuple(s.strip() for s in suites.split(",") if s.strip()),
        params=_build_params(j, U, Z, cap),
        bound=bound,
        gaussian=not real,
        workers=workers,
    )
    report = run_campaign(config)
    write_campaign_artifacts(report, config.out)

    for name, result in report.suites.items():
        icon = "✅" if result.ok else "❌"
        click.echo(f"{icon} {SUITE_LABELS.get(name, name)}: {result.passed} zaliczonych, {result.failed} niezaliczonych")
    click.echo(f"Certyfikaty: {report.certificate_count}; histogram: {report.histogram}")
    if not report.all_passed:
        sys.exit(EXIT_FAILURE)


@cli.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--xlsx", is_flag=True, help="Dodatkowo arkusz Excel")
@click.option("--reverify", is_flag=True, help="Ponownie zweryfikuj zapisane certyfikaty")
@handle_errors
def report(directory: str, xlsx: bool, reverify: bool) -> None:
    """Renderuje zapisane wyniki kampanii do CSV (i opcjonalnie Excel)."""
    csv_path = render_report_csv(directory)
    click.echo(f"✅ CSV: {csv_path}")
    if xlsx:
        click.echo(f"✅ Excel: {render_report_excel(directory)}")
    if reverify:
        summary = reverify_certificates(Path(directory) / CERTIFICATES_FILE)
        if not summary.ok:
            click.echo(f"❌ Niezweryfikowane certyfikaty: {', '.join(summary.failed_ids)}", err=True)
            sys.exit(EXIT_FAILURE)
        click.echo(f"✅ Zweryfikowano {summary.verified}/{summary.total} certyfikatów")


@cli.command()
@click.option("--j", "j", type=int, required=True)
@click.option("--pairs", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@with_window_options
@click.option("--bound", type=int, default=DEFAULT_COEFF_BOUND, show_default=True)
@click.option("--out", "output", type=click.Path(dir_okay=False), default=None)
@handle_errors
def crosscheck(
    j: int,
    pairs: int,
    seed: int,
    U: Optional[int],
    Z: Optional[int],
    cap: Optional[int],
    bound: int,
    output: Optional[str],
) -> None:
    """Porównuje silnik dokładny z oracle'm zmiennoprzecinkowym na losowych parach."""
    params = _build_params(j, U, Z, cap)
    records = []
    for index in range(pairs):
        p = random_form(j, task_seed(seed, "crosscheck", index, 0), bound)
        pprime = random_form(j, task_seed(seed, "crosscheck", index, 1), bound)
        records.append({"index": index, **cross_check_float(p, pprime, params, seed=index).to_record()})
    _emit(records, output)

    agreed = sum(record["agrees"] for record in records)
    icon = "✅" if agreed == len(records) else "❌"
    click.echo(f"{icon} Zgodność: {agreed}/{len(records)}", err=True)
    if agreed != len(records):
        sys.exit(EXIT_FAILURE)


if __name__ == "__main__":
    cli()
