"""
Narzędzia do eksportu wyników kampanii (JSON, JSONL, CSV, Excel).

Artefakty kampanii są zapisywane deterministycznie (posortowane klucze,
stała kolejność wierszy); czasy wykonania trafiają wyłącznie do
timings.jsonl. CSV i Excel są renderowane z zapisanych plików, bez
ponownego liczenia decyzji.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import pandas as pd
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.utils import get_column_letter
from openpyxl.worksheet.worksheet import Worksheet

from campaign import CampaignReport
from config import (
    CERTIFICATES_FILE,
    CSV_FILE,
    EXCEL_COLORS,
    EXCEL_COLUMN_WIDTHS,
    EXCEL_FILE,
    REPORT_CSV_COLUMNS,
    REPORT_FILE,
    ROWS_FILE,
    SUITE_LABELS,
    TIMINGS_FILE,
    VERDICT_LABELS,
    get_color_for_pass_rate,
)
from helpers import RecordError, iter_jsonl, read_jsonl, write_jsonl
from iso_engine import Certificate, verify_certificate

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


# =============================================================================
# DATACLASS DLA STYLÓW EXCEL
# =============================================================================


def _solid(color: str) -> PatternFill:
    return PatternFill(start_color=color, end_color=color, fill_type="solid")


@dataclass
class ExcelStyles:
    """
    Centralizuje wszystkie style Excel w jednym miejscu.

    Używane do formatowania nagłówków, danych i kolorowania wyników.
    """

    header_font: Font = field(
        default_factory=lambda: Font(
            name="Calibri", size=11, bold=True, color=EXCEL_COLORS["header_font"]
        )
    )
    header_fill: PatternFill = field(default_factory=lambda: _solid(EXCEL_COLORS["header_bg"]))
    header_alignment: Alignment = field(
        default_factory=lambda: Alignment(horizontal="center", vertical="center")
    )

    data_font: Font = field(default_factory=lambda: Font(name="Calibri", size=10))
    data_alignment_left: Alignment = field(
        default_factory=lambda: Alignment(horizontal="left", vertical="center")
    )
    data_alignment_center: Alignment = field(
        default_factory=lambda: Alignment(horizontal="center", vertical="center")
    )

    thin_border: Border = field(
        default_factory=lambda: Border(
            left=Side(style="thin", color=EXCEL_COLORS["border"]),
            right=Side(style="thin", color=EXCEL_COLORS["border"]),
            top=Side(style="thin", color=EXCEL_COLORS["border"]),
            bottom=Side(style="thin", color=EXCEL_COLORS["border"]),
        )
    )

    color_red: PatternFill = field(default_factory=lambda: _solid(EXCEL_COLORS["red_fill"]))
    color_green: PatternFill = field(default_factory=lambda: _solid(EXCEL_COLORS["green_fill"]))

    def get_fill_for_passed(self, passed: object) -> Optional[PatternFill]:
        """Zielony dla zaliczonych, czerwony dla niezaliczonych, brak dla pustych."""
        if passed is None or (isinstance(passed, float) and pd.isna(passed)):
            return None
        return self.color_green if bool(passed) else self.color_red


# =============================================================================
# FORMATOWANIE ARKUSZY EXCEL
# =============================================================================


def format_worksheet_headers(worksheet: Worksheet, styles: ExcelStyles) -> None:
    for cell in worksheet[1]:
        cell.font = styles.header_font
        cell.fill = styles.header_fill
        cell.alignment = styles.header_alignment
        cell.border = styles.thin_border


def format_worksheet_data(
    worksheet: Worksheet,
    styles: ExcelStyles,
    row_count: int,
    columns: List[str],
) -> None:
    """
    Formatuje dane arkusza wyników z kolorowaniem kolumny "passed".

    Args:
        worksheet: Arkusz do sformatowania
        styles: Obiekt ExcelStyles ze stylami
        row_count: Liczba wierszy danych (bez nagłówka)
        columns: Nazwy kolumn w kolejności arkusza
    """
    passed_col = columns.index("passed") + 1 if "passed" in columns else None
    for row_num in range(2, row_count + 2):
        for col_num, name in enumerate(columns, start=1):
            cell = worksheet.cell(row=row_num, column=col_num)
            cell.font = styles.data_font
            cell.border = styles.thin_border
            cell.alignment = (
                styles.data_alignment_left if name in ("verdict", "note") else styles.data_alignment_center
            )
            if col_num == passed_col:
                fill = styles.get_fill_for_passed(cell.value)
                if fill:
                    cell.fill = fill


def set_column_widths(worksheet: Worksheet, columns: List[str], widths: Optional[Dict[str, int]] = None) -> None:
    widths = widths or EXCEL_COLUMN_WIDTHS
    for col_idx, name in enumerate(columns, start=1):
        worksheet.column_dimensions[get_column_letter(col_idx)].width = widths.get(name, 14)


# =============================================================================
# ARTEFAKTY KAMPANII
# =============================================================================


def write_campaign_artifacts(report: CampaignReport, out: PathLike) -> Dict[str, Path]:
    """
    Zapisuje report.json, rows.jsonl, certificates.jsonl i timings.jsonl.

    Returns:
        Dict {nazwa_pliku: ścieżka}
    """
    directory = Path(out)
    directory.mkdir(parents=True, exist_ok=True)

    paths = {
        REPORT_FILE: directory / REPORT_FILE,
        ROWS_FILE: directory / ROWS_FILE,
        CERTIFICATES_FILE: directory / CERTIFICATES_FILE,
        TIMINGS_FILE: directory / TIMINGS_FILE,
    }
    with open(paths[REPORT_FILE], "w", encoding="utf-8", newline="\n") as handle:
        json.dump(report.to_record(), handle, sort_keys=True, indent=2, ensure_ascii=False)
        handle.write("\n")
    write_jsonl(paths[ROWS_FILE], report.rows)
    write_jsonl(paths[CERTIFICATES_FILE], report.certificates)
    write_jsonl(paths[TIMINGS_FILE], report.timings)
    logger.info(
        "Zapisano artefakty kampanii w %s (%d wierszy, %d certyfikatów)",
        directory,
        len(report.rows),
        len(report.certificates),
    )
    return paths


def load_rows_dataframe(directory: PathLike) -> pd.DataFrame:
    """Wiersze raportu jako DataFrame ze stałą kolejnością kolumn."""
    rows = read_jsonl(Path(directory) / ROWS_FILE)
    df = pd.DataFrame(rows, columns=REPORT_CSV_COLUMNS)
    # kolumny z brakami nie mogą stać się float (4 -> "4.0" w CSV)
    for name in ("index", "j", "U", "Z"):
        df[name] = df[name].astype("Int64")
    return df


def render_report_csv(directory: PathLike, target: Optional[PathLike] = None) -> Path:
    """
    Renderuje rows.jsonl do CSV (UTF-8-BOM, kolumny REPORT_CSV_COLUMNS).

    Returns:
        Ścieżka zapisanego pliku CSV
    """
    directory = Path(directory)
    target = Path(target) if target else directory / CSV_FILE
    df = load_rows_dataframe(directory)
    df.to_csv(target, index=False, encoding="utf-8-sig", lineterminator="\n")
    return target


def _summary_dataframe(directory: Path) -> pd.DataFrame:
    with open(directory / REPORT_FILE, "r", encoding="utf-8") as handle:
        report = json.load(handle)
    records = [
        {
            "Suite": SUITE_LABELS.get(name, name),
            "Zaliczone": result["passed"],
            "Niezaliczone": result["failed"],
            "Uwagi": result.get("note", ""),
        }
        for name, result in report["suites"].items()
    ]
    return pd.DataFrame(records, columns=["Suite", "Zaliczone", "Niezaliczone", "Uwagi"])


def render_report_excel(directory: PathLike, target: Optional[PathLike] = None) -> Path:
    """
    Renderuje raport do Excel z formatowaniem (2 arkusze: Wyniki + Podsumowanie).

    Returns:
        Ścieżka zapisanego pliku .xlsx
    """
    directory = Path(directory)
    target = Path(target) if target else directory / EXCEL_FILE
    styles = ExcelStyles()

    export_df = load_rows_dataframe(directory)
    export_df["verdict"] = export_df["verdict"].map(lambda v: VERDICT_LABELS.get(v, v) if isinstance(v, str) else "")
    columns = list(export_df.columns)
    summary_df = _summary_dataframe(directory)

    with pd.ExcelWriter(target, engine="openpyxl") as writer:
        # Arkusz 1: Wyniki
        export_df.to_excel(writer, sheet_name="Wyniki", index=False)
        worksheet = writer.sheets["Wyniki"]
        set_column_widths(worksheet, columns)
        format_worksheet_headers(worksheet, styles)
        format_worksheet_data(worksheet, styles, row_count=len(export_df), columns=columns)
        worksheet.freeze_panes = "A2"
        worksheet.auto_filter.ref = f"A1:{get_column_letter(len(columns))}{len(export_df) + 1}"

        # Arkusz 2: Podsumowanie (z formułami)
        worksheet_summary = writer.book.create_sheet("Podsumowanie")
        headers = list(summary_df.columns[:3]) + ["% Zaliczonych", "Uwagi"]
        for col_idx, width in enumerate([26, 12, 14, 16, 50], start=1):
            worksheet_summary.column_dimensions[get_column_letter(col_idx)].width = width
        for col_idx, name in enumerate(headers, start=1):
            worksheet_summary.cell(row=1, column=col_idx, value=name)
        format_worksheet_headers(worksheet_summary, styles)

        for row_idx, (_, row_data) in enumerate(summary_df.iterrows(), start=2):
            passed, failed = int(row_data["Zaliczone"]), int(row_data["Niezaliczone"])
            total = passed + failed
            values = [
                row_data["Suite"],
                passed,
                failed,
                f"=IF(B{row_idx}+C{row_idx}=0,100,B{row_idx}/(B{row_idx}+C{row_idx})*100)",
                row_data["Uwagi"],
            ]
            for col_idx, value in enumerate(values, start=1):
                cell = worksheet_summary.cell(row=row_idx, column=col_idx, value=value)
                cell.font = styles.data_font
                cell.border = styles.thin_border
                cell.alignment = styles.data_alignment_left if col_idx in (1, 5) else styles.data_alignment_center
            rate_cell = worksheet_summary.cell(row=row_idx, column=4)
            rate_cell.number_format = "0.0"
            rate_cell.fill = _solid(get_color_for_pass_rate(100.0 * passed / total if total else 100.0))

        worksheet_summary.freeze_panes = "A2"

    return target


# =============================================================================
# PONOWNA WERYFIKACJA CERTYFIKATÓW
# =============================================================================


@dataclass
class ReverifySummary:
    total: int = 0
    verified: int = 0
    failed_ids: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.total == self.verified


def reverify_certificates(path: PathLike) -> ReverifySummary:
    """
    Sprawdza każdy zapisany certyfikat wyłącznie na podstawie pliku.

    Raises:
        RecordError: rekord nie spełnia schematu certyfikatu
    """
    summary = ReverifySummary()
    for line_no, record in enumerate(iter_jsonl(path), start=1):
        summary.total += 1
        cert_id = str(record.get("id", line_no))
        try:
            cert = Certificate.from_record(record)
        except RecordError as exc:
            raise RecordError(f"{path}:{line_no}: {exc}") from exc
        if verify_certificate(cert):
            summary.verified += 1
        else:
            summary.failed_ids.append(cert_id)
            logger.warning("Certyfikat %s nie przechodzi weryfikacji", cert_id)
    return summary
