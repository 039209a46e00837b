"""
Report Service.
Writes machine-readable reports and renders the human summary table.
"""

import csv
import json
import logging
from pathlib import Path
from typing import List, Optional

from app.models.schemas import CheckRecord, ReportFormat, SuiteReport

logger = logging.getLogger(__name__)

CSV_FIELDS = ["suite", "check", "instance", "passed", "inputs", "outputs"]


def _pairs(values: dict) -> str:
    """k=v pairs joined by ';' in key order."""
    return ";".join(f"{key}={values[key]}" for key in sorted(values))


class ReportService:
    """
    Service for report output.
    Machine reports are deterministic: sorted keys, exact strings, no timings.
    """

    def __init__(self):
        """Initialize the report service."""
        logger.info("Report Service initialized")

    def to_records(self, report: SuiteReport) -> str:
        """
        Line-delimited JSON: a run header followed by one line per check.
        """
        header = {
            "kind": "run",
            "version": report.version,
            "config": report.config.model_dump(mode="json"),
        }
        lines = [json.dumps(header, sort_keys=True)]
        for record in report.records:
            lines.append(json.dumps({"kind": "check", **record.model_dump(mode="json")}, sort_keys=True))
        return "\n".join(lines) + "\n"

    def write(self, report: SuiteReport, output_dir: str, report_format: Optional[ReportFormat] = None) -> Path:
        """
        Write the machine report into output_dir.

        Args:
            report: Records and resolved configuration
            output_dir: Target directory (created if missing)
            report_format: csv or records (default: the config's format)

        Returns:
            Path of the report file
        """
        report_format = report_format or report.config.report_format
        directory = Path(output_dir)
        directory.mkdir(parents=True, exist_ok=True)

        if report_format is ReportFormat.CSV:
            path = directory / "report.csv"
            with path.open("w", newline="", encoding="utf-8") as handle:
                writer = csv.DictWriter(handle, fieldnames=CSV_FIELDS, lineterminator="\n")
                writer.writeheader()
                for record in report.records:
                    writer.writerow({
                        "suite": record.suite,
                        "check": record.check,
                        "instance": record.instance,
                        "passed": "true" if record.passed else "false",
                        "inputs": _pairs(record.inputs),
                        "outputs": _pairs(record.outputs),
                    })
            run_path = directory / "run.json"
            run_path.write_text(
                json.dumps({"version": report.version, "config": report.config.model_dump(mode="json")},
                           sort_keys=True) + "\n",
                encoding="utf-8",
            )
        else:
            path = directory / "report.ndjson"
            path.write_text(self.to_records(report), encoding="utf-8")

        logger.info(f"Report with {len(report.records)} records written to {path}")
        return path

    def summary_table(self, records: List[CheckRecord]) -> str:
        """Fixed-width table of suite, check, instance and status."""
        if not records:
            return "no checks run"
        rows = [(r.suite, r.check, r.instance, "PASS" if r.passed else "FAIL") for r in records]
        header = ("SUITE", "CHECK", "INSTANCE", "STATUS")
        widths = [max(len(row[i]) for row in rows + [header]) for i in range(len(header))]
        lines = ["  ".join(cell.ljust(width) for cell, width in zip(header, widths))]
        lines.append("  ".join("-" * width for width in widths))
        for row in rows:
            lines.append("  ".join(cell.ljust(width) for cell, width in zip(row, widths)))
        failed = sum(not r.passed for r in records)
        lines.append(f"{len(records) - failed}/{len(records)} checks passed")
        return "\n".join(lines)


# Singleton instance
_report_service: Optional[ReportService] = None


def get_report_service() -> ReportService:
    """
    Get or create the report service singleton.

    Returns:
        ReportService instance
    """
    global _report_service
    if _report_service is None:
        _report_service = ReportService()
    return _report_service
