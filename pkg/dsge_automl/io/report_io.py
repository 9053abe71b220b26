"""
Save and load run reports (report.json).

Reports carry a format version; files from a newer major version are refused.
"""

import json
import logging
import os

from dsge_automl.core.errors import ReportFormatError
from dsge_automl.core.reporting import RunReport

logger = logging.getLogger(__name__)

VERSION = "1.0.0"

REPORT_FILE = "report.json"


def report_to_json(report: RunReport) -> str:
    data = {"version": VERSION, **report.to_dict()}
    return json.dumps(data, indent=2)


def save_report(report: RunReport, filepath: str) -> None:
    """
    Write a report as JSON.

    Args:
        report: The report to save
        filepath: Target file (usually <out>/report.json)
    """
    os.makedirs(os.path.dirname(os.path.abspath(filepath)), exist_ok=True)
    with open(filepath, "w") as f:
        f.write(report_to_json(report))
        f.write("\n")
    logger.info("Report written to %s", filepath)


def load_report(filepath: str) -> RunReport:
    """
    Read a report written by save_report.

    Raises:
        ReportFormatError: unreadable file, invalid JSON, incompatible
            version or missing fields
    """
    try:
        with open(filepath, "r") as f:
            data = json.load(f)
    except OSError as e:
        raise ReportFormatError(f"cannot read report {filepath}: {e}") from None
    except json.JSONDecodeError as e:
        raise ReportFormatError(f"invalid JSON in {filepath}: {e}") from None

    file_version = data.get("version", "0.0.0") if isinstance(data, dict) else "0.0.0"
    if not _is_compatible_version(file_version):
        raise ReportFormatError(f"report version {file_version} is not supported (reader is {VERSION})")

    try:
        return RunReport.from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise ReportFormatError(f"malformed report {filepath}: {e}") from None


def _is_compatible_version(file_version: str) -> bool:
    """Check if a file version is compatible with current version."""
    try:
        file_major = int(file_version.split(".")[0])
        current_major = int(VERSION.split(".")[0])
        return 1 <= file_major <= current_major
    except (ValueError, AttributeError):
        return False


def comparable_report(report: RunReport) -> dict:
    """Report content without the execution section, for comparing runs."""
    data = report.to_dict()
    data.pop("execution", None)
    return data
