"""CSV / Markdown table emission in the layout of COD result tables."""
from __future__ import annotations

import csv
import io
from pathlib import Path

from .metrics import METRIC_FIELDS, MetricReport

COLUMN_TITLES = {
    "wfm": "F_beta^w",
    "s_alpha": "S_alpha",
    "e_phi": "E_phi",
    "mae": "M",
    "dice": "mDice",
    "iou": "mIoU",
}
COD_COLUMNS = ("wfm", "s_alpha", "e_phi", "mae")
POLYP_COLUMNS = ("dice", "iou")


def metric_columns(polyp: bool = False) -> tuple:
    return COD_COLUMNS + POLYP_COLUMNS if polyp else COD_COLUMNS


def _fmt(value, digits=None) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.{digits}f}" if digits is not None else repr(value)
    return str(value)


def render_csv(header: dict, columns, rows) -> str:
    """``header`` becomes ``# key: value`` comment lines; floats keep full
    precision."""
    buf = io.StringIO()
    for key, value in header.items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def render_markdown(header: dict, columns, rows, titles=None, digits=3) -> str:
    titles = titles or {}
    lines = [f"- {key}: {value}" for key, value in header.items()]
    if lines:
        lines.append("")
    lines.append("| " + " | ".join(titles.get(c, c) for c in columns) + " |")
    lines.append("|" + "|".join("---" for _ in columns) + "|")
    for row in rows:
        lines.append("| " + " | ".join(_fmt(row.get(c), digits) for c in columns) + " |")
    return "\n".join(lines) + "\n"


def render(fmt: str, header: dict, columns, rows, titles=None) -> str:
    if fmt == "csv":
        return render_csv(header, columns, rows)
    if fmt == "md":
        return render_markdown(header, columns, rows, titles)
    raise ValueError(f"unknown table format {fmt!r}")


def dataset_row(name: str, report: MetricReport, polyp: bool = False) -> dict:
    row = {"dataset": name, "count": report.count, "skipped": report.skipped}
    for key in metric_columns(polyp):
        row[key] = report.aggregate.get(key)
    return row


def per_image_rows(report: MetricReport) -> list[dict]:
    rows = []
    for rec in report.per_image:
        row = {"image": rec.image_id, **rec.values()}
        row["skipped"] = ";".join(sorted(rec.skipped)) if rec.skipped else ""
        rows.append(row)
    return rows


PER_IMAGE_COLUMNS = ("image",) + METRIC_FIELDS + ("skipped",)


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path
