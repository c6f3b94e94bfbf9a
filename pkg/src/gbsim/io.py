"""On-disk artifact codecs: sample files, circuit files, CSV reports.

Every artifact starts with `#`-prefixed header lines carrying at least the
config fingerprint, so downstream tools can refuse to mix data from
different experiments.  Formats are line-oriented plain text; parsers
report the offending line number on malformed input.
"""

from __future__ import annotations

import csv
import io as _io

import numpy as np

from .config import ExperimentConfig, emit_config, parse_config
from .errors import FormatError
from .samplers import SampleSet
from .validation import REPORT_COLUMNS, ValidationRecord, ValidationReport

__all__ = [
    "write_sample_file",
    "read_sample_file",
    "write_circuit_file",
    "read_circuit_file",
    "write_report_csv",
    "read_report_csv",
    "write_cost_csv",
]

_SAMPLE_HEADER_KEYS = ("fingerprint", "model", "modes", "seed", "phase_index")


def write_sample_file(path, samples: SampleSet) -> None:
    lines = [
        f"# fingerprint: {samples.fingerprint}",
        f"# model: {samples.model}",
        f"# modes: {samples.mode_count}",
        f"# seed: {samples.seed}",
        f"# phase_index: {samples.phase_index}",
    ]
    for row in samples.patterns:
        lines.append("".join("1" if b else "0" for b in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_sample_file(path) -> SampleSet:
    header = {}
    rows = []
    modes = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" not in body:
                    raise FormatError(f"malformed header {line!r}", line=lineno)
                key, _, value = body.partition(":")
                header[key.strip()] = value.strip()
                continue
            if modes is None:
                for key in _SAMPLE_HEADER_KEYS:
                    if key not in header:
                        raise FormatError(
                            f"missing header key {key!r} before first sample",
                            line=lineno,
                        )
                modes = int(header["modes"])
            if len(line) != modes:
                raise FormatError(
                    f"expected {modes} bits, got {len(line)}", line=lineno
                )
            if set(line) - {"0", "1"}:
                raise FormatError(
                    f"characters outside {{0,1}} in {line!r}", line=lineno
                )
            rows.append([1 if ch == "1" else 0 for ch in line])
    if modes is None:
        for key in _SAMPLE_HEADER_KEYS:
            if key not in header:
                raise FormatError(f"missing header key {key!r}")
        modes = int(header["modes"])
    patterns = np.array(rows, dtype=np.uint8).reshape(len(rows), modes)
    return SampleSet(header["fingerprint"], header["model"],
                     int(header["seed"]), patterns,
                     phase_index=int(header["phase_index"]))


def write_circuit_file(path, config: ExperimentConfig) -> None:
    """A circuit file is a config file; callers usually resolve haar first."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(emit_config(config))


def read_circuit_file(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _cell(value) -> str:
    if isinstance(value, bool):
        return "pass" if value else "fail"
    if value is None:
        return "info"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_report_csv(path, report: ValidationReport) -> None:
    buf = _io.StringIO()
    buf.write(f"# fingerprint: {report.fingerprint}\n")
    buf.write(f"# seed: {report.seed}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for rec in report.records:
        writer.writerow([_cell(getattr(rec, col)) for col in REPORT_COLUMNS])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(buf.getvalue())


def _parse_flag(cell: str):
    if cell == "pass":
        return True
    if cell == "fail":
        return False
    if cell == "info":
        return None
    raise ValueError(f"bad pass flag {cell!r}")


def read_report_csv(path) -> ValidationReport:
    fingerprint = None
    seed = None
    body = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                key = key.strip()
                if key == "fingerprint":
                    fingerprint = value.strip()
                elif key == "seed":
                    seed = int(value.strip())
                continue
            if line.strip():
                body.append((lineno, line))
    if fingerprint is None or seed is None:
        raise FormatError("report is missing fingerprint or seed header")
    if not body:
        raise FormatError("report has no column header")
    head_line, head = body[0]
    columns = next(csv.reader([head]))
    if tuple(columns) != REPORT_COLUMNS:
        raise FormatError(f"unexpected columns {columns}", line=head_line)
    report = ValidationReport(fingerprint, seed)
    for lineno, line in body[1:]:
        cells = next(csv.reader([line]))
        if len(cells) != len(REPORT_COLUMNS):
            raise FormatError(
                f"expected {len(REPORT_COLUMNS)} cells, got {len(cells)}",
                line=lineno,
            )
        try:
            rec = ValidationRecord(
                test=cells[0],
                n_samples=int(cells[1]),
                passed=_parse_flag(cells[2]),
                subsystem_size=int(cells[3]),
                statistic=float(cells[4]),
                c_b=float(cells[5]),
                log_chi=float(cells[6]),
                delta_h=float(cells[7]),
                p_value=float(cells[8]),
                tvd=float(cells[9]),
                note=cells[10],
            )
        except ValueError as exc:
            raise FormatError(str(exc), line=lineno) from exc
        report.add(rec)
    return report


def write_cost_csv(path, fingerprint: str, rows, advantage_log10: float) -> None:
    buf = _io.StringIO()
    buf.write(f"# fingerprint: {fingerprint}\n")
    buf.write(f"# advantage_log10: {repr(float(advantage_log10))}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("n_clicks", "n_samples", "flops_each", "flops_total"))
    for n, hits, each, total in rows:
        writer.writerow((n, hits, repr(float(each)), repr(float(total))))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(buf.getvalue())
