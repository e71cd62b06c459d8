# data/output_manager.py
import csv
import json
import logging
import math
import numbers
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from config.defaults import TOOL_NAME, TOOL_VERSION
from engine.errors import DataError
from models.changepoint import Dataset

logger = logging.getLogger(__name__)

DATASET_HEADER = ["t", "y"]


def format_number(value: Any) -> str:
    """17 significant digits for floats, so every double round-trips exactly."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        return f"{float(value):.17g}"
    return str(value)


def run_metadata(command: str, config_hash: str, base_seed: int) -> Dict[str, Any]:
    """Provenance record embedded in every output file; deliberately free of timestamps."""
    return {
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "command": command,
        "config_hash": config_hash,
        "base_seed": base_seed,
    }


class OutputManager:
    """Writes run outputs (CSV, JSON, JSON-lines) with an embedded metadata record."""

    def __init__(self, metadata: Dict[str, Any]):
        self.metadata = dict(metadata)

    @staticmethod
    def _prepare(path: str) -> None:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)

    def write_csv(self, path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        """CSV with ``# key: value`` metadata comment lines above the header."""
        self._prepare(path)
        with open(path, "w", newline="", encoding="utf-8") as f:
            for key, value in self.metadata.items():
                f.write(f"# {key}: {value}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_number(v) for v in row])
        logger.info("wrote %s", path)
        return path

    def write_json(self, path: str, payload: Dict[str, Any]) -> str:
        self._prepare(path)
        document = {"metadata": self.metadata, **payload}
        with open(path, "w", encoding="utf-8") as f:
            json.dump(document, f, indent=2, allow_nan=False)
            f.write("\n")
        logger.info("wrote %s", path)
        return path

    def write_jsonl(self, path: str, records: Iterable[Dict[str, Any]]) -> str:
        """One JSON object per line; the first line carries the metadata."""
        self._prepare(path)
        with open(path, "w", encoding="utf-8") as f:
            f.write(json.dumps({"metadata": self.metadata}, allow_nan=False) + "\n")
            for record in records:
                f.write(json.dumps(record, allow_nan=False) + "\n")
        logger.info("wrote %s", path)
        return path


def write_dataset(path: str, data: Dataset, output: Optional[OutputManager] = None) -> str:
    rows = zip(data.times.tolist(), data.values.tolist())
    if output is None:
        output = OutputManager({})
    return output.write_csv(path, DATASET_HEADER, rows)


def read_dataset(path: str) -> Dataset:
    """Read a ``t,y`` CSV; ``#`` lines are skipped and errors name the file line.

    Raises:
        DataError: Missing file, wrong header, malformed rows or non-increasing times
    """
    if not os.path.exists(path):
        raise DataError(f"[data/output_manager.py] dataset {path} does not exist")

    times: List[float] = []
    values: List[float] = []
    header_seen = False
    with open(path, "r", newline="", encoding="utf-8") as f:
        for row_number, line in enumerate(f, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = next(csv.reader([text]))
            if not header_seen:
                if [c.strip() for c in fields] != DATASET_HEADER:
                    raise DataError(f"[data/output_manager.py] expected header 't,y', got {text!r}", row=row_number)
                header_seen = True
                continue
            if len(fields) != 2:
                raise DataError(f"[data/output_manager.py] expected 2 fields, got {len(fields)}", row=row_number)
            try:
                t, y = float(fields[0]), float(fields[1])
            except ValueError:
                raise DataError(f"[data/output_manager.py] non-numeric value in {text!r}", row=row_number) from None
            if not (math.isfinite(t) and math.isfinite(y)):
                raise DataError(f"[data/output_manager.py] non-finite value in {text!r}", row=row_number)
            if times and t <= times[-1]:
                raise DataError(f"[data/output_manager.py] time {t} does not increase", row=row_number)
            times.append(t)
            values.append(y)

    if not header_seen:
        raise DataError(f"[data/output_manager.py] dataset {path} has no header")
    if not times:
        raise DataError(f"[data/output_manager.py] dataset {path} has no observations")
    return Dataset(times, values)
