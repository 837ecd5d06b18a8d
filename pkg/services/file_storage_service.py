import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Sequence

from utils.logger import setup_logger

logger = setup_logger(__name__)

FLOAT_FORMAT = "%.17g"


def format_value(value: Any) -> str:
    """CSV cell text; floats use 17 significant digits, None is empty"""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if not math.isfinite(value):
            return str(value)
        return FLOAT_FORMAT % value
    return str(value)


class FileStorageService:
    """
    Deterministic file storage for run outputs

    Every artifact of a run lands in one output directory. CSV and JSON
    writers produce byte-identical files for identical content.
    """

    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.output_dir / name

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        """Write a table with a header row and Unix line endings"""
        target = self.path(name)
        count = 0
        try:
            with open(target, "w", encoding="utf-8", newline="") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(header)
                for row in rows:
                    writer.writerow([format_value(v) for v in row])
                    count += 1
        except OSError as e:
            logger.error(f"Error writing {target}: {e}")
            raise
        logger.info(f"Stored {count} rows to {target}")
        return target

    def write_json(self, name: str, document: Dict) -> Path:
        """Write one JSON document; floats keep their shortest round-trip repr"""
        target = self.path(name)
        try:
            with open(target, "w", encoding="utf-8", newline="\n") as f:
                f.write(json.dumps(document, indent=2, ensure_ascii=False, allow_nan=False))
                f.write("\n")
        except OSError as e:
            logger.error(f"Error writing {target}: {e}")
            raise
        logger.info(f"Stored {target}")
        return target

    def read_json(self, name: str) -> Dict:
        with open(self.path(name), "r", encoding="utf-8") as f:
            return json.load(f)
