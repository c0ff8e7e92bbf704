import csv
import io
import logging
import numbers
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence

from src.configs.settings import OutputSettings

logger = logging.getLogger(__name__)


def create_dir_if_not_exists(directory: Path) -> None:
    """Create a directory if it does not exist."""
    try:
        directory.mkdir(parents=True, exist_ok=True)
        logger.info(f"Directory ensured: {directory}")
    except Exception as e:
        logger.error(f"Failed to create directory {directory}: {e}")


def write_atomic(path: Path, text: str) -> Path:
    """Write text to path through a temp file in the same directory and a rename."""
    path = Path(path)
    create_dir_if_not_exists(path.parent)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as tmp:
            tmp.write(text)
        os.replace(tmp_name, path)
    except Exception:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.info(f"Wrote {path}")
    return path


def format_number(value: Optional[float]) -> str:
    """Render a CSV cell: 6 significant digits, empty for an absent value."""
    if value is None:
        return ''
    if isinstance(value, numbers.Integral) and not isinstance(value, bool):
        return str(value)
    return format(float(value), OutputSettings.CSV_PRECISION)


def render_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Render rows as CSV text with the fixed number format."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([cell if isinstance(cell, str) else format_number(cell) for cell in row])
    return buffer.getvalue()


def emit_output(text: str, out: Optional[Path]) -> None:
    """Write to `out` atomically, or to stdout when no path is given."""
    if out is None:
        print(text, end='' if text.endswith('\n') else '\n')
    else:
        write_atomic(out, text)


def sibling_path(path: Path, suffix: str) -> Path:
    """`run.json` -> `run.grid.csv` for suffix `.grid.csv`."""
    return path.with_name(path.stem + suffix)
