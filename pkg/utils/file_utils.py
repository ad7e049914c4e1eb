"""Output-file helpers."""

import logging
import os
import tempfile
from typing import Iterable

logger = logging.getLogger(__name__)


def write_text_atomic(path: str, text: str):
    """Write text via a temp file in the same directory, then rename over path."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug(f"Wrote {path}")


def write_lines_atomic(path: str, lines: Iterable[str]):
    write_text_atomic(path, "".join(line + "\n" for line in lines))


def remove_if_present(path: str) -> bool:
    try:
        os.remove(path)
        return True
    except FileNotFoundError:
        return False
