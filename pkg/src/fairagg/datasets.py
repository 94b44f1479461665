"""Locate or download the ProPublica ``compas-scores-two-years.csv`` file."""

from __future__ import annotations

import logging
import os
import subprocess
import sys
import tempfile
import urllib.request
import zipfile
from pathlib import Path
from typing import Optional

log = logging.getLogger(__name__)

COMPAS_FILENAME = "compas-scores-two-years.csv"
COMPAS_URL = "https://raw.githubusercontent.com/propublica/compas-analysis/master/compas-scores-two-years.csv"
# the `responsibly` wheel ships an unmodified copy of the same file
WHEEL_PACKAGE = "responsibly==0.1.2"
WHEEL_MEMBER = "responsibly/dataset/compas/compas-scores-two-years.csv"

DEFAULT_DIR = Path(__file__).resolve().parents[2] / "data"


def find_compas_csv() -> Optional[Path]:
    """Return the dataset path from $COMPAS_CSV or ./data/, if present."""
    env = os.environ.get("COMPAS_CSV")
    candidates = [Path(env)] if env else []
    candidates += [Path.cwd() / "data" / COMPAS_FILENAME, DEFAULT_DIR / COMPAS_FILENAME]
    for c in candidates:
        if c.is_file():
            return c
    return None


def _from_url(dest: Path, timeout: float) -> None:
    with urllib.request.urlopen(COMPAS_URL, timeout=timeout) as resp:
        dest.write_bytes(resp.read())


def _from_wheel(dest: Path, timeout: float) -> None:
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "--quiet", "-d", tmp, WHEEL_PACKAGE],
            check=True,
            timeout=timeout,
        )
        wheel = next(Path(tmp).glob("*.whl"))
        with zipfile.ZipFile(wheel) as zf:
            dest.write_bytes(zf.read(WHEEL_MEMBER))


def fetch_compas_csv(dest_dir: Optional[Path] = None, timeout: float = 120.0) -> Path:
    """Download the dataset into ``dest_dir`` (default ``data/``) and return its path."""
    dest_dir = Path(dest_dir or DEFAULT_DIR)
    dest_dir.mkdir(parents=True, exist_ok=True)
    dest = dest_dir / COMPAS_FILENAME
    errors = []
    for source in (_from_url, _from_wheel):
        try:
            source(dest, timeout)
            return dest
        except Exception as exc:  # try the next source
            log.info("%s failed: %s", source.__name__, exc)
            errors.append(f"{source.__name__}: {exc}")
    raise RuntimeError("could not fetch the COMPAS dataset: " + "; ".join(errors))


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)
    print(fetch_compas_csv())
