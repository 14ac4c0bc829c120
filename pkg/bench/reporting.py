"""
Experiment reports.
CSV output with a provenance comment line.
"""

import hashlib
import io
import logging
import os
from typing import Iterable, Optional, Tuple

import pandas as pd

from campaign.allocation import Allocation
from utils.config import Config

logger = logging.getLogger(__name__)

TIMING_COLUMNS = ('rr_build_seconds', 'total_seconds', 'speedup')


def provenance_line(config: Config) -> str:
    """'# config=<fingerprint> seed=<seed>'."""
    return f"# config={config.fingerprint()} seed={config.get_int('seed')}"


def render_report(frame: pd.DataFrame, config: Config) -> str:
    """Report text: provenance comment, header row, data rows."""
    buffer = io.StringIO()
    buffer.write(provenance_line(config) + "\n")
    frame.to_csv(buffer, index=False, float_format='%.10g')
    return buffer.getvalue()


def write_report(frame: pd.DataFrame, path: Optional[str], config: Config) -> str:
    """Write a report to path (or just return it when path is None)."""
    text = render_report(frame, config)
    if path:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        logger.info("wrote %d rows to %s", len(frame), path)
    return text


def read_report(path: str) -> Tuple[str, pd.DataFrame]:
    """Provenance line and table of a written report."""
    with open(path, 'r', encoding='utf-8') as f:
        first = f.readline().rstrip('\n')
    return first, pd.read_csv(path, comment='#')


def without_timing(frame: pd.DataFrame, columns: Iterable[str] = TIMING_COLUMNS) -> pd.DataFrame:
    """Frame minus wall-clock columns, for reproducibility comparisons."""
    return frame.drop(columns=[c for c in columns if c in frame.columns])


def allocation_digest(alloc: Allocation) -> str:
    """Short hash of an allocation's sorted elements."""
    text = ";".join(f"{e.node},{e.advertiser}" for e in alloc.sorted_elements())
    return hashlib.sha256(text.encode('utf-8')).hexdigest()[:16]
