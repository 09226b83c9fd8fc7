import json
import logging
import math
import sys
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'


def sanitize(value: Any) -> Any:
    """JSON-safe copy of a report: non-finite floats become "inf", "-inf" or "nan" """
    if isinstance(value, BaseModel):
        return sanitize(value.model_dump(mode='python', by_alias=True))
    if isinstance(value, dict):
        return {str(k): sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return [sanitize(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        x = float(value)
        if math.isnan(x):
            return 'nan'
        if math.isinf(x):
            return 'inf' if x > 0 else '-inf'
        return x
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _open(out: Optional[str]):
    return open(out, 'w', newline='') if out else sys.stdout


def write_json(report: Any, out: Optional[str] = None) -> None:
    payload = json.dumps(sanitize(report), indent=2, sort_keys=True)
    if out:
        with _open(out) as handle:
            handle.write(payload + '\n')
        logger.info(f"Report written to {out}")
    else:
        sys.stdout.write(payload + '\n')


def flatten(report: Dict[str, Any], prefix: str = '') -> Dict[str, Any]:
    """One CSV row from a nested report; lists are kept as JSON text"""
    row: Dict[str, Any] = {}
    for key, value in report.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            row.update(flatten(value, f"{name}."))
        elif isinstance(value, list):
            row[name] = json.dumps(value)
        else:
            row[name] = value
    return row


def write_table(rows: List[Dict[str, Any]], out: Optional[str] = None, columns: Optional[List[str]] = None) -> None:
    frame = pd.DataFrame(rows, columns=columns)
    if out:
        frame.to_csv(out, index=False, float_format=FLOAT_FORMAT)
        logger.info(f"Table with {len(frame)} rows written to {out}")
    else:
        frame.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT)


def write_report(report: Any, fmt: str = 'json', out: Optional[str] = None) -> None:
    if fmt == 'json':
        write_json(report, out)
    elif fmt == 'csv':
        write_table([flatten(sanitize(report))], out)
    else:
        raise ValueError(f"unknown output format {fmt!r}")
