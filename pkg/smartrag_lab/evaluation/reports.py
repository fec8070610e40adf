# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Writers of tables, structured reports and curves.

"""
import csv
import logging

import numpy as np
import yaml

logger = logging.getLogger(__name__)


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def write_csv(path, rows, columns):
    """Write dict rows as a comma separated table.

    Missing values are written as empty cells.

    """
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])
    logger.debug('Wrote %d rows to %s', len(rows), path)


def read_csv(path):
    """Rows of a table written by write_csv (values kept as strings).

    """
    with open(path, newline='') as f:
        return list(csv.DictReader(f))


def to_builtin(value):
    """Convert numpy scalars and containers to plain Python objects.

    """
    if isinstance(value, dict):
        return {str(k): to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def write_yaml(path, data):
    with open(path, 'w') as f:
        yaml.safe_dump(to_builtin(data), f, default_flow_style=False,
                       sort_keys=False)


def write_curve(path, xs, ys, header=''):
    """Two column text file for external plotting.

    """
    data = np.column_stack([np.asarray(xs, dtype=float),
                            np.asarray(ys, dtype=float)])
    np.savetxt(path, data, fmt='%.10g', header=header)


def report_record(report):
    """Structured content of an EvalReport.

    """
    record = report.to_row()
    record['category_ratios'] = dict(report.category_ratios)
    record['config'] = dict(report.config)
    return to_builtin(record)


def summarize_seeds(values):
    """Mean and standard deviation of a metric over several seeds.

    Missing values (None) are ignored.

    Returns
    -------
    summary : dict
        mean, std and n (mean and std are None when n is 0).

    """
    kept = np.array([v for v in values if v is not None], dtype=float)
    if not len(kept):
        return {'mean': None, 'std': None, 'n': 0}
    return {'mean': float(kept.mean()), 'std': float(kept.std()),
            'n': int(len(kept))}


def summarize_reports(reports):
    """Seed summary of every column of a list of report rows.

    """
    columns = {}
    for row in reports:
        for key, value in row.items():
            columns.setdefault(key, []).append(value)
    return {key: summarize_seeds(values) for key, values in columns.items()}
