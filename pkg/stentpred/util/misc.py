import csv
import io
import math

import numpy as np


class StentpredError(Exception):
    pass


def derive_seed(master, *indices):
    """Derive a 32-bit seed from a master seed and task indices.

    The result depends only on its arguments, never on scheduling order, so
    folds, trees and synthetic lesions can be produced in any order.
    """
    seq = np.random.SeedSequence([int(master) & 0xffffffff] +
                                 [int(i) & 0xffffffff for i in indices])
    return int(seq.generate_state(1)[0])


def make_rng(master, *indices):
    return np.random.default_rng(derive_seed(master, *indices))


def write_to_file(filename, contents, force_unix=True):
    newline = None
    if force_unix:
        newline = "\n"
    with open(filename, "w", encoding="utf-8", newline=newline) as f:
        f.write(contents)


def format_float(value):
    # shortest round-tripping form
    value = float(value)
    if math.isnan(value):
        return "nan"
    return repr(value)


def csv_text(header, rows):
    """CSV document with LF line endings; ``None`` cells are written empty."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return out.getvalue()


def csv_rows(text):
    """Non-empty rows of a CSV document, header included."""
    return [row for row in csv.reader(io.StringIO(text)) if row]


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        if math.isnan(obj) or math.isinf(obj):
            return None
        return obj
    return obj
