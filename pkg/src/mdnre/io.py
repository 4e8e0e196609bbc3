"""Dataset CSV, model JSON and atomic file writes.

Dataset files are UTF-8 CSV with LF line endings and the header

    sample_id,domain,class,strength,identity,x0,y0,...,x{L-1},y{L-1}

Coordinates are written with Python's shortest round-trip float repr, so a
load after a save reproduces every value bit for bit.
"""

import csv
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .data import NEUTRAL, Dataset
from .exceptions import ParseError
from .training import FittedModel

META_COLUMNS = ("sample_id", "domain", "class", "strength", "identity")


def atomic_write_text(path, text):
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dataset_header(n_landmarks):
    coords = [f"{a}{i}" for i in range(n_landmarks) for a in ("x", "y")]
    return list(META_COLUMNS) + coords


def _fmt(x):
    return repr(float(x))


def dumps_dataset(dataset):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(dataset_header(dataset.n_landmarks))
    flat = dataset.X.reshape(len(dataset), -1)
    for i in range(len(dataset)):
        writer.writerow(
            [dataset.sample_ids[i], dataset.domains[i], dataset.labels[i],
             _fmt(dataset.strengths[i]), int(dataset.identities[i])]
            + [_fmt(v) for v in flat[i]]
        )
    return buf.getvalue()


def save_dataset(dataset, path):
    atomic_write_text(path, dumps_dataset(dataset))


def _parse_float(text, line, column, path):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"column {column!r}: not a number: {text!r}", line, path) from None
    if not math.isfinite(value):
        raise ParseError(f"column {column!r}: non-finite value {text!r}", line, path)
    return value


def loads_dataset(text, neutral_label=NEUTRAL, path=None):
    reader = csv.reader(_io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file", 1, path) from None
    header = [h.strip() for h in header]
    if tuple(header[:len(META_COLUMNS)]) != META_COLUMNS:
        raise ParseError(f"header must start with {','.join(META_COLUMNS)}", 1, path)
    coords = header[len(META_COLUMNS):]
    if not coords or len(coords) % 2:
        raise ParseError("header needs x/y coordinate pairs", 1, path)
    L = len(coords) // 2
    if coords != dataset_header(L)[len(META_COLUMNS):]:
        raise ParseError("coordinate columns must be x0,y0,x1,y1,... in order", 1, path)

    rows, ids, domains, labels, strengths, identities = [], [], [], [], [], []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line, path)
        ids.append(row[0])
        domains.append(row[1])
        labels.append(row[2])
        lam = _parse_float(row[3], line, "strength", path)
        if not 0.0 <= lam <= 1.0:
            raise ParseError(f"strength {lam} outside [0, 1]", line, path)
        strengths.append(lam)
        try:
            identities.append(int(row[4]))
        except ValueError:
            raise ParseError(f"identity must be an integer: {row[4]!r}", line, path) from None
        rows.append([_parse_float(v, line, header[5 + k], path)
                     for k, v in enumerate(row[5:])])
    if not rows:
        raise ParseError("dataset has no samples", 2, path)
    present = set(labels)
    seen = tuple(dict.fromkeys(labels))
    if neutral_label in present:
        class_labels = (neutral_label,) + tuple(c for c in seen if c != neutral_label)
    else:
        class_labels = (neutral_label,) + seen
    return Dataset(np.array(rows).reshape(-1, L, 2), domains, labels, strengths,
                   identities, ids, class_labels=class_labels,
                   neutral_label=neutral_label)


def load_dataset(path, neutral_label=NEUTRAL):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8: {exc}", None, path) from None
    return loads_dataset(text, neutral_label, path)


def save_model(model, path, extra=None):
    data = model.to_dict()
    if extra:
        data["training"] = extra
    atomic_write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return FittedModel.from_dict(json.load(fh))
