"""Define config and utility functions for file system interactions.

Model and auxiliary files are JSON documents parsed with orjson; result rows
are written as CSV (pandas) or JSON (orjson). Every format carries a schema
version.
"""

import re
from calculation._compat import StrEnum
from pathlib import Path

import click
import numpy as np
import orjson
import pandas as pd

from calculation.errors import ModelFileError
from calculation.model import AuxSystem, Distortion, SourceModel, Var
from calculation.prob_core import DEFAULT_TOLERANCES, Alphabet, Channel, \
    JointDist

# Current version of every file format written here
SCHEMA_VERSION = 1
# Variables that must be declared in a model file
MODEL_ALPHABETS = (Var.X, Var.X1, Var.X2, Var.Y, Var.Z, Var.F)
JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY


class OutputFormats(StrEnum):
    """Enum of supported result formats."""
    CSV = 'csv'
    JSON = 'json'


def _key_line(text, key):
    # 1-based line of the first "key": occurrence, if any
    match = re.search(rf'"{re.escape(key)}"\s*:', text)
    return text.count('\n', 0, match.start()) + 1 if match else None

def _read_json(path):
    """Read and parse a JSON file, keeping the text for line lookups."""

    text = Path(path).read_text(encoding='utf-8')
    try:
        data = orjson.loads(text)
    except orjson.JSONDecodeError as e:
        raise ModelFileError(path, e.msg, e.lineno) from e
    if not isinstance(data, dict):
        raise ModelFileError(path, 'top level must be an object.', 1)

    # Files without a version are read as the current one
    version = data.get('schema_version', SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ModelFileError(
            path, f'unsupported schema_version {version!r}.',
            _key_line(text, 'schema_version'))
    return text, data

def _field(path, text, data, key, build):
    """Build one object from a top-level key, anchoring errors to its line."""

    if key not in data:
        raise ModelFileError(path, f'missing key "{key}".')
    try:
        return build(data[key])
    except (ValueError, TypeError, KeyError, IndexError) as e:
        raise ModelFileError(path, f'{key}: {e}', _key_line(text, key)) from e

def _alphabets(raw):
    alphabets = {Var(name): Alphabet(Var(name), symbols)
                 for name, symbols in raw.items()}
    missing = [str(v) for v in MODEL_ALPHABETS if v not in alphabets]
    if missing:
        raise ValueError(f'missing alphabets {missing}.')
    return alphabets

def load_model(path, tol=DEFAULT_TOLERANCES):
    """Read and validate a model file.

    Args:
        path: JSON model file path
        tol: Tolerances used for normalization checks
    Returns:
        SourceModel
    Raises:
        ModelFileError: parse or validation failure, with a line number when
            the failure can be tied to a key
    """

    text, data = _read_json(path)
    def field(key, build):
        return _field(path, text, data, key, build)

    a = field('alphabets', _alphabets)
    x = a[Var.X]
    p_x = field('p_x', lambda v: JointDist((x,), v, tol.norm))
    ch1 = field('ch1', lambda v: Channel((x,), (a[Var.X1],), v, tol.norm))
    ch2 = field('ch2', lambda v: Channel((x,), (a[Var.X2],), v, tol.norm))
    ch_yz = field(
        'ch_yz', lambda v: Channel((x,), (a[Var.Y], a[Var.Z]), v, tol.norm))
    # Function entries are F labels; store their positions
    f_table = field('f', lambda v: np.vectorize(
        a[Var.F].index, otypes=[int])(np.array(v, dtype=object)))

    distortion = None
    if data.get('distortion') is not None:
        distortion = field('distortion', lambda v: Distortion(
            Alphabet(Var.F_HAT, v['f_hat_alphabet']), v['d']))

    try:
        return SourceModel(p_x, ch1, ch2, ch_yz, a[Var.F], f_table, distortion)
    except ValueError as e:
        raise ModelFileError(path, str(e), _key_line(text, 'f')) from e

def model_to_dict(model):
    """Serializable dict of a model in the model file layout."""

    labels = np.array(model.f_alphabet.symbols, dtype=object)[model.f_table]
    data = {
        'schema_version': SCHEMA_VERSION,
        'alphabets': {
            a.name: list(a.symbols) for a in (
                model.x, model.x1, model.x2, model.y, model.z,
                model.f_alphabet)},
        'p_x': model.p_x.mass,
        'ch1': model.ch1.kernel,
        'ch2': model.ch2.kernel,
        'ch_yz': model.ch_yz.kernel,
        'f': labels.tolist(),
    }
    if model.distortion is not None:
        data['distortion'] = {
            'f_hat_alphabet': list(model.distortion.f_hat.symbols),
            'd': model.distortion.d,
        }
    return data

def save_model(model, path):
    """Write a model file that load_model reads back bit for bit."""

    payload = orjson.dumps(model_to_dict(model), option=JSON_OPTIONS)
    Path(path).write_bytes(payload)

def load_aux(path, tol=DEFAULT_TOLERANCES):
    """Read an auxiliary system file (weights, u1, v1, u2, v2 arrays)."""

    text, data = _read_json(path)
    for key in ('weights',) + AuxSystem.KERNELS:
        if key not in data:
            raise ModelFileError(path, f'missing key "{key}".')
    try:
        return AuxSystem.from_dict(data, tol)
    except ValueError as e:
        # Kernel messages name the kernel, which is also its key
        key = next((k for k in AuxSystem.KERNELS if f'Kernel {k} ' in str(e)),
                   'weights')
        raise ModelFileError(path, str(e), _key_line(text, key)) from e

def save_aux(aux, path):
    """Write an auxiliary system file."""

    data = {'schema_version': SCHEMA_VERSION} | aux.to_dict()
    Path(path).write_bytes(orjson.dumps(data, option=JSON_OPTIONS))

def format_rows(records, fmt=OutputFormats.CSV, columns=None):
    """Render result rows as versioned CSV or JSON text.

    Args:
        records: list of dicts
        fmt: OutputFormats member
        columns: optional column order
    Returns:
        text to write
    """

    df = pd.DataFrame(records, columns=columns)
    match OutputFormats(fmt):
        case OutputFormats.CSV:
            return f'# schema_version={SCHEMA_VERSION}\n' \
                + df.to_csv(index=False)
        case OutputFormats.JSON:
            # Missing values become null
            rows = df.astype(object).where(df.notna(), None)
            payload = {'schema_version': SCHEMA_VERSION,
                       'rows': rows.to_dict(orient='records')}
            return orjson.dumps(payload, option=JSON_OPTIONS).decode() + '\n'

def write_rows(records, path=None, fmt=OutputFormats.CSV, columns=None):
    """Write result rows to a file, or to stdout when no path is given.

    Returns:
        number of rows written
    """

    text = format_rows(records, fmt, columns)
    if path is None:
        click.echo(text, nl=False)
    else:
        Path(path).write_text(text, encoding='utf-8')
    return len(records)
