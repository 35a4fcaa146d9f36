"""Schema-aware instance representation and stream ingestion.

A stream yields ``(Instance, drift_marker)`` pairs through ``next_item()``;
``None`` signals exhaustion.  File streams never carry drift markers.
"""

import math
import re
from dataclasses import dataclass, field

from .base import ConfigError, ParseError, RowError, SchemaError, StreamError

_NUMERIC_KINDS = ("numeric", "real", "integer")


@dataclass(frozen=True)
class AttributeSpec:
    """One attribute: numeric, or nominal with an ordered value list."""

    name: str
    values: tuple = None  # None => numeric

    def __post_init__(self):
        if self.values is not None:
            values = tuple(str(v) for v in self.values)
            if not values:
                raise ConfigError(f"nominal attribute {self.name!r} has no values")
            if len(set(values)) != len(values):
                raise ConfigError(f"nominal attribute {self.name!r} has duplicate values")
            object.__setattr__(self, "values", values)

    @property
    def is_nominal(self):
        return self.values is not None


@dataclass(frozen=True)
class Schema:
    """Ordered attribute specs plus the ordered class label list."""

    attributes: tuple
    class_values: tuple
    name: str = "stream"

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "class_values", tuple(str(c) for c in self.class_values))
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ConfigError("attribute names must be unique")
        if len(self.class_values) < 2:
            raise ConfigError("schema needs at least 2 class values")
        if len(set(self.class_values)) != len(self.class_values):
            raise ConfigError("class values must be unique")

    @property
    def n_attributes(self):
        return len(self.attributes)

    @property
    def n_classes(self):
        return len(self.class_values)

    def nominal_sizes(self):
        """Per-attribute nominal domain size, None for numeric attributes."""
        return [len(a.values) if a.is_nominal else None for a in self.attributes]


class Instance:
    """One labeled observation: value vector aligned to a schema + label index.

    Nominal values are stored as indices into the attribute's value list.
    """

    __slots__ = ("values", "label")

    def __init__(self, values, label):
        self.values = values
        self.label = label

    def __repr__(self):
        return f"Instance(values={self.values!r}, label={self.label})"


def validate_instance(schema, instance):
    """Raise SchemaError unless the instance conforms to the schema."""
    values = instance.values
    if len(values) != schema.n_attributes:
        raise SchemaError(
            f"expected {schema.n_attributes} values, got {len(values)}"
        )
    for i, spec in enumerate(schema.attributes):
        v = values[i]
        if spec.is_nominal:
            if not float(v).is_integer() or not 0 <= int(v) < len(spec.values):
                raise SchemaError(
                    f"attribute {spec.name!r}: nominal index {v!r} out of range"
                )
        elif not isinstance(v, (int, float)) or not math.isfinite(v):
            raise SchemaError(f"attribute {spec.name!r}: non-numeric value {v!r}")
    if not 0 <= instance.label < schema.n_classes:
        raise SchemaError(f"label index {instance.label} out of range")
    return instance


class StreamSource:
    """Single-consumer supplier of (Instance, drift_marker) pairs."""

    schema = None

    def next_item(self):
        """Return the next (Instance, bool) pair, or None when exhausted."""
        raise NotImplementedError

    def __iter__(self):
        while True:
            item = self.next_item()
            if item is None:
                return
            yield item


class ListStream(StreamSource):
    """In-memory stream over pre-built instances (mostly for tests)."""

    def __init__(self, schema, items):
        self.schema = schema
        self._items = [(i, m) for i, m in items]
        self._pos = 0

    def next_item(self):
        if self._pos >= len(self._items):
            return None
        item = self._items[self._pos]
        self._pos += 1
        return item


_NUMBER_RE = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?\Z")


def _parse_number(token):
    """Parse an integer/decimal literal with a dot separator, else None."""
    if _NUMBER_RE.match(token) is None:
        return None
    try:
        value = float(token)
    except ValueError:  # pragma: no cover - regex already filters
        return None
    return value if math.isfinite(value) else None


def open_file_stream(path, format="arff", class_column=None):
    """Open an ARFF or CSV file as a StreamSource.

    ``class_column`` is the 0-based column index of the label; it defaults
    to the last column.  Schema inference: ARFF uses the @attribute
    declarations; CSV columns are numeric unless any value fails to parse
    as a number, in which case the column is nominal over the observed
    values (order of first appearance).
    """
    if format == "arff":
        return ArffStream(path, class_column)
    if format == "csv":
        return CsvStream(path, class_column)
    raise ConfigError(f"unknown file format {format!r} (expected 'arff' or 'csv')")


class _FileStream(StreamSource):
    """Shared row-iteration logic for file-backed streams."""

    def __init__(self):
        self._rows = None  # iterator over (row_number, raw_fields)
        self._row_count = 0

    def _next_fields(self):
        raise NotImplementedError

    def _decode_row(self, fields, row_number):
        values = []
        for spec, token in zip(self.schema.attributes, fields):
            token = token.strip()
            if token in ("?", ""):
                raise RowError(f"missing value for attribute {spec.name!r}", row_number)
            if spec.is_nominal:
                try:
                    values.append(self._nominal_index[spec.name][token])
                except KeyError:
                    raise RowError(
                        f"unknown nominal value {token!r} for attribute {spec.name!r}",
                        row_number,
                    ) from None
            else:
                number = _parse_number(token)
                if number is None:
                    raise RowError(
                        f"non-numeric value {token!r} for attribute {spec.name!r}",
                        row_number,
                    )
                values.append(number)
        return values

    def next_item(self):
        fields = self._next_fields()
        if fields is None:
            return None
        self._row_count += 1
        row_number = self._row_count
        n_cols = self.schema.n_attributes + 1
        if len(fields) != n_cols:
            raise RowError(
                f"expected {n_cols} fields, got {len(fields)}", row_number
            )
        label_token = fields[self._class_column].strip()
        if label_token in ("?", ""):
            raise RowError("missing class value", row_number)
        try:
            label = self._label_index[label_token]
        except KeyError:
            raise RowError(f"unknown class value {label_token!r}", row_number) from None
        fields = fields[: self._class_column] + fields[self._class_column + 1 :]
        return Instance(self._decode_row(fields, row_number), label), False


def _strip_quotes(token):
    token = token.strip()
    if len(token) >= 2 and token[0] == token[-1] and token[0] in "'\"":
        return token[1:-1]
    return token


class ArffStream(_FileStream):
    """Minimal ARFF reader: @relation, @attribute (numeric + nominal), @data.

    No sparse rows, no date/string attributes, no instance weights.
    """

    def __init__(self, path, class_column=None):
        super().__init__()
        self.path = str(path)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise StreamError(f"cannot read {path}: {exc}") from exc

        attributes = []
        data_start = None
        for lineno, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            lower = line.lower()
            if lower.startswith("@relation"):
                continue
            if lower.startswith("@attribute"):
                attributes.append(self._parse_attribute(line, lineno))
            elif lower.startswith("@data"):
                data_start = lineno
                break
            else:
                raise ParseError(f"unexpected header line {line!r}", lineno)
        if data_start is None:
            raise ParseError("no @data section found")
        if len(attributes) < 2:
            raise ParseError("need at least one attribute plus a class attribute")

        if class_column is None:
            class_column = len(attributes) - 1
        if not 0 <= class_column < len(attributes):
            raise ConfigError(f"class_column {class_column} out of range")
        class_name, class_values = attributes[class_column]
        if class_values is None:
            raise ParseError(
                f"class attribute {class_name!r} must be nominal"
            )
        specs = [
            AttributeSpec(name, values)
            for i, (name, values) in enumerate(attributes)
            if i != class_column
        ]
        self.schema = Schema(tuple(specs), tuple(class_values), name=class_name)
        self._class_column = class_column
        self._label_index = {v: i for i, v in enumerate(self.schema.class_values)}
        self._nominal_index = {
            s.name: {v: i for i, v in enumerate(s.values)}
            for s in specs
            if s.is_nominal
        }
        self._data_lines = [
            (lineno, line.strip())
            for lineno, line in enumerate(lines, start=1)
            if lineno > data_start
        ]
        self._pos = 0

    @staticmethod
    def _parse_attribute(line, lineno):
        body = line[len("@attribute") :].strip()
        if body.startswith("'"):
            end = body.find("'", 1)
            if end < 0:
                raise ParseError("unterminated quoted attribute name", lineno)
            name, rest = body[1:end], body[end + 1 :].strip()
        else:
            parts = body.split(None, 1)
            if len(parts) != 2:
                raise ParseError(f"malformed @attribute line {line!r}", lineno)
            name, rest = parts
        rest = rest.strip()
        if rest.lower() in _NUMERIC_KINDS:
            return name, None
        if rest.startswith("{") and rest.endswith("}"):
            values = [_strip_quotes(v) for v in rest[1:-1].split(",")]
            values = [v.strip() for v in values]
            if not values or any(not v for v in values):
                raise ParseError(f"empty nominal value in {line!r}", lineno)
            if len(set(values)) != len(values):
                raise ParseError(f"duplicate nominal value in {line!r}", lineno)
            return name, tuple(values)
        raise ParseError(f"unsupported attribute type {rest!r}", lineno)

    def _next_fields(self):
        while self._pos < len(self._data_lines):
            lineno, line = self._data_lines[self._pos]
            self._pos += 1
            if not line or line.startswith("%"):
                continue
            if line.startswith("{"):
                raise RowError("sparse ARFF rows are not supported", self._row_count + 1)
            return [_strip_quotes(tok) for tok in line.split(",")]
        return None


class CsvStream(_FileStream):
    """CSV reader with a header row; schema inferred from the data.

    The whole file is scanned once up front to infer column kinds, then
    rows are re-parsed lazily in file order.
    """

    def __init__(self, path, class_column=None):
        super().__init__()
        self.path = str(path)
        try:
            with open(path, "r", encoding="utf-8", newline="") as fh:
                lines = [line.rstrip("\r\n") for line in fh]
        except OSError as exc:
            raise StreamError(f"cannot read {path}: {exc}") from exc
        lines = [line for line in lines if line != ""]
        if not lines:
            raise ParseError("empty CSV file")
        header = [h.strip() for h in lines[0].split(",")]
        if len(header) < 2 or any(not h for h in header):
            raise ParseError("CSV header row missing or malformed", 1)
        n_cols = len(header)
        if class_column is None:
            class_column = n_cols - 1
        if not 0 <= class_column < n_cols:
            raise ConfigError(f"class_column {class_column} out of range")

        numeric = [True] * n_cols
        observed = [dict() for _ in range(n_cols)]  # value -> first-seen order
        for lineno, line in enumerate(lines[1:], start=2):
            fields = line.split(",")
            if len(fields) != n_cols:
                raise RowError(f"expected {n_cols} fields, got {len(fields)}", lineno - 1)
            for col, token in enumerate(fields):
                token = token.strip()
                if token in ("?", ""):
                    continue  # rejected per-row at read time
                if numeric[col] and _parse_number(token) is None:
                    numeric[col] = False
                if token not in observed[col]:
                    observed[col][token] = len(observed[col])

        class_values = tuple(observed[class_column])
        if len(class_values) < 2:
            raise ParseError("class column has fewer than 2 distinct values")
        specs = []
        for col in range(n_cols):
            if col == class_column:
                continue
            if numeric[col]:
                specs.append(AttributeSpec(header[col]))
            else:
                specs.append(AttributeSpec(header[col], tuple(observed[col])))
        self.schema = Schema(tuple(specs), class_values, name=header[class_column])
        self._class_column = class_column
        self._label_index = {v: i for i, v in enumerate(class_values)}
        self._nominal_index = {
            s.name: {v: i for i, v in enumerate(s.values)}
            for s in specs
            if s.is_nominal
        }
        self._data_lines = lines[1:]
        self._pos = 0

    def _next_fields(self):
        if self._pos >= len(self._data_lines):
            return None
        line = self._data_lines[self._pos]
        self._pos += 1
        return line.split(",")
