import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftpool.base import ConfigError, ParseError, RowError, SchemaError
from driftpool.stream import (
    AttributeSpec,
    Instance,
    Schema,
    open_file_stream,
    validate_instance,
)

ARFF_BASIC = """\
% toy dataset
@relation toy

@attribute color {red,green}
@attribute size numeric
@attribute class {yes,no}

@data
red,1.5,yes
green,2.0,no
red,0.25,yes
"""


@pytest.fixture
def arff_file(tmp_path):
    path = tmp_path / "toy.arff"
    path.write_text(ARFF_BASIC)
    return path


def drain(source):
    return list(source)


class TestArff:
    def test_nominal_attribute_from_header(self, arff_file):
        source = open_file_stream(arff_file, format="arff")
        spec = source.schema.attributes[0]
        assert spec.is_nominal
        assert spec.values == ("red", "green")

    def test_rows_and_labels(self, arff_file):
        items = drain(open_file_stream(arff_file, format="arff"))
        assert len(items) == 3
        inst, marker = items[0]
        assert marker is False
        assert inst.values == [0, 1.5]
        assert inst.label == 0  # "yes"

    def test_exhaustion_returns_none(self, arff_file):
        source = open_file_stream(arff_file, format="arff")
        drain(source)
        assert source.next_item() is None

    def test_reopen_identical(self, arff_file):
        first = [(i.values, i.label) for i, _ in drain(open_file_stream(arff_file))]
        second = [(i.values, i.label) for i, _ in drain(open_file_stream(arff_file))]
        assert first == second

    def test_class_column_override(self, tmp_path):
        path = tmp_path / "front.arff"
        path.write_text(
            "@relation t\n@attribute class {a,b}\n@attribute x numeric\n"
            "@data\na,3.0\nb,4.0\n"
        )
        source = open_file_stream(path, class_column=0)
        assert source.schema.class_values == ("a", "b")
        items = drain(source)
        assert items[0][0].values == [3.0]
        assert items[1][0].label == 1

    def test_malformed_header_names_line(self, tmp_path):
        path = tmp_path / "bad.arff"
        path.write_text("@relation t\n@attribute broken\n@data\n")
        with pytest.raises(ParseError) as err:
            open_file_stream(path)
        assert "line 2" in str(err.value)

    def test_numeric_class_rejected(self, tmp_path):
        path = tmp_path / "nc.arff"
        path.write_text(
            "@relation t\n@attribute x numeric\n@attribute y numeric\n@data\n1,2\n"
        )
        with pytest.raises(ParseError):
            open_file_stream(path)

    def test_arity_mismatch_names_row(self, arff_file):
        path = arff_file.parent / "arity.arff"
        path.write_text(ARFF_BASIC + "red,1.0\n")
        source = open_file_stream(path)
        for _ in range(3):
            source.next_item()
        with pytest.raises(RowError) as err:
            source.next_item()
        assert err.value.row == 4

    def test_unknown_nominal_value(self, arff_file):
        path = arff_file.parent / "unknown.arff"
        path.write_text(ARFF_BASIC.replace("green,2.0,no", "blue,2.0,no"))
        source = open_file_stream(path)
        source.next_item()
        with pytest.raises(RowError) as err:
            source.next_item()
        assert "blue" in str(err.value)

    def test_missing_value_rejected(self, arff_file):
        path = arff_file.parent / "missing.arff"
        path.write_text(ARFF_BASIC.replace("green,2.0,no", "green,?,no"))
        source = open_file_stream(path)
        source.next_item()
        with pytest.raises(RowError):
            source.next_item()

    def test_sparse_rows_rejected(self, arff_file):
        path = arff_file.parent / "sparse.arff"
        path.write_text(ARFF_BASIC + "{0 red}\n")
        source = open_file_stream(path)
        for _ in range(3):
            source.next_item()
        with pytest.raises(RowError):
            source.next_item()

    def test_benchmark_shaped_file(self, tmp_path):
        """Electricity-shaped ARFF: 8 numeric attributes, 2 classes."""
        lines = ["@relation electricity"]
        for i in range(8):
            lines.append(f"@attribute a{i} numeric")
        lines.append("@attribute class {UP,DOWN}")
        lines.append("@data")
        n_rows = 120
        for r in range(n_rows):
            lines.append(",".join(str((r * 7 + i) % 10 / 10) for i in range(8))
                         + ("," + ("UP" if r % 3 else "DOWN")))
        path = tmp_path / "elec.arff"
        path.write_text("\n".join(lines) + "\n")
        source = open_file_stream(path)
        assert source.schema.n_attributes == 8
        assert source.schema.n_classes == 2
        assert len(drain(source)) == n_rows


@pytest.mark.skipif(
    not os.environ.get("DRIFTPOOL_ELEC_ARFF"),
    reason="set DRIFTPOOL_ELEC_ARFF to the electricity dataset path to enable",
)
def test_electricity_real_dataset():
    source = open_file_stream(os.environ["DRIFTPOOL_ELEC_ARFF"])
    assert source.schema.n_attributes == 8
    assert source.schema.n_classes == 2
    assert sum(1 for _ in source) == 45312


CSV_BASIC = "x,label,cls\n1.5,hot,a\n2.5,cold,b\n3.5,hot,a\n"


class TestCsv:
    def test_three_rows_then_exhaustion(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text(CSV_BASIC)
        source = open_file_stream(path, format="csv")
        assert len(drain(source)) == 3
        assert source.next_item() is None

    def test_inference_numeric_and_nominal(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text(CSV_BASIC)
        source = open_file_stream(path, format="csv")
        x_spec, label_spec = source.schema.attributes
        assert not x_spec.is_nominal
        assert label_spec.is_nominal
        assert label_spec.values == ("hot", "cold")
        assert source.schema.class_values == ("a", "b")

    def test_class_defaults_to_last_column(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text(CSV_BASIC)
        source = open_file_stream(path, format="csv")
        inst, _ = source.next_item()
        assert inst.label == 0
        assert inst.values == [1.5, 0]

    def test_arity_mismatch(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n1,x\n1,2,3\n")
        with pytest.raises(RowError) as err:
            open_file_stream(path, format="csv")
        assert err.value.row == 2

    def test_missing_value_rejected_at_read(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n1,x\n?,y\n")
        source = open_file_stream(path, format="csv")
        source.next_item()
        with pytest.raises(RowError):
            source.next_item()

    def test_non_finite_literals_are_nominal(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\nnan,x\n1.0,y\n")
        source = open_file_stream(path, format="csv")
        assert source.schema.attributes[0].is_nominal


class TestSchemaTypes:
    def test_nominal_values_must_be_unique(self):
        with pytest.raises(ConfigError):
            AttributeSpec("c", ("a", "a"))

    def test_nominal_values_must_be_nonempty(self):
        with pytest.raises(ConfigError):
            AttributeSpec("c", ())

    def test_schema_needs_two_classes(self):
        with pytest.raises(ConfigError):
            Schema((AttributeSpec("x"),), ("only",))

    def test_duplicate_attribute_names(self):
        with pytest.raises(ConfigError):
            Schema((AttributeSpec("x"), AttributeSpec("x")), ("a", "b"))

    def test_validate_instance(self):
        schema = Schema(
            (AttributeSpec("x"), AttributeSpec("c", ("u", "v"))), ("a", "b")
        )
        validate_instance(schema, Instance([1.0, 1], 0))
        with pytest.raises(SchemaError):
            validate_instance(schema, Instance([1.0], 0))
        with pytest.raises(SchemaError):
            validate_instance(schema, Instance([1.0, 5], 0))
        with pytest.raises(SchemaError):
            validate_instance(schema, Instance([1.0, 1], 2))

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ConfigError):
            open_file_stream(tmp_path / "x", format="xml")


@settings(max_examples=60, deadline=None)
@given(
    color=st.sampled_from(["red", "green", "blue", "RED", ""]),
    size=st.sampled_from(["1.5", "x", "?", "", "2e3", "nan"]),
    label=st.sampled_from(["yes", "no", "maybe", "?"]),
    extra=st.sampled_from(["", ",1.0"]),
)
def test_fuzzed_rows_never_silently_coerce(tmp_path_factory, color, size, label, extra):
    """Invalid rows always raise RowError; valid ones parse exactly."""
    tmp_path = tmp_path_factory.mktemp("fuzz")
    row = f"{color},{size},{label}{extra}"
    path = tmp_path / "f.arff"
    path.write_text(ARFF_BASIC + row + "\n")
    source = open_file_stream(path)
    for _ in range(3):
        source.next_item()
    valid = (
        color in ("red", "green")
        and size not in ("x", "?", "", "nan")
        and label in ("yes", "no")
        and extra == ""
    )
    if valid:
        inst, _ = source.next_item()
        validate_instance(source.schema, inst)
        assert inst.values[0] == ("red", "green").index(color)
        assert inst.values[1] == float(size)
    else:
        with pytest.raises(RowError):
            source.next_item()
