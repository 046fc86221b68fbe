from conftest import parse_data_ok
from scomma.cli import corpus_dir
from scomma.nodes import VInt, VList, VObj, VOmit, VSym
from scomma.parser import parse_data


def test_stable_data_shape():
    data = parse_data_ok((corpus_dir() / "stable.dat").read_text())
    assert set(data.enums) == {"menList", "womenList"}
    assert all(len(e.values) == 5 for e in data.enums.values())
    assert [a.path for a in data.assignments] == [
        ("StableMarriage", "man"),
        ("StableMarriage", "woman"),
    ]
    men = data.assignments[0].value
    assert isinstance(men, VList) and len(men.items) == 5
    assert men.keys == ("Richard", "James", "John", "Hugh", "Greg")
    for obj in men.items:
        assert isinstance(obj, VObj) and len(obj.items) == 2
        assert isinstance(obj.items[0], VList)
        assert isinstance(obj.items[1], VOmit)


def test_empty_file():
    data = parse_data_ok("")
    assert data.is_empty


def test_enum_and_constant():
    data = parse_data_ok("enum e := {A,B}; int k := 2;")
    assert data.enums["e"].values == ("A", "B")
    assert data.constants["k"].value == VInt(2)


def test_negative_and_real_and_bool_scalars():
    data = parse_data_ok("int a := -3; real r := 2.5; bool b := true;")
    assert data.constants["a"].value == VInt(-3)
    assert data.constants["r"].value.value == 2.5
    assert data.constants["b"].value.value is True


def test_symbolic_value():
    data = parse_data_ok("enum e := {A,B}; e fav := B;")
    assert data.constants["fav"].value == VSym("B")


def test_two_dimensional_array():
    data = parse_data_ok("int m[2,3] := [[1,2,3],[4,5,6]];")
    rows = data.constants["m"].value.items
    assert len(rows) == 2 and all(len(r.items) == 3 for r in rows)


def test_duplicate_enum_value_rejected():
    data, diags = parse_data("enum e := {A,A};")
    assert data is None
    assert any("repeats" in d.message for d in diags)


def test_mixed_keyed_and_positional_rejected():
    data, diags = parse_data("int a[3] := [A:1, 2, B:3];")
    assert data is None
    assert any("mixes keyed and positional" in d.message for d in diags)


def test_duplicate_constant_rejected():
    data, diags = parse_data("int k := 1; int k := 2;")
    assert data is None
    assert any("declared twice" in d.message for d in diags)


def test_merge_reports_clashes():
    a = parse_data_ok("int k := 1;")
    b = parse_data_ok("int k := 2;")
    merged, clashes = a.merged_with(b)
    assert clashes and "constant 'k'" in clashes[0]
    assert merged.constants["k"].value == VInt(2)
