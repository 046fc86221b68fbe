import random

import pytest

from conftest import CORPUS_NAMES, parse_ok
from scomma.cli import corpus_dir
from scomma.nodes import (
    BinOp,
    Forall,
    GlobalCall,
    IfElse,
    IntLit,
    IntRange,
    NameRange,
    Objective,
    Ref,
    UnOp,
)
from scomma.parser import parse_expression, parse_model
from scomma.printer import pretty_print


def expr(text):
    e, diags = parse_expression(text)
    assert e is not None, [d.render() for d in diags]
    return e


class TestModelStructure:
    def test_stable_marriage_shape(self):
        text = (corpus_dir() / "stable.scm").read_text()
        model = parse_ok(text)
        assert [c.name for c in model.classes] == ["StableMarriage", "Man", "Woman"]
        assert model.main_class == "StableMarriage"
        sm = model.classes[0]
        assert len(sm.attributes) == 2
        assert len(sm.zones) == 2
        assert [z.name for z in sm.zones] == ["matchHusbandWife", "forbidUnstableCouples"]

    def test_empty_class(self):
        model = parse_ok("class A {}")
        assert len(model.classes) == 1
        assert model.main_class == "A"
        assert model.classes[0].attributes == ()

    def test_empty_domain_is_not_a_parse_error(self):
        # domain emptiness belongs to the analyzer, not the parser
        model = parse_ok("class A { int x in [1,0]; }")
        assert model is not None

    def test_import_keeps_filename_with_dots_and_dashes(self):
        model = parse_ok("import queens-10.dat;\nclass A { int x in [1,2]; }")
        assert model.imports == ("queens-10.dat",)

    def test_first_class_is_main(self):
        model = parse_ok("class First {}\nclass Second {}")
        assert model.main_class == "First"


class TestItems:
    def test_forall_single_item_and_block(self):
        model = parse_ok(
            """
            class A {
              int a[5] in [1,5];
              constraint z {
                forall(i in 1..5) a[i] = i;
                forall(j in rng) { a[j] = j; a[j] > 0; }
              }
            }
            """
        )
        items = model.classes[0].zones[0].items
        assert isinstance(items[0], Forall)
        assert isinstance(items[0].range, IntRange)
        assert len(items[0].body) == 1
        assert isinstance(items[1].range, NameRange)
        assert len(items[1].body) == 2

    def test_if_single_and_braced(self):
        model = parse_ok(
            """
            class A {
              int x in [0,9];
              int y in [0,9];
              constraint z {
                if (x < 1) y = 2 else y = 3;
                if (x < 2) { y = 4; } else { y = 5; }
                if (x < 3) y = 6;
              }
            }
            """
        )
        items = model.classes[0].zones[0].items
        assert all(isinstance(i, IfElse) for i in items)
        assert items[2].else_items is None

    def test_objective_and_global(self):
        model = parse_ok(
            """
            class A {
              int x in [0,9];
              int q[3] in [1,3];
              constraint z {
                [minimize] x + 1;
                alldifferent(q);
                cumulatives(q, q, q);
              }
            }
            """
        )
        items = model.classes[0].zones[0].items
        assert isinstance(items[0], Objective) and items[0].kind == "minimize"
        assert isinstance(items[1], GlobalCall) and items[1].name == "alldifferent"
        assert isinstance(items[2], GlobalCall) and len(items[2].args) == 3


class TestExpressions:
    def test_precedence_arithmetic_vs_comparison(self):
        e = expr("1+2*3 < 10")
        assert isinstance(e, BinOp) and e.op == "<"
        assert isinstance(e.left, BinOp) and e.left.op == "+"
        assert e.left.right.op == "*"

    def test_logic_ladder(self):
        # and < xor < or < implication, so this groups as ((a and b) or c) -> d
        e = expr("a and b or c -> d")
        assert e.op == "->"
        assert e.left.op == "or"
        assert e.left.left.op == "and"

    def test_implication_right_associative(self):
        e = expr("a -> b -> c")
        assert e.op == "->" and e.right.op == "->"

    def test_set_ops_bind_tighter_than_comparison(self):
        e = expr("a union b subset c")
        assert e.op == "subset"
        assert e.left.op == "union"

    def test_unary_and_negative_literals(self):
        e = expr("-3")
        assert isinstance(e, IntLit) and e.value == -3
        e = expr("not a and b")
        assert e.op == "and" and isinstance(e.left, UnOp)

    def test_nested_subscripts(self):
        e = expr("woman_husband[man_wife[1]]=1")
        assert e.op == "="
        ref = e.left
        assert isinstance(ref, Ref)
        inner = ref.parts[0].indices[0]
        assert isinstance(inner, Ref) and inner.parts[0].name == "man_wife"

    def test_dotted_paths(self):
        e = expr("man[m].rank[w]")
        assert [p.name for p in e.parts] == ["man", "rank"]


class TestRoundTrip:
    @pytest.mark.parametrize("name", CORPUS_NAMES)
    def test_corpus_pretty_print_reparses_equal(self, name):
        text = (corpus_dir() / f"{name}.scm").read_text()
        model = parse_ok(text)
        printed = pretty_print(model)
        again, diags = parse_model(printed, "printed.scm")
        assert again is not None, [d.render() for d in diags]
        assert again == model


class TestDiagnostics:
    def test_unterminated_class_points_at_open_brace(self):
        text = "class A {\n  int x in [1,2];\n"
        model, diags = parse_model(text, "t.scm")
        assert model is None
        assert any("never closed" in d.message for d in diags)
        brace_line = next(d for d in diags if "never closed" in d.message)
        assert brace_line.span.line == 1

    def test_recovery_reports_multiple_errors(self):
        text = """
        class A {
          int x in ;
          int 5;
          int y in [1,2];
        }
        """
        model, diags = parse_model(text, "t.scm")
        assert model is None
        assert sum(1 for d in diags if d.is_error) >= 2

    def test_spans_inside_input_bounds(self):
        text = "class A {\n  int x in ;\n}"
        _, diags = parse_model(text, "t.scm")
        lines = text.splitlines()
        for d in diags:
            assert 1 <= d.span.line <= len(lines)
            assert d.span.column >= 1

    def test_random_bytes_never_crash(self):
        rng = random.Random(20080716)
        alphabet = "abXY019 \n\t{}[]();,.:=<>+-*/_\"'->&#"
        for _ in range(300):
            text = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 120)))
            model, diags = parse_model(text, "fuzz.scm")
            assert model is not None or diags is not None
