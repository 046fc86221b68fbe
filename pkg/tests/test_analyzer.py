
from conftest import analyze_ok, compile_corpus, parse_data_ok, parse_ok
from scomma.analyzer import BOOL_T, analyze, linearize_inheritance
from scomma.cli import corpus_dir
from scomma.diagnostics import DiagnosticSink
from scomma.nodes import Constraint, EnumType, Forall, IfElse, walk


def analyze_err(model_text, data_text=None):
    model = parse_ok(model_text)
    data = parse_data_ok(data_text) if data_text else None
    tm, diags = analyze(model, data)
    assert tm is None
    return [d for d in diags if d.is_error]


class TestStructure:
    def test_stable_types(self):
        tm, _, _ = compile_corpus("stable")

    def test_wife_is_enum_typed(self):
        model = parse_ok((corpus_dir() / "stable.scm").read_text())
        data = parse_data_ok((corpus_dir() / "stable.dat").read_text())
        tm = analyze_ok(model, data)
        wife = next(a for a in tm.class_map["Man"].attributes if a.name == "wife")
        assert wife.type == EnumType("womenList")
        rank = next(a for a in tm.class_map["Man"].attributes if a.name == "rank")
        assert len(rank.shape) == 1

    def test_self_inheritance_cycle(self):
        errors = analyze_err("class A extends A { int x in [1,2]; }")
        assert any("cycle" in e.message and "A" in e.message for e in errors)

    def test_mutual_inheritance_cycle(self):
        errors = analyze_err("class A extends B {}\nclass B extends A {}")
        assert any("cycle" in e.message for e in errors)

    def test_composition_cycle(self):
        errors = analyze_err("class A { B b; }\nclass B { A a; }")
        assert any("composition cycle" in e.message for e in errors)

    def test_object_literal_arity(self):
        errors = analyze_err(
            "class M { P p; }\nclass P { int a in [0,1]; int b in [0,1]; }",
            "P M.p := {1, 0, 1};",
        )
        assert any("3 elements" in e.message for e in errors)

    def test_under_filled_object_literal_warns(self):
        model = parse_ok("class M { P p; }\nclass P { int a in [0,1]; int b in [0,1]; }")
        data = parse_data_ok("P M.p := {1};")
        tm, diags = analyze(model, data)
        assert tm is not None
        assert any(d.severity == "warning" and "unassigned" in d.message for d in diags)

    def test_empty_domain_is_analyzer_error(self):
        errors = analyze_err("class A { int x in [1,0]; }")
        assert any("empty" in e.message for e in errors)

    def test_unknown_type(self):
        errors = analyze_err("class A { Widget w; }")
        assert any("unknown type 'Widget'" in e.message for e in errors)

    def test_enum_domain_conflict(self):
        errors = analyze_err(
            "class A { e x in [1,2]; }", "enum e := {P,Q,R};"
        )
        assert any("implicit" in e.message for e in errors)

    def test_two_objectives_rejected(self):
        errors = analyze_err(
            """
            class A {
              int x in [0,5];
              constraint z { [minimize] x; [maximize] x; }
            }
            """
        )
        assert any("at most one" in e.message for e in errors)

    def test_shape_must_be_positive(self):
        errors = analyze_err("class A { int a[0] in [1,2]; }")
        assert any("not positive" in e.message for e in errors)


class TestLinearize:
    def test_superclass_attributes_first(self):
        model = parse_ok(
            "class Root { B b; }\nclass A { int x in [0,1]; }\n"
            "class B extends A { int y in [0,1]; }"
        )
        flat = linearize_inheritance(model)
        b = flat.class_named("B")
        assert [a.name for a in b.attributes] == ["x", "y"]

    def test_no_inheritance_is_identity(self):
        model = parse_ok("class A { int x in [0,1]; }\nclass B { int y in [0,1]; }")
        assert linearize_inheritance(model) == model

    def test_three_level_chain_order(self):
        model = parse_ok(
            "class Root { C c; }\n"
            "class A { int ax in [0,1]; constraint za { ax >= 0; } }\n"
            "class B extends A { int bx in [0,1]; }\n"
            "class C extends B { int cx in [0,1]; constraint zc { cx >= 0; } }"
        )
        flat = linearize_inheritance(model)
        c = flat.class_named("C")
        assert [a.name for a in c.attributes] == ["ax", "bx", "cx"]
        assert [z.name for z in c.zones] == ["za", "zc"]
        assert all(cls.superclass is None for cls in flat.classes)

    def test_inherited_name_collision(self):
        model = parse_ok(
            "class A { int x in [0,1]; }\nclass B extends A { int x in [0,1]; }"
        )
        sink = DiagnosticSink()
        assert linearize_inheritance(model, sink) is None
        assert any("collides" in d.message for d in sink.items)

    def test_zone_typing_sees_inherited_attributes(self):
        model = parse_ok(
            "class Root { B b; }\n"
            "class A { int x in [0,3]; }\n"
            "class B extends A { constraint z { x > 0; } }"
        )
        analyze_ok(model)


class TestTyping:
    def test_every_expr_node_annotated_and_bool_contexts(self):
        tm, _, _ = compile_corpus("packing")
        for cls in tm.class_map.values():
            for zone in cls.zones:
                for item in zone.items:
                    self._check_item(item)

    def _check_item(self, item):
        if isinstance(item, Constraint):
            assert item.expr.ty == BOOL_T
            for node in walk(item.expr):
                assert node.ty is not None
        elif isinstance(item, Forall):
            for sub in item.body:
                self._check_item(sub)
        elif isinstance(item, IfElse):
            assert item.cond.ty == BOOL_T
            for sub in item.then_items:
                self._check_item(sub)
            for sub in item.else_items or ():
                self._check_item(sub)

    def test_loop_variable_scoping(self):
        errors = analyze_err(
            """
            class A {
              int a[3] in [1,3];
              constraint z {
                forall(i in 1..3) a[i] = i;
                a[i] = 1;
              }
            }
            """
        )
        assert any("unknown name 'i'" in e.message for e in errors)

    def test_type_errors_reported(self):
        errors = analyze_err(
            """
            class A {
              int x in [0,5];
              bool b;
              constraint z { x and b; }
            }
            """
        )
        assert any("'and' needs bool" in e.message for e in errors)

    def test_alldifferent_arity(self):
        errors = analyze_err(
            """
            class A {
              int a[3] in [1,3];
              constraint z { alldifferent(a, a); }
            }
            """
        )
        assert any("alldifferent takes exactly one" in e.message for e in errors)

    def test_objective_inside_loop_rejected(self):
        errors = analyze_err(
            """
            class A {
              int a[3] in [1,3];
              constraint z { forall(i in 1..3) [minimize] a[i]; }
            }
            """
        )
        assert any("inside loops" in e.message for e in errors)

    def test_comparing_enum_and_int_is_fine(self):
        model = parse_ok(
            """
            class A {
              e x;
              constraint z { x < 3; }
            }
            """
        )
        analyze_ok(model, parse_data_ok("enum e := {P,Q,R};"))


class TestStability:
    def test_idempotent_on_own_output(self):
        tm, _, _ = compile_corpus("stable")
        model = parse_ok((corpus_dir() / "stable.scm").read_text())
        data = parse_data_ok((corpus_dir() / "stable.dat").read_text())
        tm1 = analyze_ok(model, data)
        tm2 = analyze_ok(tm1.model, data)
        assert tm2.model == tm1.model

    def test_same_bad_input_same_diagnostics(self):
        bad = "class A extends A { Widget w; int x in [1,0]; }"
        model = parse_ok(bad)
        _, d1 = analyze(model)
        _, d2 = analyze(parse_ok(bad))
        assert [x.render() for x in d1] == [x.render() for x in d2]
