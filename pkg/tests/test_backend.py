
import pytest

from conftest import CORPUS_NAMES, FIXTURES, compile_corpus, compile_text
from scomma.backend import (
    apply_rewrites,
    compile_to_target,
    direct_emit,
    emit,
    find_target,
    list_targets,
    parse_descriptor,
)
from scomma.backend.rules import (
    decompose_set_matrix,
    int_bounds_widen,
    rename_reserved_words,
    split_matrix_to_arrays,
)
from scomma.errors import BackendError
from scomma.interp import flat_solution_set
from scomma.ir import FlatModel
from scomma.printer import render_expr


def setmat_model():
    _tm, fm = compile_text((FIXTURES / "setmat.scm").read_text())
    return fm


class TestDescriptorParsing:
    def test_builtin_flat_descriptor_has_core_templates(self):
        flat = find_target("flat")
        for concept in ("Problem", "Variable", "ArrayShape", "Domain",
                        "Constraint", "EnumType"):
            assert concept in flat.templates

    def test_problem_only_descriptor_is_valid(self):
        bd, diags = parse_descriptor('target t; template Problem : "hi" ;')
        assert bd is not None, [d.render() for d in diags]
        assert bd.name == "t"

    def test_missing_problem_template_rejected(self):
        bd, diags = parse_descriptor('target t; template Variable : name ;')
        assert bd is None
        assert any("Problem" in d.message for d in diags)

    def test_repeated_field_use_is_fine(self):
        bd, _ = parse_descriptor('target t; template Problem : name name ;')
        assert bd is not None

    def test_unknown_concept_rejected(self):
        bd, diags = parse_descriptor('target t; template Gadget : name ;')
        assert bd is None
        assert any("unknown concept 'Gadget'" in d.message for d in diags)

    def test_unknown_field_rejected(self):
        bd, diags = parse_descriptor('target t; template Problem : wings ;')
        assert bd is None
        assert any("unknown field" in d.message for d in diags)

    def test_rewrite_and_unsupported_declarations(self):
        bd, _ = parse_descriptor(
            'target t;\n'
            'rewrite rename_reserved_words("class", "int");\n'
            'unsupported set_matrix fixedBy decompose_set_matrix;\n'
            'template Problem : "x" ;'
        )
        assert bd is not None
        assert bd.rewrites == [("rename_reserved_words", ("class", "int"))]
        assert bd.unsupported == [("set_matrix", "decompose_set_matrix")]


class TestRewriteRules:
    def test_identity_rule_list(self, stable):
        _tm, fm = stable
        assert apply_rewrites(fm, []) is fm

    def test_decompose_set_matrix_two_by_three(self):
        _tm, fm = compile_text(
            """
            class M {
              set of int s[2,3] in [1,2];
              constraint z { cardinality(s[1,2]) = 1; }
            }
            """
        )
        out = decompose_set_matrix(fm)
        names = [v.name for v in out.variables]
        assert names == ["s1_1", "s1_2", "s1_3", "s2_1", "s2_2", "s2_3"]
        assert all(v.shape == () for v in out.variables)
        assert render_expr(out.constraints[0].expr) == "cardinality(s1_2)=1"

    def test_decompose_guard_false_leaves_model_alone(self, stable):
        _tm, fm = stable
        assert decompose_set_matrix(fm) is fm

    def test_decompose_soundness_on_setmat(self):
        fm = setmat_model()
        before = flat_solution_set(fm)
        after_fm = decompose_set_matrix(fm)
        after = flat_solution_set(after_fm)

        def rename(key):
            name, idx = key
            return (f"{name}{idx[0]}_{idx[1]}", ())

        renamed = {frozenset((rename(k), v) for k, v in sol) for sol in before}
        assert renamed == after

    def test_split_matrix_to_arrays(self):
        _tm, fm = compile_text(
            """
            class M {
              int g[2,2] in [0,1];
              constraint z { g[1,1] + g[2,2] <= 1; }
            }
            """
        )
        out = split_matrix_to_arrays(fm)
        assert [v.name for v in out.variables] == ["g_1", "g_2"]
        assert all(v.shape == (2,) for v in out.variables)
        assert render_expr(out.constraints[0].expr) == "g_1[1]+g_2[2]<=1"
        before = flat_solution_set(fm)
        after = flat_solution_set(out)

        def rename(key):
            name, idx = key
            return (f"{name}_{idx[0]}", (idx[1],))

        renamed = {frozenset((rename(k), v) for k, v in sol) for sol in before}
        assert renamed == after

    def test_rename_reserved_words(self):
        _tm, fm = compile_text(
            "class M { int class_ in [0,1]; int x in [0,1]; constraint z { class_ + x <= 1; } }"
        )
        out = rename_reserved_words(fm, ("class_", "x"))
        assert [v.name for v in out.variables] == ["class__", "x_"]
        assert render_expr(out.constraints[0].expr) == "class__+x_<=1"
        before = {frozenset(v for _, v in sorted(sol)) for sol in flat_solution_set(fm)}
        after = {frozenset(v for _, v in sorted(sol)) for sol in flat_solution_set(out)}
        assert before == after

    def test_int_bounds_widen_preserves_solutions(self):
        _tm, fm = compile_text(
            "class M { int x in [2,4]; constraint z { x <> 3; } }"
        )
        out = int_bounds_widen(fm, (0, 10))
        var = out.variables[0]
        assert (var.domain.lo, var.domain.hi) == (0, 10)
        assert {tuple(sorted(s)) for s in flat_solution_set(out)} == {
            tuple(sorted(s)) for s in flat_solution_set(fm)
        }

    def test_unknown_rule_name(self, stable):
        _tm, fm = stable
        with pytest.raises(BackendError):
            apply_rewrites(fm, [("no_such_rule", ())])


class TestEmission:
    def test_flat_stable_contains_fig_layout(self, stable):
        _tm, fm = stable
        text = emit(fm, find_target("flat"))
        assert text.index("variables:") < text.index("constraints:") < text.index("enum-types:")
        assert "womenList man_wife[5] in [1,5];" in text
        assert "menList woman_husband[5] in [1,5];" in text
        assert "woman_husband[man_wife[1]]=1;" in text
        assert "menList := {Richard,James,John,Hugh,Greg};" in text
        assert "womenList := {Helen,Tracy,Linda,Sally,Wanda};" in text

    def test_gecodej_stable_matches_pinned_fragment(self, stable):
        _tm, fm = stable
        text = compile_to_target(fm, find_target("gecodej"))
        assert 'initialize("man_wife",5,1,5)' in text.replace(" ", "")
        assert "vars.addAll(man_wife);" in text
        assert text.rstrip().endswith("}")

    def test_empty_model_emits_sections_and_footer(self):
        fm = FlatModel(name="Empty")
        text = emit(fm, find_target("flat"))
        assert "variables:" in text and "constraints:" in text
        assert "enum-types:" not in text  # empty list, section omitted
        jtext = emit(fm, find_target("gecodej"))
        assert jtext.startswith("package comma.solverFiles.gecodej;")
        assert jtext.rstrip().endswith("}")

    def test_direct_emit_equals_emit_for_flat(self, stable):
        _tm, fm = stable
        flat = find_target("flat")
        assert direct_emit(fm, flat) == emit(fm, flat)

    def test_clp_direct_emit_rejects_set_matrix_naming_fix(self):
        fm = setmat_model()
        clp = find_target("clp")
        with pytest.raises(BackendError) as exc:
            direct_emit(fm, clp)
        assert "decompose_set_matrix" in str(exc.value)

    def test_clp_full_pipeline_handles_set_matrix(self):
        fm = setmat_model()
        text = compile_to_target(fm, find_target("clp"))
        assert "s1_1" in text and "s2_2" in text

    def test_gecodej_on_queens_has_expected_shape(self):
        _tm, fm, _ = compile_corpus("queens-10")
        text = compile_to_target(fm, find_target("gecodej"))
        assert 'VarArray<IntVar> q = initialize("q",10,1,10);' in text
        assert text.count("post(this,") == len(fm.constraints)
        assert text.count("{") == text.count("}")

    def test_missing_template_is_emit_time_error(self, stable):
        _tm, fm = stable
        bd, _ = parse_descriptor('target t; template Problem : (foreach v in variables ? v) ;')
        with pytest.raises(BackendError) as exc:
            emit(fm, bd)
        assert "no template for concept 'Variable'" in str(exc.value)

    def test_unknown_field_in_template_rejected_at_parse(self):
        bd, diags = parse_descriptor(
            'target t; template Problem : (foreach v in variables ? v) ;'
            ' template Variable : wings ;'
        )
        assert bd is None
        assert any("wings" in d.message for d in diags)

    def test_unknown_field_inside_foreach_is_render_time_error(self, stable):
        # loop bodies see the item's concept, so they are checked when emitted
        _tm, fm = stable
        bd, diags = parse_descriptor(
            'target t; template Problem : (foreach v in variables ? v.wings) ;'
        )
        assert bd is not None, [d.render() for d in diags]
        with pytest.raises(BackendError) as exc:
            emit(fm, bd)
        assert "wings" in str(exc.value)

    @pytest.mark.parametrize("name", CORPUS_NAMES)
    @pytest.mark.parametrize("target", ["flat", "gecodej", "clp"])
    def test_double_emission_byte_identical(self, name, target):
        _tm, fm, _ = compile_corpus(name)
        bd = find_target(target)
        assert compile_to_target(fm, bd) == compile_to_target(fm, bd)


class TestTargetDiscovery:
    def test_three_builtins(self):
        targets, warnings = list_targets()
        assert sorted(t.name for t in targets) == ["clp", "flat", "gecodej"]
        assert warnings == []

    def test_user_file_adds_target(self, tmp_path):
        extra = tmp_path / "mini.bd"
        extra.write_text('target mini; extension ".txt"; template Problem : name ;')
        targets, _ = list_targets(extra_files=(str(extra),))
        assert sorted(t.name for t in targets) == ["clp", "flat", "gecodej", "mini"]

    def test_duplicate_name_shadows_with_warning(self, tmp_path):
        extra = tmp_path / "shadow.bd"
        extra.write_text('target flat; extension ".x"; template Problem : name ;')
        targets, warnings = list_targets(extra_files=(str(extra),))
        flat = next(t for t in targets if t.name == "flat")
        assert flat.extension == ".x"
        assert any("shadows" in w for w in warnings)

    def test_env_path_directory_is_searched(self, tmp_path, monkeypatch):
        (tmp_path / "envtarget.bd").write_text(
            'target envt; extension ".e"; template Problem : name ;'
        )
        monkeypatch.setenv("SCOMMA_TARGET_PATH", str(tmp_path))
        targets, _ = list_targets()
        assert any(t.name == "envt" for t in targets)


class TestRewriteSoundnessOnCorpus:
    def test_decompose_fires_on_reduced_golfers_and_preserves_solutions(self):
        # golfers is the corpus model with a matrix of sets; at the reduced
        # instance size the before/after solution sets are enumerable
        from conftest import parse_data_ok, parse_ok
        from scomma.analyzer import analyze
        from scomma.cli import corpus_dir
        from scomma.flattener import flatten

        model = parse_ok((corpus_dir() / "golfers.scm").read_text())
        data = parse_data_ok((FIXTURES / "golfers-tiny.dat").read_text())
        tm, _ = analyze(model, data)
        fm, _ = flatten(tm)
        before = flat_solution_set(fm)
        assert before
        rewritten = decompose_set_matrix(fm)
        assert [v.shape for v in rewritten.variables] == [()] * 4
        after = flat_solution_set(rewritten)

        def rename(sol):
            return frozenset(((f"{n}{i[0]}_{i[1]}", ()), v) for (n, i), v in sol)

        assert {rename(s) for s in before} == after
