"""Brute-force oracles: flat-model enumeration and a direct model interpreter.

The two sides are deliberately separate code paths.  ``enumerate_flat``
walks the flat model's variables and re-evaluates flat constraints through
:mod:`scomma.evaluate`.  ``ModelInterpreter`` never flattens anything: it
executes the analyzed source model natively — loops iterate, conditionals
branch, object paths are followed through an instance tree — and names its
decision slots with the same prefix scheme the flattener uses so solution
sets can be compared directly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .analyzer import TypedModel, positionalize
from .errors import EvalError, UnsupportedModelError
from .evaluate import eval_expr
from .ir import (
    BOOL,
    FlatModel,
    INT,
    IntInterval,
    REAL,
    SET,
    Solution,
)
from .nodes import (
    ArrayLit,
    Attribute,
    BinOp,
    BoolLit,
    BoolType,
    Call,
    ClassDef,
    Constraint,
    DomainInterval,
    DomainSet,
    EnumRef,
    EnumType,
    Expr,
    Forall,
    GlobalCall,
    IfElse,
    IntLit,
    IntType,
    Item,
    NameRange,
    Objective,
    RealLit,
    RealType,
    Ref,
    SetLit,
    SetType,
    UnOp,
    VBool,
    VInt,
    VList,
    VObj,
    VOmit,
    VReal,
    VSym,
)

# ---------------------------------------------------------------------------
# Flat-model brute force
# ---------------------------------------------------------------------------


def _element_domain(var) -> list:
    if var.base == BOOL:
        return [False, True]
    if var.base == INT:
        return list(var.domain.values())
    if var.base == SET:
        if not isinstance(var.domain, IntInterval):
            raise UnsupportedModelError(["set variable without an interval universe"])
        universe = list(var.domain.values())
        subsets = []
        for mask in range(1 << len(universe)):
            subsets.append(frozenset(universe[i] for i in range(len(universe)) if mask >> i & 1))
        return subsets
    raise UnsupportedModelError([f"{var.base} variables cannot be enumerated"])


def count_candidates(fm: FlatModel) -> int:
    """Size of the brute-force search space (product of element domain sizes)."""
    total = 1
    for var in fm.variables:
        if var.base == REAL:
            raise UnsupportedModelError(["real variables cannot be enumerated"])
        per = (
            2 ** var.domain.size
            if var.base == SET
            else (2 if var.base == BOOL else var.domain.size)
        )
        total *= per ** var.element_count
    return total


def enumerate_flat(fm: FlatModel) -> list[Solution]:
    """Every satisfying total assignment, by exhaustive enumeration."""
    keys: list = []
    domains: list[list] = []
    for var in fm.variables:
        dom = _element_domain(var)
        for idx in var.element_indices():
            keys.append((var.name, idx))
            domains.append(dom)
    solutions: list[Solution] = []
    exprs = [c.expr for c in fm.constraints]
    for combo in itertools.product(*domains):
        asg = dict(zip(keys, combo))
        if all(eval_expr(e, asg, fm.tables) for e in exprs):
            solutions.append(Solution(dict(asg)))
    return solutions


def flat_solution_set(fm: FlatModel) -> set[frozenset]:
    return {s.as_frozen() for s in enumerate_flat(fm)}


# ---------------------------------------------------------------------------
# Direct interpreter over the analyzed source model
# ---------------------------------------------------------------------------


@dataclass
class _DecSlot:
    key: tuple[str, tuple[int, ...]]
    values: list


class _Obj:
    def __init__(self, cls: ClassDef):
        self.cls = cls
        self.attrs: dict[str, object] = {}


class ModelInterpreter:
    """Executes an analyzed model directly, without any flattening pass."""

    def __init__(self, tm: TypedModel):
        self.tm = tm
        self.enums = tm.enums
        self.constants: dict[str, object] = {}
        self.slots: list[_DecSlot] = []
        self._load_constants()
        self.root = self._build_object(tm.main, "")
        self._apply_assignments()
        self._collect_slots(self.root, "")

    # -- construction -----------------------------------------------------------

    def _value_of(self, v):
        if isinstance(v, VInt):
            return v.value
        if isinstance(v, VReal):
            return v.value
        if isinstance(v, VBool):
            return v.value
        if isinstance(v, VSym):
            for enum in self.enums.values():
                if v.name in enum.values:
                    return enum.ordinal(v.name)
            raise EvalError(f"unknown enum literal '{v.name}'")
        raise EvalError("unexpected data value")

    def _load_constants(self) -> None:
        for name, decl in self.tm.constants.items():
            v = decl.value
            if isinstance(v, VList):
                self.constants[name] = self._const_array(v)
            else:
                self.constants[name] = self._value_of(v)

    def _const_array(self, v: VList):
        items = self._positional(v)
        out = []
        for item in items:
            if isinstance(item, VList):
                out.append(self._positional_values(item))
            else:
                out.append(self._value_of(item))
        return out

    def _positional(self, v: VList) -> list:
        if not v.keys:
            return list(v.items)
        enum = self._enum_for_keys(v.keys)
        cells, problem = positionalize(v, len(enum.values), enum)
        if problem:
            raise EvalError(problem)
        return cells

    def _positional_values(self, v: VList) -> list:
        return [self._value_of(x) for x in self._positional(v)]

    def _enum_for_keys(self, keys):
        for enum in self.enums.values():
            if all(k in enum.values for k in keys):
                return enum
        raise EvalError(f"keys {list(keys)} match no enum")

    def _shape_dims(self, attr: Attribute) -> list[int]:
        dims = []
        for bound in attr.shape:
            val = self._const_eval_static(bound)
            if not isinstance(val, int) or val < 1:
                raise EvalError(f"shape of '{attr.name}' is not a positive constant")
            dims.append(val)
        return dims

    def _const_eval_static(self, e: Expr):
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, RealLit):
            return e.value
        if isinstance(e, EnumRef):
            return e.ordinal
        if isinstance(e, Ref) and e.simple_name:
            name = e.simple_name
            if name in self.enums:
                return len(self.enums[name].values)
            if name in self.constants and not isinstance(self.constants[name], list):
                return self.constants[name]
        if isinstance(e, UnOp) and e.op == "neg":
            return -self._const_eval_static(e.operand)
        if isinstance(e, BinOp) and e.op in ("+", "-", "*"):
            a = self._const_eval_static(e.left)
            b = self._const_eval_static(e.right)
            return {"+": a + b, "-": a - b, "*": a * b}[e.op]
        raise EvalError("expression is not statically constant")

    def _domain_values(self, attr: Attribute) -> list:
        t = attr.type
        if isinstance(t, BoolType):
            return [False, True]
        if isinstance(t, EnumType):
            return list(range(1, len(self.enums[t.name].values) + 1))
        dom = attr.domain
        if isinstance(t, SetType):
            if not isinstance(dom, DomainInterval):
                raise UnsupportedModelError(["set attribute without an interval universe"])
            lo = self._const_eval_static(dom.lo)
            hi = self._const_eval_static(dom.hi)
            universe = list(range(lo, hi + 1))
            return [
                frozenset(u for i, u in enumerate(universe) if mask >> i & 1)
                for mask in range(1 << len(universe))
            ]
        if isinstance(t, RealType):
            raise UnsupportedModelError(["real decision variables cannot be enumerated"])
        if dom is None:
            raise EvalError(f"attribute '{attr.name}' has no finite domain")
        if isinstance(dom, DomainSet):
            return sorted({self._const_eval_static(v) for v in dom.elems})
        lo = self._const_eval_static(dom.lo)
        hi = self._const_eval_static(dom.hi)
        return list(range(lo, hi + 1))

    def _build_object(self, cls: ClassDef, label: str) -> _Obj:
        obj = _Obj(cls)
        for attr in cls.attributes:
            if isinstance(attr.type, (IntType, RealType, BoolType, SetType, EnumType)):
                if attr.shape:
                    dims = self._shape_dims(attr)
                    obj.attrs[attr.name] = {"dims": dims, "cells": {}}
                else:
                    obj.attrs[attr.name] = {"dims": None, "cells": {}}
            else:
                target = self.tm.class_map[attr.type.name]
                if attr.shape:
                    n = self._shape_dims(attr)[0]
                    obj.attrs[attr.name] = [
                        self._build_object(target, f"{label}.{attr.name}[{i}]")
                        for i in range(1, n + 1)
                    ]
                else:
                    obj.attrs[attr.name] = self._build_object(target, f"{label}.{attr.name}")
        return obj

    def _apply_assignments(self) -> None:
        for asg in self.tm.assignments:
            obj = self.root
            cls = self.tm.class_map[self.tm.model.main_class]
            attr = None
            for seg in asg.path[1:]:
                attr = next(a for a in cls.attributes if a.name == seg)
                if seg != asg.path[-1]:
                    obj = obj.attrs[seg]
                    cls = self.tm.class_map[attr.type.name]
            self._assign(obj, attr, asg.value)

    def _assign(self, obj: _Obj, attr: Attribute, value) -> None:
        if isinstance(value, VOmit):
            return
        primitive = isinstance(attr.type, (IntType, RealType, BoolType, SetType, EnumType))
        if primitive and not attr.shape:
            obj.attrs[attr.name]["cells"][()] = self._coerce(attr, value)
            return
        if primitive:
            dims = self._shape_dims(attr)
            cells = self._layout(value, dims)
            for idx, v in cells:
                obj.attrs[attr.name]["cells"][idx] = self._coerce(attr, v)
            return
        if not attr.shape:
            self._assign_object(obj.attrs[attr.name], attr, value)
            return
        items = self._positional(value)
        for i, item in enumerate(items, start=1):
            if isinstance(item, VOmit):
                continue
            self._assign_object(obj.attrs[attr.name][i - 1], attr, item)

    def _assign_object(self, child: _Obj, attr: Attribute, value) -> None:
        if not isinstance(value, VObj):
            raise EvalError(f"'{attr.name}' expects an object literal")
        target = self.tm.class_map[attr.type.name]
        for sub_attr, sub_value in zip(target.attributes, value.items):
            self._assign(child, sub_attr, sub_value)

    def _coerce(self, attr: Attribute, value):
        return self._value_of(value)

    def _layout(self, value, dims) -> list[tuple[tuple[int, ...], object]]:
        if not isinstance(value, VList):
            raise EvalError("array attribute expects an array literal")
        out = []
        rows = self._positional(value)
        if len(dims) == 1:
            for i, cell in enumerate(rows, start=1):
                if not isinstance(cell, VOmit):
                    out.append(((i,), cell))
            return out
        for i, row in enumerate(rows, start=1):
            if isinstance(row, VOmit):
                continue
            for j, cell in enumerate(self._positional(row), start=1):
                if not isinstance(cell, VOmit):
                    out.append(((i, j), cell))
        return out

    # -- decision slots ------------------------------------------------------------

    def _collect_slots(self, obj: _Obj, prefix: str) -> None:
        for attr in obj.cls.attributes:
            entry = obj.attrs[attr.name]
            if isinstance(entry, dict):
                flat_name = prefix + attr.name
                if entry["dims"] is None:
                    if () not in entry["cells"]:
                        slot = _DecSlot((flat_name, ()), self._domain_values(attr))
                        entry["cells"][()] = slot
                        self.slots.append(slot)
                else:
                    dims = entry["dims"]
                    for idx in _indices(dims):
                        if idx not in entry["cells"]:
                            slot = _DecSlot((flat_name, idx), self._domain_values(attr))
                            entry["cells"][idx] = slot
                            self.slots.append(slot)
            elif isinstance(entry, _Obj):
                self._collect_slots(entry, prefix + attr.name + "_")
            else:  # object array: grouped scalar naming matches the flattener
                for i, child in enumerate(entry, start=1):
                    for child_attr in child.cls.attributes:
                        child_entry = child.attrs[child_attr.name]
                        if isinstance(child_entry, dict) and child_entry["dims"] is None:
                            flat_name = prefix + attr.name + "_" + child_attr.name
                            if () not in child_entry["cells"]:
                                slot = _DecSlot(
                                    (flat_name, (i,)), self._domain_values(child_attr)
                                )
                                child_entry["cells"][()] = slot
                                self.slots.append(slot)
                for i, child in enumerate(entry, start=1):
                    child_prefix = f"{prefix}{attr.name}_{i}_"
                    for child_attr in child.cls.attributes:
                        child_entry = child.attrs[child_attr.name]
                        if isinstance(child_entry, dict) and child_entry["dims"] is None:
                            continue
                        if isinstance(child_entry, dict):
                            dims = child_entry["dims"]
                            flat_name = child_prefix + child_attr.name
                            for idx in _indices(dims):
                                if idx not in child_entry["cells"]:
                                    slot = _DecSlot(
                                        (flat_name, idx), self._domain_values(child_attr)
                                    )
                                    child_entry["cells"][idx] = slot
                                    self.slots.append(slot)
                        elif isinstance(child_entry, _Obj):
                            self._collect_slots(child_entry, child_prefix + child_attr.name + "_")
                        else:
                            raise UnsupportedModelError(
                                ["object arrays nested inside object arrays are not"
                                 " enumerable here"]
                            )

    # -- evaluation -------------------------------------------------------------

    def candidate_count(self) -> int:
        total = 1
        for slot in self.slots:
            total *= len(slot.values)
        return total

    def solutions(self) -> list[dict]:
        """All satisfying assignments, keyed like flat solutions."""
        out = []
        for combo in itertools.product(*(s.values for s in self.slots)):
            env = {s.key: v for s, v in zip(self.slots, combo)}
            if self._satisfied(env):
                out.append(dict(env))
        return out

    def solution_set(self) -> set[frozenset]:
        return {frozenset(sol.items()) for sol in self.solutions()}

    def optimum(self):
        """(kind, best objective value) by exhaustive search; None if no
        objective or no solution."""
        obj_item = self._find_objective()
        if obj_item is None:
            return None
        best = None
        for combo in itertools.product(*(s.values for s in self.slots)):
            env = {s.key: v for s, v in zip(self.slots, combo)}
            if not self._satisfied(env):
                continue
            val = self._eval(obj_item.expr, self.root, {}, env)
            if best is None:
                best = val
            elif obj_item.kind == "minimize":
                best = min(best, val)
            else:
                best = max(best, val)
        return (obj_item.kind, best)

    def _find_objective(self) -> Objective | None:
        for cls in self.tm.class_map.values():
            for zone in cls.zones:
                for item in zone.items:
                    if isinstance(item, Objective):
                        return item
        return None

    def _satisfied(self, env: dict) -> bool:
        return self._eval_object_zones(self.root, env)

    def _eval_object_zones(self, obj: _Obj, env: dict) -> bool:
        for attr in obj.cls.attributes:
            entry = obj.attrs[attr.name]
            if isinstance(entry, _Obj):
                if not self._eval_object_zones(entry, env):
                    return False
            elif isinstance(entry, list):
                for child in entry:
                    if not self._eval_object_zones(child, env):
                        return False
        for zone in obj.cls.zones:
            for item in zone.items:
                if not self._eval_item(item, obj, {}, env):
                    return False
        return True

    def _eval_item(self, item: Item, obj: _Obj, loops: dict, env: dict) -> bool:
        if isinstance(item, Constraint):
            v = self._eval(item.expr, obj, loops, env)
            if not isinstance(v, bool):
                raise EvalError("constraint did not evaluate to a bool")
            return v
        if isinstance(item, Forall):
            for v in self._range_values(item.range, obj, loops, env):
                inner = dict(loops)
                inner[item.var] = v
                for sub in item.body:
                    if not self._eval_item(sub, obj, inner, env):
                        return False
            return True
        if isinstance(item, IfElse):
            cond = self._eval(item.cond, obj, loops, env)
            branch = item.then_items if cond else (item.else_items or ())
            return all(self._eval_item(sub, obj, loops, env) for sub in branch)
        if isinstance(item, Objective):
            return True
        if isinstance(item, GlobalCall):
            if item.name == "alldifferent":
                values = self._array_values(item.args[0], obj, loops, env)
                return len(set(values)) == len(values)
            raise UnsupportedModelError([f"global constraint '{item.name}'"])
        raise EvalError(f"unexpected item {type(item).__name__}")

    def _range_values(self, rng, obj: _Obj, loops: dict, env: dict):
        if isinstance(rng, NameRange):
            return range(1, len(self.enums[rng.name].values) + 1)
        lo = self._eval(rng.lo, obj, loops, env)
        hi = self._eval(rng.hi, obj, loops, env)
        return range(lo, hi + 1)

    def _array_values(self, e: Expr, obj: _Obj, loops: dict, env: dict) -> list:
        if isinstance(e, ArrayLit):
            return [self._eval(x, obj, loops, env) for x in e.elems]
        if isinstance(e, Ref):
            target, dims = self._locate_array(e, obj, loops, env)
            if isinstance(target, list):  # constant array
                return list(target)
            return [self._cell_value(target, idx, env) for idx in _indices(dims)]
        raise EvalError("alldifferent argument must be an array")

    def _cell_value(self, entry: dict, idx: tuple, env: dict):
        cell = entry["cells"][idx]
        if isinstance(cell, _DecSlot):
            return env[cell.key]
        return cell

    def _locate_array(self, ref: Ref, obj: _Obj, loops: dict, env: dict):
        """Resolve an index-free reference to an array attribute or constant."""
        name = ref.parts[0].name
        if len(ref.parts) == 1 and not ref.parts[0].indices and name in self.constants:
            arr = self.constants[name]
            if not isinstance(arr, list):
                raise EvalError(f"'{name}' is not an array")
            return arr, None
        entry, _ = self._walk_path(ref, obj, loops, env, want_array=True)
        if not (isinstance(entry, dict) and entry["dims"]):
            raise EvalError(f"'{name}' is not an array attribute")
        return entry, tuple(entry["dims"])

    def _eval(self, e: Expr, obj: _Obj, loops: dict, env: dict):
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, RealLit):
            return e.value
        if isinstance(e, BoolLit):
            return e.value
        if isinstance(e, EnumRef):
            return e.ordinal
        if isinstance(e, SetLit):
            return frozenset(self._eval(x, obj, loops, env) for x in e.elems)
        if isinstance(e, UnOp):
            v = self._eval(e.operand, obj, loops, env)
            return (not v) if e.op == "not" else -v
        if isinstance(e, Call):
            if e.name == "cardinality":
                return len(self._eval(e.args[0], obj, loops, env))
            raise EvalError(f"unknown function '{e.name}'")
        if isinstance(e, BinOp):
            return self._eval_binop(e, obj, loops, env)
        if isinstance(e, Ref):
            value, _ = self._walk_path(e, obj, loops, env, want_array=False)
            return value
        raise EvalError(f"cannot evaluate {type(e).__name__}")

    def _eval_binop(self, e: BinOp, obj: _Obj, loops: dict, env: dict):
        op = e.op
        a = self._eval(e.left, obj, loops, env)
        if op == "and":
            return bool(a) and bool(self._eval(e.right, obj, loops, env))
        if op == "or":
            return bool(a) or bool(self._eval(e.right, obj, loops, env))
        b = self._eval(e.right, obj, loops, env)
        tol = 1e-9
        is_real = isinstance(a, float) or isinstance(b, float)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0:
                raise EvalError("division by zero")
            if isinstance(a, int) and isinstance(b, int):
                if a % b:
                    raise EvalError(f"inexact integer division {a}/{b}")
                return a // b
            return a / b
        if op == "=":
            if is_real:
                return abs(a - b) <= tol
            return a == b
        if op == "<>":
            if is_real:
                return abs(a - b) > tol
            return a != b
        if op == "<":
            return (b - a > tol) if is_real else a < b
        if op == ">":
            return (a - b > tol) if is_real else a > b
        if op == "<=":
            return (a - b <= tol) if is_real else a <= b
        if op == ">=":
            return (b - a <= tol) if is_real else a >= b
        if op == "xor":
            return bool(a) != bool(b)
        if op == "->":
            return (not a) or bool(b)
        if op == "<-":
            return bool(a) or (not b)
        if op == "<->":
            return bool(a) == bool(b)
        if op == "in":
            return a in b
        if op == "subset":
            return a <= b
        if op == "superset":
            return a >= b
        if op == "union":
            return a | b
        if op == "diff":
            return a - b
        if op == "symdiff":
            return a ^ b
        if op == "intersection":
            return a & b
        raise EvalError(f"unknown operator '{op}'")

    def _walk_path(self, ref: Ref, obj: _Obj, loops: dict, env: dict, want_array: bool):
        current: object = obj
        for k, part in enumerate(ref.parts):
            last = k == len(ref.parts) - 1
            idx = tuple(self._eval(i, obj, loops, env) for i in part.indices)
            if k == 0 and part.name in loops and not idx:
                return loops[part.name], None
            if k == 0 and not isinstance(current, _Obj):
                raise EvalError("bad path root")
            if isinstance(current, _Obj) and part.name in current.attrs:
                entry = current.attrs[part.name]
            elif k == 0 and part.name in self.constants:
                return self._const_lookup(part.name, idx), None
            else:
                raise EvalError(f"unknown attribute '{part.name}'")
            if isinstance(entry, _Obj):
                current = entry
                continue
            if isinstance(entry, list):  # object array
                if len(idx) != 1:
                    raise EvalError(f"object array '{part.name}' needs one index")
                if not (1 <= idx[0] <= len(entry)):
                    raise EvalError(f"object index {idx[0]} out of range for '{part.name}'")
                current = entry[idx[0] - 1]
                continue
            # primitive attribute
            if not last:
                raise EvalError(f"'{part.name}' has no attributes")
            if entry["dims"] is None:
                return self._cell_value(entry, (), env), None
            if not idx:
                if want_array:
                    return entry, tuple(entry["dims"])
                raise EvalError(f"array '{part.name}' used as a scalar")
            dims = entry["dims"]
            if len(idx) != len(dims) or any(not (1 <= i <= d) for i, d in zip(idx, dims)):
                raise EvalError(f"index {list(idx)} out of range for '{part.name}'")
            return self._cell_value(entry, idx, env), None
        if want_array:
            raise EvalError("path names an object, not an array")
        raise EvalError("path names an object, not a value")

    def _const_lookup(self, name: str, idx: tuple):
        value = self.constants[name]
        if not idx:
            return value
        if not isinstance(value, list):
            raise EvalError(f"constant '{name}' is not an array")
        if len(idx) == 1:
            if not (1 <= idx[0] <= len(value)):
                raise EvalError(f"index {idx[0]} out of range for '{name}'")
            return value[idx[0] - 1]
        row = value[idx[0] - 1]
        if not isinstance(row, list) or not (1 <= idx[1] <= len(row)):
            raise EvalError(f"index {list(idx)} out of range for '{name}'")
        return row[idx[1] - 1]


def _indices(dims):
    if dims is None:
        return [()]
    if len(dims) == 1:
        return [(i,) for i in range(1, dims[0] + 1)]
    return [(i, j) for i in range(1, dims[0] + 1) for j in range(1, dims[1] + 1)]


def interp_solution_set(tm: TypedModel) -> set[frozenset]:
    return ModelInterpreter(tm).solution_set()
