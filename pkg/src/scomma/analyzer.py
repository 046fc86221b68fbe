"""Semantic analysis: name resolution, inheritance expansion, type checking,
and structural validation of a model against its data.

``analyze`` collects every error before giving up, so a broken model reports
all its problems in one run, in a stable order.  On success it returns a
:class:`TypedModel` whose classes are inheritance-linearized, whose type
names are resolved, whose enumeration literals are marked as such, and whose
every expression node carries a type annotation.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import Diagnostic, DiagnosticSink, SourceSpan
from .errors import EvalError
from .nodes import (
    ArrayLit,
    Assignment,
    Attribute,
    BinOp,
    BoolLit,
    BoolType,
    Call,
    ClassDef,
    Constraint,
    ConstraintZone,
    ConstDecl,
    DataFile,
    DataValue,
    DomainInterval,
    DomainSet,
    EnumDecl,
    EnumRef,
    EnumType,
    Expr,
    Forall,
    GlobalCall,
    IfElse,
    IntLit,
    IntRange,
    IntType,
    Item,
    Model,
    NamedType,
    NameRange,
    ObjectType,
    Objective,
    RealLit,
    RealType,
    Ref,
    RefPart,
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
    transform,
)

# ---------------------------------------------------------------------------
# Expression types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Type:
    pass


@dataclass(frozen=True)
class TInt(Type):
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class TReal(Type):
    def __str__(self) -> str:
        return "real"


@dataclass(frozen=True)
class TBool(Type):
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class TSet(Type):
    def __str__(self) -> str:
        return "set of int"


@dataclass(frozen=True)
class TObject(Type):
    class_name: str = ""

    def __str__(self) -> str:
        return f"object({self.class_name})"


@dataclass(frozen=True)
class TArray(Type):
    elem: Type = None  # type: ignore[assignment]
    dims: int = 1

    def __str__(self) -> str:
        return f"array{self.dims}d of {self.elem}"


INT_T = TInt()
REAL_T = TReal()
BOOL_T = TBool()
SET_T = TSet()


def _is_numeric(t: Type) -> bool:
    return isinstance(t, (TInt, TReal))


# ---------------------------------------------------------------------------
# Typed model
# ---------------------------------------------------------------------------


@dataclass
class TypedModel:
    """An analyzed model: linearized classes, resolved types, typed expressions."""

    model: Model
    enums: dict[str, EnumDecl]
    constants: dict[str, ConstDecl]
    class_map: dict[str, ClassDef]
    assignments: list[Assignment]

    @property
    def main(self) -> ClassDef:
        return self.class_map[self.model.main_class]


def const_scalar_value(decl: ConstDecl):
    v = decl.value
    if isinstance(v, VInt):
        return v.value
    if isinstance(v, VReal):
        return v.value
    if isinstance(v, VBool):
        return int(v.value)
    return None


def positionalize(
    values: VList, dim: int, enum: EnumDecl | None
) -> tuple[list[DataValue], str | None]:
    """Lay out an array literal over ``dim`` 1-based cells.

    Positional entries must fill the array exactly; keyed entries may cover a
    subset (gaps become omission markers).  Returns (cells, error message).
    """
    if values.keys is None:
        if len(values.items) != dim:
            return [], f"array literal has {len(values.items)} entries, expected {dim}"
        return list(values.items), None
    if enum is None:
        return [], "keyed array entries require an enum-sized array"
    cells: list[DataValue] = [VOmit() for _ in range(dim)]
    seen: set[str] = set()
    for key, item in zip(values.keys, values.items):
        if key in seen:
            return [], f"key '{key}' appears twice"
        seen.add(key)
        try:
            pos = enum.ordinal(key)
        except KeyError:
            return [], f"key '{key}' is not a value of enum '{enum.name}'"
        cells[pos - 1] = item
    return cells, None


class _Env:
    """Lexical environment for zone type checking: loop variables shadow
    attributes, which shadow data constants, which shadow enum values."""

    def __init__(self, analyzer: "_Analyzer", cls: ClassDef):
        self.analyzer = analyzer
        self.cls = cls
        self.loops: list[str] = []


class _Analyzer:
    def __init__(self, model: Model, data: DataFile):
        self.model = model
        self.data = data
        self.sink = DiagnosticSink()
        self.class_map: dict[str, ClassDef] = {}
        self.objective_count = 0

    def _span(self, node) -> SourceSpan:
        span = getattr(node, "span", None)
        return span if span is not None else SourceSpan("<model>", 1, 1, 1)

    def err(self, message: str, node=None) -> None:
        self.sink.error(message, self._span(node))

    def warn(self, message: str, node=None) -> None:
        self.sink.warning(message, self._span(node))

    # -- structure ------------------------------------------------------------

    def run(self) -> TypedModel | None:
        self._check_class_names()
        if self.sink.failed:
            return None
        linear = linearize_inheritance(self.model, self.sink)
        if self.sink.failed or linear is None:
            return None
        self.class_map = {c.name: c for c in linear.classes}
        self._resolve_attribute_types()
        self._check_composition_acyclic()
        if self.sink.failed:
            return None
        self._check_shapes_and_domains()
        typed_classes = tuple(self._type_class(self.class_map[c.name]) for c in linear.classes)
        self._check_assignments()
        if self.objective_count > 1:
            self.err(f"model declares {self.objective_count} objectives; at most one is allowed")
        if self.sink.failed:
            return None
        typed = Model(linear.name, linear.imports, typed_classes, linear.main_class)
        return TypedModel(
            model=typed,
            enums=dict(self.data.enums),
            constants=dict(self.data.constants),
            class_map={c.name: c for c in typed_classes},
            assignments=list(self.data.assignments),
        )

    def _check_class_names(self) -> None:
        seen: set[str] = set()
        for c in self.model.classes:
            if c.name in seen:
                self.err(f"class '{c.name}' defined twice", c)
            seen.add(c.name)
        if self.model.main_class not in {c.name for c in self.model.classes}:
            self.err(f"main class '{self.model.main_class}' is not defined")

    def _resolve_attribute_types(self) -> None:
        for cls in self.class_map.values():
            resolved = []
            for attr in cls.attributes:
                t = attr.type
                if isinstance(t, NamedType):
                    if t.name in self.data.enums:
                        t = EnumType(t.name)
                    elif t.name in self.class_map:
                        t = ObjectType(t.name)
                    else:
                        self.err(
                            f"unknown type '{t.name}' for attribute '{cls.name}.{attr.name}'"
                            " (not a base type, enum, or class)",
                            attr,
                        )
                elif isinstance(t, SetType) and t.elem != "int":
                    if t.elem not in self.data.enums:
                        self.err(
                            f"set element type '{t.elem}' of '{cls.name}.{attr.name}'"
                            " is not an enum",
                            attr,
                        )
                if isinstance(t, ObjectType) and attr.domain is not None:
                    self.err(
                        f"object-typed attribute '{cls.name}.{attr.name}' cannot have a domain",
                        attr,
                    )
                resolved.append(
                    Attribute(attr.name, t, attr.shape, attr.domain, attr.enum_tag, span=attr.span)
                )
            self.class_map[cls.name] = ClassDef(
                cls.name, None, tuple(resolved), cls.zones, span=cls.span
            )

    def _check_composition_acyclic(self) -> None:
        graph = {
            name: [
                a.type.name
                for a in cls.attributes
                if isinstance(a.type, ObjectType) and a.type.name in self.class_map
            ]
            for name, cls in self.class_map.items()
        }
        state: dict[str, int] = {}

        def visit(name: str, trail: list[str]) -> None:
            state[name] = 1
            for succ in graph[name]:
                if state.get(succ) == 1:
                    cycle = " -> ".join(trail + [name, succ])
                    self.err(f"composition cycle: {cycle}", self.class_map[name])
                    continue
                if succ not in state:
                    visit(succ, trail + [name])
            state[name] = 2

        for name in graph:
            if name not in state:
                visit(name, [])

    # -- shapes and domains -----------------------------------------------------

    def shape_size(self, bound: Expr, owner: str) -> int | None:
        """Resolve one shape bound to a positive integer, or report why not."""
        if isinstance(bound, IntLit):
            if bound.value < 1:
                self.err(f"array size {bound.value} of '{owner}' is not positive", bound)
                return None
            return bound.value
        if isinstance(bound, Ref) and bound.simple_name:
            name = bound.simple_name
            if name in self.data.enums:
                return len(self.data.enums[name].values)
            if name in self.data.constants:
                val = const_scalar_value(self.data.constants[name])
                if isinstance(val, int) and val >= 1:
                    return val
                self.err(
                    f"constant '{name}' used as array size of '{owner}' must be a"
                    " positive integer",
                    bound,
                )
                return None
            self.err(f"array size '{name}' of '{owner}' is not a constant or enum", bound)
            return None
        self.err(f"array size of '{owner}' must be a literal, constant, or enum name", bound)
        return None

    def _const_eval(self, e: Expr):
        """Evaluate an expression over data constants; None when not constant."""
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, RealLit):
            return e.value
        if isinstance(e, Ref) and e.simple_name and e.simple_name in self.data.constants:
            return const_scalar_value(self.data.constants[e.simple_name])
        if isinstance(e, UnOp) and e.op == "neg":
            v = self._const_eval(e.operand)
            return None if v is None else -v
        if isinstance(e, BinOp) and e.op in ("+", "-", "*", "/"):
            a = self._const_eval(e.left)
            b = self._const_eval(e.right)
            if a is None or b is None:
                return None
            try:
                if e.op == "+":
                    return a + b
                if e.op == "-":
                    return a - b
                if e.op == "*":
                    return a * b
                if isinstance(a, int) and isinstance(b, int):
                    if b == 0 or a % b:
                        return None
                    return a // b
                return a / b if b else None
            except EvalError:
                return None
        return None

    def _check_shapes_and_domains(self) -> None:
        for cls in self.class_map.values():
            for attr in cls.attributes:
                owner = f"{cls.name}.{attr.name}"
                for bound in attr.shape:
                    self.shape_size(bound, owner)
                dom = attr.domain
                if isinstance(dom, DomainInterval):
                    lo = self._const_eval(dom.lo)
                    hi = self._const_eval(dom.hi)
                    if lo is None or hi is None:
                        self.err(f"domain bounds of '{owner}' must be constant", attr)
                    elif lo > hi:
                        self.err(f"domain of '{owner}' is empty: [{lo},{hi}]", attr)
                elif isinstance(dom, DomainSet):
                    for v in dom.elems:
                        if self._const_eval(v) is None:
                            self.err(f"domain values of '{owner}' must be constant", attr)
                if isinstance(attr.type, EnumType) and dom is not None:
                    self.err(
                        f"'{owner}' has enum type {attr.type.name}; its domain is implicit",
                        attr,
                    )

    # -- zone typing ------------------------------------------------------------

    def _type_class(self, cls: ClassDef) -> ClassDef:
        zones = tuple(
            ConstraintZone(
                z.name,
                tuple(self._type_item(it, cls, []) for it in z.items),
                span=z.span,
            )
            for z in cls.zones
        )
        return ClassDef(cls.name, None, cls.attributes, zones, span=cls.span)

    def _type_item(
        self,
        item: Item,
        cls: ClassDef,
        loops: list[str],
        in_if: bool = False,
        in_loop: bool = False,
    ) -> Item:
        if isinstance(item, Constraint):
            expr = self._type_expr(item.expr, cls, loops)
            self._require(expr, BOOL_T, "constraint", item)
            return Constraint(expr, span=item.span)
        if isinstance(item, Forall):
            rng = item.range
            if isinstance(rng, NameRange):
                if rng.name not in self.data.enums:
                    self.err(f"loop range '{rng.name}' is not an enumeration", item)
            else:
                lo = self._type_expr(rng.lo, cls, loops, range_position=True)
                hi = self._type_expr(rng.hi, cls, loops, range_position=True)
                self._require(lo, INT_T, "loop bound", item)
                self._require(hi, INT_T, "loop bound", item)
                rng = IntRange(lo, hi)
                clo, chi = self._const_eval(lo), self._const_eval(hi)
                if clo is not None and chi is not None and clo > chi:
                    self.warn(f"loop range {clo}..{chi} is empty", item)
            if item.var in loops:
                self.err(f"loop variable '{item.var}' shadows an enclosing loop variable", item)
            inner = loops + [item.var]
            body = tuple(self._type_item(it, cls, inner, in_if, True) for it in item.body)
            return Forall(item.var, rng, body, span=item.span)
        if isinstance(item, IfElse):
            cond = self._type_expr(item.cond, cls, loops)
            self._require(cond, BOOL_T, "if condition", item)
            then_items = tuple(
                self._type_item(it, cls, loops, True, in_loop) for it in item.then_items
            )
            else_items = None
            if item.else_items is not None:
                else_items = tuple(
                    self._type_item(it, cls, loops, True, in_loop) for it in item.else_items
                )
            return IfElse(cond, then_items, else_items, span=item.span)
        if isinstance(item, Objective):
            if in_if:
                self.err("objectives may not appear inside conditionals", item)
            if in_loop:
                self.err("objectives may not appear inside loops", item)
            self.objective_count += 1
            expr = self._type_expr(item.expr, cls, loops)
            if not _is_numeric(expr.ty):
                self.err(f"objective must be numeric, got {expr.ty}", item)
            return Objective(item.kind, expr, span=item.span)
        if isinstance(item, GlobalCall):
            if in_if:
                self.err(f"global constraint '{item.name}' may not appear inside a conditional", item)
            args = tuple(self._type_expr(a, cls, loops) for a in item.args)
            self._check_global(item, args)
            return GlobalCall(item.name, args, span=item.span)
        raise AssertionError(f"unexpected item {type(item).__name__}")

    def _check_global(self, item: GlobalCall, args: tuple[Expr, ...]) -> None:
        def is_int_array(e: Expr) -> bool:
            return isinstance(e.ty, TArray) and isinstance(e.ty.elem, TInt)

        if item.name == "alldifferent":
            if len(args) != 1 or not is_int_array(args[0]):
                self.err("alldifferent takes exactly one integer array", item)
        elif item.name == "cumulatives":
            if len(args) != 3 or not all(is_int_array(a) for a in args):
                self.err("cumulatives takes exactly three integer arrays", item)
        else:
            self.err(f"unknown global constraint '{item.name}'", item)

    def _require(self, expr: Expr, t: Type, what: str, node) -> None:
        if expr.ty is not None and expr.ty != t:
            self.err(f"{what} must be {t}, got {expr.ty}", node)

    # -- expression typing --------------------------------------------------------

    def _type_expr(
        self, e: Expr, cls: ClassDef, loops: list[str], range_position: bool = False
    ) -> Expr:
        """Return a typed copy of ``e`` with enum literals resolved."""

        def rewrite(node: Expr) -> Expr:
            # Enum literals and identifiers share a token class; a bare name
            # that is neither a loop variable, attribute, nor constant is
            # resolved against the enum value tables here.
            if isinstance(node, Ref) and node.simple_name:
                name = node.simple_name
                if (
                    name not in loops
                    and self._attr_of(cls, name) is None
                    and name not in self.data.constants
                ):
                    for enum in self.data.enums.values():
                        if name in enum.values:
                            return EnumRef(enum.name, name, enum.ordinal(name), span=node.span)
            return node

        typed = transform(e, rewrite)
        self._assign_types(typed, cls, loops)
        if range_position:
            self._check_range_refs(typed, loops)
        return typed

    def _check_range_refs(self, e: Expr, loops: list[str]) -> None:
        from .nodes import walk

        for node in walk(e):
            if isinstance(node, Ref):
                head = node.parts[0].name
                if head not in loops and head not in self.data.constants:
                    self.err(
                        "loop bounds may only use constants and enclosing loop variables",
                        node,
                    )

    def _attr_of(self, cls: ClassDef, name: str) -> Attribute | None:
        for a in cls.attributes:
            if a.name == name:
                return a
        return None

    def _attr_value_type(self, attr: Attribute) -> Type:
        t = attr.type
        if isinstance(t, (IntType, EnumType)):
            base: Type = INT_T
        elif isinstance(t, RealType):
            base = REAL_T
        elif isinstance(t, BoolType):
            base = BOOL_T
        elif isinstance(t, SetType):
            base = SET_T
        elif isinstance(t, ObjectType):
            base = TObject(t.name)
        else:
            base = INT_T
        if attr.shape:
            return TArray(base, len(attr.shape))
        return base

    def _path_type(self, ref: Ref, cls: ClassDef, loops: list[str]) -> Type:
        current: Type | None = None
        for i, part in enumerate(ref.parts):
            if i == 0:
                if part.name in loops:
                    if part.indices:
                        self.err(f"loop variable '{part.name}' cannot be indexed", ref)
                    current = INT_T
                    continue
                attr = self._attr_of(cls, part.name)
                if attr is not None:
                    current = self._apply_indices(part, self._attr_value_type(attr), ref)
                    continue
                const = self.data.constants.get(part.name)
                if const is not None:
                    current = self._apply_indices(part, self._const_type(const), ref)
                    continue
                if part.name in self.data.enums:
                    self.err(f"enumeration '{part.name}' used as a value", ref)
                    return INT_T
                self.err(f"unknown name '{part.name}' in class '{cls.name}'", ref)
                return INT_T
            if not isinstance(current, TObject):
                self.err(f"'{ref.parts[i - 1].name}' is not an object; cannot access"
                         f" '{part.name}'", ref)
                return INT_T
            target = self.class_map.get(current.class_name)
            attr = self._attr_of(target, part.name) if target else None
            if attr is None:
                self.err(f"class '{current.class_name}' has no attribute '{part.name}'", ref)
                return INT_T
            current = self._apply_indices(part, self._attr_value_type(attr), ref)
        return current if current is not None else INT_T

    def _const_type(self, const: ConstDecl) -> Type:
        if isinstance(const.type, RealType):
            base: Type = REAL_T
        elif isinstance(const.type, BoolType):
            base = BOOL_T
        else:
            base = INT_T
        if const.shape:
            return TArray(base, len(const.shape))
        if isinstance(const.value, VList):
            inner = const.value
            if inner.items and isinstance(inner.items[0], VList):
                return TArray(base, 2)
            return TArray(base, 1)
        return base

    def _apply_indices(self, part: RefPart, t: Type, ref: Ref) -> Type:
        for idx in part.indices:
            if idx.ty is not None and idx.ty != INT_T:
                self.err(f"index into '{part.name}' must be an integer", ref)
        if not part.indices:
            return t
        if not isinstance(t, TArray):
            self.err(f"'{part.name}' is not an array but is indexed", ref)
            return t
        if len(part.indices) != t.dims:
            self.err(
                f"'{part.name}' takes {t.dims} index(es), got {len(part.indices)}", ref
            )
        return t.elem

    def _assign_types(self, e: Expr, cls: ClassDef, loops: list[str]) -> None:
        """Bottom-up type computation; indices are typed before their paths."""
        for c in _children_of(e):
            if c.ty is None:
                self._assign_types(c, cls, loops)
        if e.ty is not None:
            return
        if isinstance(e, EnumRef):
            e.ty = INT_T
        elif isinstance(e, Ref):
            e.ty = self._path_type(e, cls, loops)
        elif isinstance(e, IntLit):
            e.ty = INT_T
        elif isinstance(e, RealLit):
            e.ty = REAL_T
        elif isinstance(e, BoolLit):
            e.ty = BOOL_T
        elif isinstance(e, SetLit):
            for el in e.elems:
                if el.ty != INT_T:
                    self.err("set literals hold integers", e)
            e.ty = SET_T
        elif isinstance(e, ArrayLit):
            for el in e.elems:
                if el.ty != INT_T:
                    self.err("array literals hold integer expressions", e)
            e.ty = TArray(INT_T, 1)
        elif isinstance(e, UnOp):
            if e.op == "not":
                if e.operand.ty != BOOL_T:
                    self.err(f"'not' needs a bool operand, got {e.operand.ty}", e)
                e.ty = BOOL_T
            else:
                if not _is_numeric(e.operand.ty):
                    self.err(f"negation needs a numeric operand, got {e.operand.ty}", e)
                e.ty = e.operand.ty if _is_numeric(e.operand.ty) else INT_T
        elif isinstance(e, Call):
            if e.name == "cardinality":
                if len(e.args) != 1 or e.args[0].ty != SET_T:
                    self.err("cardinality takes one set argument", e)
                e.ty = INT_T
            else:
                self.err(f"unknown function '{e.name}' in expression", e)
                e.ty = INT_T
        elif isinstance(e, BinOp):
            e.ty = self._binop_type(e)
        elif e.ty is None:
            e.ty = INT_T

    def _binop_type(self, e: BinOp) -> Type:
        lt, rt = e.left.ty, e.right.ty
        op = e.op
        if op in ("+", "-", "*", "/"):
            if not (_is_numeric(lt) and _is_numeric(rt)):
                self.err(f"'{op}' needs numeric operands, got {lt} and {rt}", e)
                return INT_T
            return REAL_T if REAL_T in (lt, rt) else INT_T
        if op in ("<", ">", "<=", ">="):
            if not (_is_numeric(lt) and _is_numeric(rt)):
                self.err(f"'{op}' compares numbers, got {lt} and {rt}", e)
            return BOOL_T
        if op in ("=", "<>"):
            numeric = _is_numeric(lt) and _is_numeric(rt)
            same = lt == rt and lt in (BOOL_T, SET_T)
            if not (numeric or same):
                self.err(f"'{op}' operands do not match: {lt} and {rt}", e)
            return BOOL_T
        if op in ("and", "or", "xor", "->", "<-", "<->"):
            if lt != BOOL_T or rt != BOOL_T:
                self.err(f"'{op}' needs bool operands, got {lt} and {rt}", e)
            return BOOL_T
        if op == "in":
            if lt != INT_T or rt != SET_T:
                self.err(f"'in' needs int and set operands, got {lt} and {rt}", e)
            return BOOL_T
        if op in ("subset", "superset"):
            if lt != SET_T or rt != SET_T:
                self.err(f"'{op}' needs set operands, got {lt} and {rt}", e)
            return BOOL_T
        if op in ("union", "diff", "symdiff", "intersection"):
            if lt != SET_T or rt != SET_T:
                self.err(f"'{op}' needs set operands, got {lt} and {rt}", e)
            return SET_T
        self.err(f"unknown operator '{op}'", e)
        return INT_T

    # -- data assignments ---------------------------------------------------------

    def _check_assignments(self) -> None:
        for asg in self.data.assignments:
            if asg.path[0] != self.model.main_class:
                self.err(
                    f"assignment path '{'.'.join(asg.path)}' must start at the main class"
                    f" '{self.model.main_class}'",
                    asg,
                )
                continue
            cls = self.class_map[self.model.main_class]
            attr: Attribute | None = None
            ok = True
            for seg in asg.path[1:]:
                if cls is None:
                    ok = False
                    break
                attr = self._attr_of(cls, seg)
                if attr is None:
                    self.err(f"'{cls.name}' has no attribute '{seg}'", asg)
                    ok = False
                    break
                cls = (
                    self.class_map.get(attr.type.name)
                    if isinstance(attr.type, ObjectType)
                    else None
                )
            if not ok or attr is None:
                if attr is None and ok:
                    self.err("assignment path names no attribute", asg)
                continue
            self._check_assigned_value(asg, attr)

    def _check_assigned_value(self, asg: Assignment, attr: Attribute) -> None:
        expected = attr.type.name if isinstance(attr.type, (ObjectType, EnumType)) else None
        if expected and asg.type_name != expected:
            self.err(
                f"assignment declares type '{asg.type_name}' but attribute"
                f" '{attr.name}' holds {expected}",
                asg,
            )
        self._match_value(asg.value, attr, ".".join(asg.path), asg)

    def _shape_dims(self, attr: Attribute) -> list[int]:
        dims = []
        for bound in attr.shape:
            size = self.shape_size(bound, attr.name)
            dims.append(size if size else 1)
        return dims

    def _shape_enum(self, attr: Attribute, axis: int) -> EnumDecl | None:
        if axis >= len(attr.shape):
            return None
        bound = attr.shape[axis]
        if isinstance(bound, Ref) and bound.simple_name in self.data.enums:
            return self.data.enums[bound.simple_name]
        return None

    def _match_value(self, value: DataValue, attr: Attribute, where: str, asg) -> None:
        if isinstance(value, VOmit):
            return
        if attr.shape:
            if not isinstance(value, VList):
                self.err(f"'{where}' is an array; expected an array literal", asg)
                return
            dims = self._shape_dims(attr)
            cells, problem = positionalize(value, dims[0], self._shape_enum(attr, 0))
            if problem:
                self.err(f"'{where}': {problem}", asg)
                return
            inner = Attribute(attr.name, attr.type, attr.shape[1:], attr.domain, span=attr.span)
            for i, cell in enumerate(cells, start=1):
                self._match_value(cell, inner, f"{where}[{i}]", asg)
            return
        if isinstance(attr.type, ObjectType):
            if not isinstance(value, VObj):
                self.err(f"'{where}' holds an object; expected an object literal", asg)
                return
            target = self.class_map[attr.type.name]
            if len(value.items) > len(target.attributes):
                self.err(
                    f"object literal for '{where}' has {len(value.items)} elements but"
                    f" class '{target.name}' has {len(target.attributes)} attributes",
                    asg,
                )
                return
            if len(value.items) < len(target.attributes):
                missing = [a.name for a in target.attributes[len(value.items):]]
                self.warn(
                    f"object literal for '{where}' leaves {', '.join(missing)} unassigned;"
                    " treated as decision variables",
                    asg,
                )
            for sub, sub_attr in zip(value.items, target.attributes):
                self._match_value(sub, sub_attr, f"{where}.{sub_attr.name}", asg)
            return
        if isinstance(attr.type, EnumType):
            enum = self.data.enums[attr.type.name]
            if isinstance(value, VSym):
                if value.name not in enum.values:
                    self.err(f"'{value.name}' is not a value of enum '{enum.name}'", asg)
            elif isinstance(value, VInt):
                if not (1 <= value.value <= len(enum.values)):
                    self.err(
                        f"ordinal {value.value} for '{where}' outside 1..{len(enum.values)}",
                        asg,
                    )
            else:
                self.err(f"'{where}' expects a value of enum '{enum.name}'", asg)
            return
        if isinstance(attr.type, IntType) and not isinstance(value, VInt):
            self.err(f"'{where}' expects an integer value", asg)
        elif isinstance(attr.type, RealType) and not isinstance(value, (VReal, VInt)):
            self.err(f"'{where}' expects a real value", asg)
        elif isinstance(attr.type, BoolType) and not isinstance(value, VBool):
            self.err(f"'{where}' expects true or false", asg)
        elif isinstance(attr.type, SetType):
            self.err(f"set attribute '{where}' cannot be assigned from data", asg)


def _children_of(e: Expr):
    from .nodes import children

    return children(e)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def linearize_inheritance(model: Model, sink: DiagnosticSink | None = None) -> Model | None:
    """Copy inherited attributes and zones into each class (superclass members
    first, order preserved) and drop the ``extends`` links."""
    own_sink = sink or DiagnosticSink()
    by_name = {c.name: c for c in model.classes}
    for cls in model.classes:
        if cls.superclass is not None and cls.superclass not in by_name:
            own_sink.error(
                f"class '{cls.name}' extends unknown class '{cls.superclass}'",
                cls.span or SourceSpan("<model>", 1, 1),
            )
    if own_sink.failed:
        return None

    order: dict[str, int] = {}

    def chain(name: str, seen: tuple[str, ...]) -> bool:
        if name in seen:
            cycle = " -> ".join(seen[seen.index(name):] + (name,))
            own_sink.error(
                f"inheritance cycle: {cycle}",
                by_name[name].span or SourceSpan("<model>", 1, 1),
            )
            return False
        sup = by_name[name].superclass
        if sup is None:
            return True
        return chain(sup, seen + (name,))

    for cls in model.classes:
        if not chain(cls.name, ()):
            return None

    flat: dict[str, ClassDef] = {}

    def build(name: str) -> ClassDef:
        if name in flat:
            return flat[name]
        cls = by_name[name]
        if cls.superclass is None:
            out = ClassDef(cls.name, None, cls.attributes, cls.zones, span=cls.span)
        else:
            sup = build(cls.superclass)
            names = {a.name for a in sup.attributes}
            for a in cls.attributes:
                if a.name in names:
                    own_sink.error(
                        f"attribute '{a.name}' of '{cls.name}' collides with an"
                        f" inherited attribute",
                        a.span or SourceSpan("<model>", 1, 1),
                    )
            out = ClassDef(
                cls.name,
                None,
                sup.attributes + cls.attributes,
                sup.zones + cls.zones,
                span=cls.span,
            )
        flat[name] = out
        return out

    classes = tuple(build(c.name) for c in model.classes)
    if own_sink.failed:
        return None
    order.clear()
    return Model(model.name, model.imports, classes, model.main_class)


def analyze(model: Model, data: DataFile | None = None) -> tuple[TypedModel | None, list[Diagnostic]]:
    """Validate and type a parsed model against its data file."""
    a = _Analyzer(model, data or DataFile())
    typed = a.run()
    if a.sink.failed:
        return None, a.sink.items
    return typed, a.sink.items
