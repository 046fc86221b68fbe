"""The lowering pipeline from an analyzed model to a flat model.

Six passes run in a fixed order:

1. ``substitute_enums``    — enum literals become 1-based ordinals, enum types
   become integer ranges, enum-sized shapes become cardinalities; the label
   tables are kept for rendering solutions.
2. ``substitute_data``     — scalar constants are replaced by their values,
   constant arrays become lookup tables, and variable-assignments are laid
   out into per-object slot bindings.
3. ``unroll_loops``        — every forall is replaced by one copy of its body
   per range value with the loop variable substituted (outermost first).
4. ``expand_composition``  — the object tree reachable from the main class is
   inlined into prefixed flat variables; constant slots fold into literals or
   element-constraint tables.
5. ``remove_conditionals`` — ``if a then b else c`` becomes the pair
   ``a -> b`` and ``a or c``.
6. ``normalize_logic``     — ``a <-> b`` becomes ``(a -> b) and (b -> a)``;
   ``a <- b`` becomes ``b -> a``.

Unrolling runs before composition expansion on purpose: per-object arrays
(``man_1_rank``) can only be addressed once object indices are constants.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .analyzer import TypedModel, positionalize
from .errors import FlattenError
from .ir import (
    BOOL,
    Domain,
    FlatConstraint,
    FlatModel,
    FlatObjective,
    FlatVar,
    INT,
    IntInterval,
    IntSet,
    REAL,
    RealInterval,
    SET,
    Table,
    flatness_violations,
)
from .nodes import (
    Attribute,
    BinOp,
    BoolLit,
    BoolType,
    Call,
    ClassDef,
    Constraint,
    ConstraintZone,
    ConstDecl,
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
    NameRange,
    Objective,
    RealLit,
    RealType,
    Ref,
    RefPart,
    SetType,
    VBool,
    VInt,
    VList,
    VObj,
    VOmit,
    VReal,
    children,
    transform,
)
from .printer import render_expr


@dataclass
class PassTrace:
    """Instrumentation: (pass name, node count before, node count after)."""

    steps: list[tuple[str, int, int]] = field(default_factory=list)

    def record(self, name: str, before: int, after: int) -> None:
        self.steps.append((name, before, after))


@dataclass
class FlattenState:
    """Pipeline state threaded through the six passes.

    Before ``expand_composition`` the model lives in ``classes``; afterwards
    it lives in ``variables``/``tables``/``items``.
    """

    name: str
    classes: dict[str, ClassDef]
    main: str
    enums: dict[str, EnumDecl]
    constants: dict[str, ConstDecl]
    assignments: list
    enum_types: dict[str, tuple[str, ...]] = field(default_factory=dict)
    const_scalars: dict[str, object] = field(default_factory=dict)
    const_tables: dict[str, Table] = field(default_factory=dict)
    binding: dict | None = None
    variables: list[FlatVar] = field(default_factory=list)
    tables: dict[str, Table] = field(default_factory=dict)
    items: list[Item] = field(default_factory=list)
    origins: list[str] = field(default_factory=list)
    expanded: bool = False


def _count_expr(e: Expr) -> int:
    return 1 + sum(_count_expr(c) for c in children(e))


def _count_item(item: Item) -> int:
    if isinstance(item, Constraint):
        return 1 + _count_expr(item.expr)
    if isinstance(item, GlobalCall):
        return 1 + sum(_count_expr(a) for a in item.args)
    if isinstance(item, Objective):
        return 1 + _count_expr(item.expr)
    if isinstance(item, Forall):
        n = 1 + sum(_count_item(i) for i in item.body)
        if isinstance(item.range, IntRange):
            n += _count_expr(item.range.lo) + _count_expr(item.range.hi)
        return n
    if isinstance(item, IfElse):
        n = 1 + _count_expr(item.cond) + sum(_count_item(i) for i in item.then_items)
        if item.else_items is not None:
            n += sum(_count_item(i) for i in item.else_items)
        return n
    return 1


def node_count(state: FlattenState) -> int:
    if state.expanded:
        return (
            len(state.variables)
            + len(state.tables)
            + sum(_count_item(i) for i in state.items)
        )
    total = 0
    for cls in state.classes.values():
        total += len(cls.attributes)
        for zone in cls.zones:
            total += sum(_count_item(i) for i in zone.items)
    return total


# ---------------------------------------------------------------------------
# Constant folding
# ---------------------------------------------------------------------------


def _literal(value) -> Expr:
    if isinstance(value, bool):
        return BoolLit(value)
    if isinstance(value, float):
        return RealLit(value)
    return IntLit(value)


def fold_expr(e: Expr, tables: dict[str, Table] | None = None) -> Expr:
    """Fold constant arithmetic and constant-index table lookups.

    Comparisons and logical operators are left alone: redundancy removal is
    not this compiler's job, and keeping them preserves source shape.
    """
    tables = tables or {}

    def fold(node: Expr) -> Expr:
        if isinstance(node, BinOp) and node.op in ("+", "-", "*", "/"):
            l, r = node.left, node.right
            if isinstance(l, (IntLit, RealLit)) and isinstance(r, (IntLit, RealLit)):
                a, b = l.value, r.value
                if node.op == "+":
                    return _literal(a + b)
                if node.op == "-":
                    return _literal(a - b)
                if node.op == "*":
                    return _literal(a * b)
                if b != 0:
                    if isinstance(a, int) and isinstance(b, int):
                        if a % b == 0:
                            return _literal(a // b)
                        return node  # inexact: leave for the evaluator to reject
                    return _literal(a / b)
                return node
        if isinstance(node, Ref) and len(node.parts) == 1:
            part = node.parts[0]
            table = tables.get(part.name)
            if (
                table is not None
                and part.indices
                and all(isinstance(i, IntLit) for i in part.indices)
            ):
                idx = tuple(i.value for i in part.indices)
                try:
                    return _literal(table.lookup(idx))
                except IndexError:
                    raise FlattenError(
                        f"constant index {list(idx)} outside the bounds of '{part.name}'"
                    ) from None
        return node

    return transform(e, fold)


def _fold_to_int(e: Expr, state: FlattenState, what: str, pass_name: str) -> int:
    folded = fold_expr(e, state.const_tables)
    if isinstance(folded, IntLit):
        return folded.value
    raise FlattenError(f"{what} '{render_expr(e)}' is not a constant integer", pass_name)


def _map_zone_exprs(state: FlattenState, fn) -> None:
    """Apply ``fn`` to every expression in every zone of every class."""

    def map_item(item: Item) -> Item:
        if isinstance(item, Constraint):
            return Constraint(fn(item.expr), span=item.span)
        if isinstance(item, GlobalCall):
            return GlobalCall(item.name, tuple(fn(a) for a in item.args), span=item.span)
        if isinstance(item, Objective):
            return Objective(item.kind, fn(item.expr), span=item.span)
        if isinstance(item, Forall):
            rng = item.range
            if isinstance(rng, IntRange):
                rng = IntRange(fn(rng.lo), fn(rng.hi))
            return Forall(item.var, rng, tuple(map_item(i) for i in item.body), span=item.span)
        if isinstance(item, IfElse):
            else_items = (
                tuple(map_item(i) for i in item.else_items)
                if item.else_items is not None
                else None
            )
            return IfElse(fn(item.cond), tuple(map_item(i) for i in item.then_items),
                          else_items, span=item.span)
        return item

    for name, cls in state.classes.items():
        zones = tuple(
            ConstraintZone(z.name, tuple(map_item(i) for i in z.items), span=z.span)
            for z in cls.zones
        )
        state.classes[name] = ClassDef(cls.name, None, cls.attributes, zones, span=cls.span)


def _enum_of_keys(keys: tuple[str, ...], state: FlattenState, what: str) -> EnumDecl:
    for enum in state.enums.values():
        if all(k in enum.values for k in keys):
            return enum
    raise FlattenError(
        f"{what}: keys {list(keys)} do not all belong to one enum", "substitute_enums"
    )


# ---------------------------------------------------------------------------
# Pass 1: enumeration substitution
# ---------------------------------------------------------------------------


def substitute_enums(state: FlattenState) -> FlattenState:
    used: dict[str, tuple[str, ...]] = {}

    def use(name: str) -> EnumDecl:
        decl = state.enums[name]
        used.setdefault(name, decl.values)
        return decl

    def sub_bound(bound: Expr) -> Expr:
        if isinstance(bound, Ref) and bound.simple_name in state.enums:
            return IntLit(len(use(bound.simple_name).values), span=bound.span)
        return bound

    def sub_expr(e: Expr) -> Expr:
        def repl(node: Expr) -> Expr:
            if isinstance(node, EnumRef):
                use(node.enum_name)
                return IntLit(node.ordinal, span=node.span)
            return node

        return transform(e, repl)

    for name, cls in state.classes.items():
        attrs = []
        for a in cls.attributes:
            shape = tuple(sub_bound(b) for b in a.shape)
            domain = a.domain
            tag = a.enum_tag
            atype = a.type
            if isinstance(atype, EnumType):
                decl = use(atype.name)
                tag = atype.name
                atype = IntType()
                domain = DomainInterval(IntLit(1), IntLit(len(decl.values)))
            elif isinstance(atype, SetType) and atype.elem != "int":
                decl = use(atype.elem)
                tag = atype.elem
                atype = SetType("int")
                if domain is None:
                    domain = DomainInterval(IntLit(1), IntLit(len(decl.values)))
            if isinstance(domain, DomainInterval):
                domain = DomainInterval(sub_expr(domain.lo), sub_expr(domain.hi))
            elif isinstance(domain, DomainSet):
                domain = DomainSet(tuple(sub_expr(v) for v in domain.elems))
            attrs.append(Attribute(a.name, atype, shape, domain, tag, span=a.span))
        state.classes[name] = ClassDef(cls.name, None, tuple(attrs), cls.zones, span=cls.span)

    def map_range(item: Item) -> Item:
        if isinstance(item, Forall):
            rng = item.range
            if isinstance(rng, NameRange):
                decl = use(rng.name)
                rng = IntRange(IntLit(1), IntLit(len(decl.values)))
            return Forall(item.var, rng, tuple(map_range(i) for i in item.body), span=item.span)
        if isinstance(item, IfElse):
            else_items = (
                tuple(map_range(i) for i in item.else_items)
                if item.else_items is not None
                else None
            )
            return IfElse(item.cond, tuple(map_range(i) for i in item.then_items),
                          else_items, span=item.span)
        return item

    for name, cls in state.classes.items():
        zones = tuple(
            ConstraintZone(z.name, tuple(map_range(i) for i in z.items), span=z.span)
            for z in cls.zones
        )
        state.classes[name] = ClassDef(cls.name, None, cls.attributes, zones, span=cls.span)

    _map_zone_exprs(state, sub_expr)

    def sub_value(v: DataValue) -> DataValue:
        from .nodes import VSym

        if isinstance(v, VSym):
            for enum in state.enums.values():
                if v.name in enum.values:
                    use(enum.name)
                    return VInt(enum.ordinal(v.name))
            raise FlattenError(f"unresolvable enum literal '{v.name}'", "substitute_enums")
        if isinstance(v, VList):
            if v.keys:
                # keyed entries are laid out here, while the key enum is known
                enum = _enum_of_keys(v.keys, state, "keyed array")
                use(enum.name)
                cells, problem = positionalize(v, len(enum.values), enum)
                if problem:
                    raise FlattenError(f"keyed array: {problem}", "substitute_enums")
                return VList(tuple(sub_value(i) for i in cells), None)
            return VList(tuple(sub_value(i) for i in v.items), None)
        if isinstance(v, VObj):
            return VObj(tuple(sub_value(i) for i in v.items))
        return v

    state.constants = {
        n: ConstDecl(c.name, c.type, tuple(sub_bound(b) for b in c.shape), sub_value(c.value),
                     span=c.span)
        for n, c in state.constants.items()
    }
    state.assignments = [
        replace(a, value=sub_value(a.value)) for a in state.assignments
    ]
    state.enum_types = used
    return state


# ---------------------------------------------------------------------------
# Pass 2: data substitution
# ---------------------------------------------------------------------------


def _const_dims(decl: ConstDecl, state: FlattenState) -> tuple[int, ...]:
    dims = []
    for bound in decl.shape:
        if isinstance(bound, IntLit):
            dims.append(bound.value)
        elif isinstance(bound, Ref) and bound.simple_name in state.const_scalars:
            dims.append(int(state.const_scalars[bound.simple_name]))
        else:
            raise FlattenError(
                f"array size of constant '{decl.name}' is not constant", "substitute_data"
            )
    if dims:
        return tuple(dims)
    # infer from the literal when no shape was declared
    v = decl.value
    if isinstance(v, VList):
        if v.items and isinstance(v.items[0], VList):
            return (len(v.items), len(v.items[0].items))
        return (len(v.items),)
    return ()


def _plain(v: DataValue, what: str):
    if isinstance(v, VInt):
        return v.value
    if isinstance(v, VReal):
        return v.value
    if isinstance(v, VBool):
        return int(v.value)
    raise FlattenError(f"{what} must be a constant value", "substitute_data")


def substitute_data(state: FlattenState) -> FlattenState:
    # Constant declarations become scalars or lookup tables (keyed entries
    # were already laid out positionally by enumeration substitution).
    for name, decl in state.constants.items():
        value = decl.value
        if not isinstance(value, VList):
            state.const_scalars[name] = _plain(value, f"constant '{name}'")
    for name, decl in state.constants.items():
        value = decl.value
        if not isinstance(value, VList):
            continue
        dims = _const_dims(decl, state)
        cells = _layout_list(value, dims, f"constant '{name}'")
        flat = tuple(_plain(c, f"constant '{name}'") for c in cells)
        state.const_tables[name] = Table(name, dims, flat)

    def sub_expr(e: Expr) -> Expr:
        def repl(node: Expr) -> Expr:
            if isinstance(node, Ref) and node.simple_name in state.const_scalars:
                return _literal(state.const_scalars[node.simple_name])
            return node

        return fold_expr(transform(e, repl), state.const_tables)

    # resolve constant names inside attribute shapes and domains
    for name, cls in state.classes.items():
        attrs = []
        for a in cls.attributes:
            shape = tuple(sub_expr(b) for b in a.shape)
            domain = a.domain
            if isinstance(domain, DomainInterval):
                domain = DomainInterval(sub_expr(domain.lo), sub_expr(domain.hi))
            elif isinstance(domain, DomainSet):
                domain = DomainSet(tuple(sub_expr(v) for v in domain.elems))
            attrs.append(Attribute(a.name, a.type, shape, domain, a.enum_tag, span=a.span))
        state.classes[name] = ClassDef(cls.name, None, tuple(attrs), cls.zones, span=cls.span)

    _map_zone_exprs(state, sub_expr)
    state.binding = _build_binding(state)
    return state


def _layout_list(value: VList, dims: tuple[int, ...], what: str) -> list[DataValue]:
    """Row-major cell layout of a positional (possibly nested) array literal."""
    if not dims:
        raise FlattenError(f"{what}: array value assigned to a scalar", "substitute_data")
    cells, problem = positionalize(value, dims[0], None)
    if problem:
        raise FlattenError(f"{what}: {problem}", "substitute_data")
    if len(dims) == 1:
        return cells
    out: list[DataValue] = []
    for i, cell in enumerate(cells, start=1):
        if isinstance(cell, VOmit):
            out.extend(VOmit() for _ in range(dims[1]))
            continue
        if not isinstance(cell, VList):
            raise FlattenError(f"{what}[{i}]: expected a row literal", "substitute_data")
        out.extend(_layout_list(cell, dims[1:], f"{what}[{i}]"))
    return out


def _build_binding(state: FlattenState) -> dict:
    """Instance slot values for the whole object tree under the main class."""

    def fresh(cls: ClassDef) -> dict:
        out: dict = {}
        for a in cls.attributes:
            if isinstance(a.type, (IntType, RealType, BoolType, SetType)):
                out[a.name] = {}  # index tuple -> constant value
            else:
                target = state.classes[a.type.name]
                if a.shape:
                    n = _attr_dims(a, state)[0]
                    out[a.name] = [fresh(target) for _ in range(n)]
                else:
                    out[a.name] = fresh(target)
        return out

    binding = fresh(state.classes[state.main])
    for asg in state.assignments:
        slot_owner = binding
        cls = state.classes[state.main]
        attr = None
        for seg in asg.path[1:-1]:
            attr = _attr_named(cls, seg)
            slot_owner = slot_owner[seg]
            cls = state.classes[attr.type.name]
        attr = _attr_named(cls, asg.path[-1])
        _bind_value(slot_owner, attr, asg.value, state, ".".join(asg.path))
    return binding


def _attr_named(cls: ClassDef, name: str) -> Attribute:
    for a in cls.attributes:
        if a.name == name:
            return a
    raise FlattenError(f"class '{cls.name}' has no attribute '{name}'", "substitute_data")


def _attr_dims(attr: Attribute, state: FlattenState) -> tuple[int, ...]:
    dims = []
    for bound in attr.shape:
        folded = fold_expr(bound, state.const_tables)
        if isinstance(folded, IntLit) and folded.value >= 1:
            dims.append(folded.value)
        else:
            raise FlattenError(
                f"array size of '{attr.name}' did not resolve to a positive constant",
                "substitute_data",
            )
    return tuple(dims)


def _bind_value(slot_owner, attr: Attribute, value: DataValue, state: FlattenState, where: str) -> None:
    if isinstance(value, VOmit):
        return
    primitive = isinstance(attr.type, (IntType, RealType, BoolType, SetType))
    if not attr.shape:
        if primitive:
            slot_owner[attr.name][()] = _plain(value, where)
        else:
            _bind_object(slot_owner[attr.name], attr, value, state, where)
        return
    dims = _attr_dims(attr, state)
    if not isinstance(value, VList):
        raise FlattenError(f"{where}: array attribute needs an array literal", "substitute_data")
    cells, problem = positionalize(value, dims[0], None)
    if problem:
        raise FlattenError(f"{where}: {problem}", "substitute_data")
    for i, cell in enumerate(cells, start=1):
        if isinstance(cell, VOmit):
            continue
        if len(dims) == 2:
            if not isinstance(cell, VList):
                raise FlattenError(f"{where}[{i}]: expected a row literal", "substitute_data")
            row, problem = positionalize(cell, dims[1], None)
            if problem:
                raise FlattenError(f"{where}[{i}]: {problem}", "substitute_data")
            for j, v in enumerate(row, start=1):
                if isinstance(v, VOmit):
                    continue
                slot_owner[attr.name][(i, j)] = _plain(v, f"{where}[{i},{j}]")
        elif primitive:
            slot_owner[attr.name][(i,)] = _plain(cell, f"{where}[{i}]")
        else:
            _bind_object(slot_owner[attr.name][i - 1], attr, cell, state, f"{where}[{i}]")


def _bind_object(obj_binding: dict, attr: Attribute, value: DataValue, state: FlattenState, where: str) -> None:
    if not isinstance(value, VObj):
        raise FlattenError(f"{where}: expected an object literal", "substitute_data")
    target = state.classes[attr.type.name]
    if len(value.items) > len(target.attributes):
        raise FlattenError(
            f"{where}: object literal has more elements than '{target.name}' has attributes",
            "substitute_data",
        )
    for sub_attr, sub_value in zip(target.attributes, value.items):
        _bind_value(obj_binding, sub_attr, sub_value, state, f"{where}.{sub_attr.name}")


# ---------------------------------------------------------------------------
# Pass 3: loop unrolling
# ---------------------------------------------------------------------------


def _subst_loop_var(item: Item, var: str, value: int) -> Item:
    lit = IntLit(value)

    def repl(node: Expr) -> Expr:
        if isinstance(node, Ref) and node.parts[0].name == var:
            if len(node.parts) == 1 and not node.parts[0].indices:
                return lit
        return node

    def sub_expr(e: Expr) -> Expr:
        return fold_expr(transform(e, repl))

    if isinstance(item, Constraint):
        return Constraint(sub_expr(item.expr), span=item.span)
    if isinstance(item, GlobalCall):
        return GlobalCall(item.name, tuple(sub_expr(a) for a in item.args), span=item.span)
    if isinstance(item, Objective):
        return Objective(item.kind, sub_expr(item.expr), span=item.span)
    if isinstance(item, Forall):
        rng = item.range
        if isinstance(rng, IntRange):
            rng = IntRange(sub_expr(rng.lo), sub_expr(rng.hi))
        return Forall(
            item.var, rng, tuple(_subst_loop_var(i, var, value) for i in item.body),
            span=item.span,
        )
    if isinstance(item, IfElse):
        else_items = (
            tuple(_subst_loop_var(i, var, value) for i in item.else_items)
            if item.else_items is not None
            else None
        )
        return IfElse(
            sub_expr(item.cond),
            tuple(_subst_loop_var(i, var, value) for i in item.then_items),
            else_items,
            span=item.span,
        )
    return item


def _unroll_item(item: Item, state: FlattenState) -> list[Item]:
    if isinstance(item, Forall):
        rng = item.range
        if not isinstance(rng, IntRange):
            raise FlattenError(f"loop range '{rng.name}' was not substituted", "unroll_loops")
        lo = _fold_to_int(rng.lo, state, "loop bound", "unroll_loops")
        hi = _fold_to_int(rng.hi, state, "loop bound", "unroll_loops")
        out: list[Item] = []
        for v in range(lo, hi + 1):
            for body_item in item.body:
                out.extend(_unroll_item(_subst_loop_var(body_item, item.var, v), state))
        return out
    if isinstance(item, IfElse):
        then_items = tuple(
            sub for it in item.then_items for sub in _unroll_item(it, state)
        )
        else_items = None
        if item.else_items is not None:
            else_items = tuple(
                sub for it in item.else_items for sub in _unroll_item(it, state)
            )
        return [IfElse(item.cond, then_items, else_items, span=item.span)]
    return [item]


def unroll_loops(state: FlattenState) -> FlattenState:
    for name, cls in state.classes.items():
        zones = tuple(
            ConstraintZone(
                z.name,
                tuple(out for it in z.items for out in _unroll_item(it, state)),
                span=z.span,
            )
            for z in cls.zones
        )
        state.classes[name] = ClassDef(cls.name, None, cls.attributes, zones, span=cls.span)
    return state


# ---------------------------------------------------------------------------
# Pass 4: composition expansion
# ---------------------------------------------------------------------------


@dataclass
class _SlotConst:
    value: object


@dataclass
class _SlotScalarVar:
    name: str


@dataclass
class _SlotGroupedVar:
    name: str
    index: int


@dataclass
class _SlotArrayVar:
    name: str
    dims: tuple[int, ...]


@dataclass
class _SlotTable:
    table: Table


@dataclass
class _Instance:
    cls: ClassDef
    slots: dict[str, object]
    label: str


@dataclass
class _SlotObj:
    inst: _Instance


@dataclass
class _SlotObjArray:
    insts: list[_Instance]
    # attr name -> ("var", flat name) | ("table", Table): targets reachable
    # through a variable object index
    grouped: dict[str, tuple[str, object]]


class _Expander:
    def __init__(self, state: FlattenState):
        self.state = state
        self.used_names: set[str] = set()
        self.variables: list[FlatVar] = []
        self.tables: dict[str, Table] = {}
        self.items: list[Item] = []
        self.origins: list[str] = []

    # -- naming and registration ------------------------------------------------

    def claim(self, name: str) -> str:
        if name in self.used_names:
            raise FlattenError(
                f"flat name '{name}' collides with an existing variable or table",
                "expand_composition",
            )
        self.used_names.add(name)
        return name

    def register_table(self, table: Table) -> None:
        if table.name not in self.tables:
            self.tables[table.name] = table

    def add_item(self, item: Item, origin: str) -> None:
        self.items.append(item)
        self.origins.append(origin)

    # -- variable creation --------------------------------------------------------

    def _domain_of(self, attr: Attribute, owner: str) -> Domain:
        base = _base_of(attr)
        dom = attr.domain
        if dom is None:
            if base == BOOL:
                return IntInterval(0, 1)
            raise FlattenError(
                f"'{owner}' is a decision variable but has no finite domain",
                "expand_composition",
            )
        if isinstance(dom, DomainSet):
            values = []
            for v in dom.elems:
                folded = fold_expr(v, self.state.const_tables)
                if not isinstance(folded, IntLit):
                    raise FlattenError(
                        f"domain value of '{owner}' is not a constant integer",
                        "expand_composition",
                    )
                values.append(folded.value)
            return IntSet(tuple(values))
        lo = fold_expr(dom.lo, self.state.const_tables)
        hi = fold_expr(dom.hi, self.state.const_tables)
        if base == REAL:
            if not isinstance(lo, (IntLit, RealLit)) or not isinstance(hi, (IntLit, RealLit)):
                raise FlattenError(f"domain of '{owner}' is not constant", "expand_composition")
            return RealInterval(float(lo.value), float(hi.value))
        if not isinstance(lo, IntLit) or not isinstance(hi, IntLit):
            raise FlattenError(f"domain of '{owner}' is not a constant integer interval",
                               "expand_composition")
        if lo.value > hi.value:
            raise FlattenError(f"domain of '{owner}' is empty", "expand_composition")
        return IntInterval(lo.value, hi.value)

    def make_var(
        self, name: str, attr: Attribute, dims: tuple[int, ...], owner: str
    ) -> FlatVar:
        var = FlatVar(
            name=self.claim(name),
            base=_base_of(attr),
            shape=dims,
            domain=self._domain_of(attr, owner),
            enum_tag=attr.enum_tag,
        )
        self.variables.append(var)
        return var

    def pin(self, var: FlatVar, index: tuple[int, ...], value: object, owner: str) -> None:
        if isinstance(value, bool):
            rhs: Expr = BoolLit(value)
        elif isinstance(value, float):
            rhs = RealLit(value)
        else:
            if value not in var.domain:
                raise FlattenError(
                    f"assigned value {value} for '{owner}' lies outside its domain",
                    "expand_composition",
                )
            rhs = IntLit(value)
        lhs = Ref((RefPart(var.name, tuple(IntLit(i) for i in index)),))
        self.add_item(Constraint(BinOp("=", lhs, rhs)), "data")

    # -- object expansion -----------------------------------------------------------

    def expand_object(self, cls: ClassDef, prefix: str, binding: dict, label: str) -> _Instance:
        slots: dict[str, object] = {}
        for attr in cls.attributes:
            owner = f"{label}.{attr.name}" if label else attr.name
            if isinstance(attr.type, (IntType, RealType, BoolType, SetType)):
                slots[attr.name] = self._expand_primitive(
                    prefix + attr.name, attr, binding[attr.name], owner
                )
            elif attr.shape:
                slots[attr.name] = self._expand_object_array(
                    prefix, attr, binding[attr.name], owner
                )
            else:
                child_cls = self.state.classes[attr.type.name]
                inst = self.expand_object(
                    child_cls, prefix + attr.name + "_", binding[attr.name], owner
                )
                slots[attr.name] = _SlotObj(inst)
        instance = _Instance(cls, slots, label)
        for zone in cls.zones:
            origin = f"{label or cls.name}:{zone.name}"
            for item in zone.items:
                self.add_item(self.instantiate_item(item, instance), origin)
        return instance

    def _expand_primitive(self, name: str, attr: Attribute, cells: dict, owner: str):
        if not attr.shape:
            if () in cells:
                return _SlotConst(cells[()])
            self.make_var(name, attr, (), owner)
            return _SlotScalarVar(name)
        dims = _attr_dims(attr, self.state)
        total = 1
        for d in dims:
            total *= d
        indices = list(_iter_indices(dims))
        if len(cells) == total:
            values = tuple(cells[i] for i in indices)
            self.claim(name)
            return _SlotTable(Table(name, dims, values))
        var = self.make_var(name, attr, dims, owner)
        for idx in indices:
            if idx in cells:
                self.pin(var, idx, cells[idx], owner)
        return _SlotArrayVar(name, dims)

    def _expand_object_array(self, prefix: str, attr: Attribute, bindings: list, owner: str):
        child_cls = self.state.classes[attr.type.name]
        n = len(bindings)
        grouped: dict[str, tuple[str, object]] = {}
        grouped_slots: dict[str, list] = {}
        for child_attr in child_cls.attributes:
            if not isinstance(child_attr.type, (IntType, RealType, BoolType, SetType)):
                continue
            if child_attr.shape:
                continue
            gname = prefix + attr.name + "_" + child_attr.name
            cells = [bindings[i][child_attr.name].get(()) for i in range(n)]
            gowner = f"{owner}.{child_attr.name}"
            if all(c is not None for c in cells):
                self.claim(gname)
                table = Table(gname, (n,), tuple(cells))
                grouped[child_attr.name] = ("table", table)
                grouped_slots[child_attr.name] = [_SlotConst(c) for c in cells]
            else:
                var = self.make_var(gname, child_attr, (n,), gowner)
                for i, c in enumerate(cells, start=1):
                    if c is not None:
                        self.pin(var, (i,), c, gowner)
                grouped[child_attr.name] = ("var", gname)
                grouped_slots[child_attr.name] = [
                    _SlotGroupedVar(gname, i) if cells[i - 1] is None else _SlotConst(cells[i - 1])
                    for i in range(1, n + 1)
                ]
        insts: list[_Instance] = []
        for i in range(1, n + 1):
            child_prefix = f"{prefix}{attr.name}_{i}_"
            child_label = f"{owner}[{i}]"
            slots: dict[str, object] = {}
            for child_attr in child_cls.attributes:
                cowner = f"{child_label}.{child_attr.name}"
                if child_attr.name in grouped_slots:
                    slots[child_attr.name] = grouped_slots[child_attr.name][i - 1]
                elif isinstance(child_attr.type, (IntType, RealType, BoolType, SetType)):
                    slots[child_attr.name] = self._expand_primitive(
                        child_prefix + child_attr.name,
                        child_attr,
                        bindings[i - 1][child_attr.name],
                        cowner,
                    )
                elif child_attr.shape:
                    slots[child_attr.name] = self._expand_object_array(
                        child_prefix, child_attr, bindings[i - 1][child_attr.name], cowner
                    )
                else:
                    grand_cls = self.state.classes[child_attr.type.name]
                    inst = self.expand_object(
                        grand_cls,
                        child_prefix + child_attr.name + "_",
                        bindings[i - 1][child_attr.name],
                        cowner,
                    )
                    slots[child_attr.name] = _SlotObj(inst)
            instance = _Instance(child_cls, slots, child_label)
            insts.append(instance)
            for zone in child_cls.zones:
                origin = f"{child_label}:{zone.name}"
                for item in zone.items:
                    self.add_item(self.instantiate_item(item, instance), origin)
        return _SlotObjArray(insts, grouped)

    # -- reference resolution -----------------------------------------------------

    def resolve_expr(self, e: Expr, inst: _Instance) -> Expr:
        def repl(node: Expr) -> Expr:
            if isinstance(node, Ref):
                return self.resolve_ref(node, inst)
            return node

        return fold_expr(transform(e, repl), self.state.const_tables)

    def resolve_ref(self, ref: Ref, inst: _Instance) -> Expr:
        parts = ref.parts
        slot = inst.slots.get(parts[0].name)
        if slot is None:
            table = self.state.const_tables.get(parts[0].name)
            if table is not None and len(parts) == 1:
                return self._primitive_ref(_SlotTable(table), parts[0], ref)
            raise FlattenError(
                f"unresolved reference '{render_expr(ref)}' in '{inst.label or inst.cls.name}'",
                "expand_composition",
            )
        k = 0
        while k < len(parts):
            part = parts[k]
            last = k == len(parts) - 1
            indices = tuple(fold_expr(i, self.state.const_tables) for i in part.indices)
            if isinstance(slot, _SlotObj):
                if indices:
                    raise FlattenError(
                        f"scalar object '{part.name}' indexed in '{render_expr(ref)}'",
                        "expand_composition",
                    )
                if last:
                    raise FlattenError(
                        f"object '{part.name}' used as a value in '{render_expr(ref)}'",
                        "expand_composition",
                    )
                slot = slot.inst.slots.get(parts[k + 1].name)
                if slot is None:
                    raise FlattenError(
                        f"unresolved reference '{render_expr(ref)}'", "expand_composition"
                    )
                k += 1
                continue
            if isinstance(slot, _SlotObjArray):
                if len(indices) != 1:
                    raise FlattenError(
                        f"object array '{part.name}' needs one index in"
                        f" '{render_expr(ref)}'",
                        "expand_composition",
                    )
                idx = indices[0]
                if isinstance(idx, IntLit):
                    if not (1 <= idx.value <= len(slot.insts)):
                        raise FlattenError(
                            f"object index {idx.value} outside 1..{len(slot.insts)} in"
                            f" '{render_expr(ref)}'",
                            "expand_composition",
                        )
                    if last:
                        raise FlattenError(
                            f"object '{part.name}[{idx.value}]' used as a value in"
                            f" '{render_expr(ref)}'",
                            "expand_composition",
                        )
                    inst2 = slot.insts[idx.value - 1]
                    slot = inst2.slots.get(parts[k + 1].name)
                    if slot is None:
                        raise FlattenError(
                            f"unresolved reference '{render_expr(ref)}'", "expand_composition"
                        )
                    k += 1
                    continue
                # variable object index: only a grouped scalar target survives
                if not last and k + 1 == len(parts) - 1 and not parts[k + 1].indices:
                    target = slot.grouped.get(parts[k + 1].name)
                    if target is not None:
                        kind, payload = target
                        if kind == "table":
                            self.register_table(payload)
                            name = payload.name
                        else:
                            name = payload
                        return Ref((RefPart(name, (idx,)),), span=ref.span)
                raise FlattenError(
                    f"variable index into object array '{part.name}' in"
                    f" '{render_expr(ref)}': the target attribute is expanded"
                    " per object, so the index must be constant",
                    "expand_composition",
                )
            return self._primitive_ref(slot, RefPart(part.name, indices), ref)
        raise AssertionError("unreachable")

    def _primitive_ref(self, slot, part: RefPart, ref: Ref) -> Expr:
        if isinstance(slot, _SlotConst):
            if part.indices:
                raise FlattenError(
                    f"scalar '{part.name}' indexed in '{render_expr(ref)}'",
                    "expand_composition",
                )
            return _literal(slot.value)
        if isinstance(slot, _SlotScalarVar):
            return Ref((RefPart(slot.name),), span=ref.span)
        if isinstance(slot, _SlotGroupedVar):
            return Ref((RefPart(slot.name, (IntLit(slot.index),)),), span=ref.span)
        if isinstance(slot, _SlotArrayVar):
            self._check_index_arity(part, slot.dims, ref)
            return Ref((RefPart(slot.name, part.indices),), span=ref.span)
        if isinstance(slot, _SlotTable):
            table = slot.table
            if part.indices and all(isinstance(i, IntLit) for i in part.indices):
                idx = tuple(i.value for i in part.indices)
                try:
                    return _literal(table.lookup(idx))
                except IndexError:
                    raise FlattenError(
                        f"constant index {list(idx)} outside bounds of '{table.name}'"
                        f" in '{render_expr(ref)}'",
                        "expand_composition",
                    ) from None
            self._check_index_arity(part, table.shape, ref)
            self.register_table(table)
            return Ref((RefPart(table.name, part.indices),), span=ref.span)
        raise AssertionError(f"unexpected slot {type(slot).__name__}")

    def _check_index_arity(self, part: RefPart, dims: tuple[int, ...], ref: Ref) -> None:
        if part.indices and len(part.indices) != len(dims):
            raise FlattenError(
                f"'{part.name}' takes {len(dims)} index(es) in '{render_expr(ref)}'",
                "expand_composition",
            )
        for idx, dim in zip(part.indices, dims):
            if isinstance(idx, IntLit) and not (1 <= idx.value <= dim):
                raise FlattenError(
                    f"index {idx.value} outside 1..{dim} for '{part.name}' in"
                    f" '{render_expr(ref)}'",
                    "expand_composition",
                )

    # -- items ---------------------------------------------------------------------

    def instantiate_item(self, item: Item, inst: _Instance) -> Item:
        if isinstance(item, Constraint):
            return Constraint(self.resolve_expr(item.expr, inst), span=item.span)
        if isinstance(item, GlobalCall):
            return GlobalCall(
                item.name,
                tuple(self.resolve_expr(a, inst) for a in item.args),
                span=item.span,
            )
        if isinstance(item, Objective):
            return Objective(item.kind, self.resolve_expr(item.expr, inst), span=item.span)
        if isinstance(item, IfElse):
            else_items = (
                tuple(self.instantiate_item(i, inst) for i in item.else_items)
                if item.else_items is not None
                else None
            )
            return IfElse(
                self.resolve_expr(item.cond, inst),
                tuple(self.instantiate_item(i, inst) for i in item.then_items),
                else_items,
                span=item.span,
            )
        raise FlattenError(
            f"unexpected {type(item).__name__} during expansion (loops must be"
            " unrolled first)",
            "expand_composition",
        )


def _base_of(attr: Attribute) -> str:
    if isinstance(attr.type, IntType):
        return INT
    if isinstance(attr.type, RealType):
        return REAL
    if isinstance(attr.type, BoolType):
        return BOOL
    if isinstance(attr.type, SetType):
        return SET
    raise AssertionError("object attribute has no base type")


def _iter_indices(dims: tuple[int, ...]):
    if len(dims) == 1:
        for i in range(1, dims[0] + 1):
            yield (i,)
    else:
        for i in range(1, dims[0] + 1):
            for j in range(1, dims[1] + 1):
                yield (i, j)


def expand_composition(state: FlattenState) -> FlattenState:
    if state.binding is None:
        raise FlattenError("data must be substituted before expansion", "expand_composition")
    expander = _Expander(state)
    expander.expand_object(state.classes[state.main], "", state.binding, "")
    state.variables = expander.variables
    state.tables = expander.tables
    state.items = expander.items
    state.origins = expander.origins
    state.expanded = True
    return state


# ---------------------------------------------------------------------------
# Pass 5: conditional removal
# ---------------------------------------------------------------------------


def _conjunction(exprs: list[Expr]) -> Expr:
    out = exprs[0]
    for e in exprs[1:]:
        out = BinOp("and", out, e)
    return out


def conditional_formula(item: IfElse) -> Expr:
    """``if a then b else c`` as ``(a -> b) and (a or c)``; without an else
    branch just ``a -> b``.  Nested conditionals are rewritten innermost-first."""
    then_expr = _conjunction(_branch_exprs(item.then_items))
    formula = BinOp("->", item.cond, then_expr)
    if item.else_items is not None:
        else_expr = _conjunction(_branch_exprs(item.else_items))
        formula = BinOp("and", formula, BinOp("or", item.cond, else_expr))
    return formula


def _branch_exprs(items: tuple[Item, ...]) -> list[Expr]:
    out: list[Expr] = []
    for item in items:
        if isinstance(item, Constraint):
            out.append(item.expr)
        elif isinstance(item, IfElse):
            out.append(conditional_formula(item))
        else:
            raise FlattenError(
                f"{type(item).__name__} cannot appear inside a conditional",
                "remove_conditionals",
            )
    return out


def remove_conditionals(state: FlattenState) -> FlattenState:
    items: list[Item] = []
    origins: list[str] = []
    for item, origin in zip(state.items, state.origins):
        if isinstance(item, IfElse):
            items.append(Constraint(conditional_formula(item), span=item.span))
        else:
            items.append(item)
        origins.append(origin)
    state.items = items
    state.origins = origins
    return state


# ---------------------------------------------------------------------------
# Pass 6: logic normalization
# ---------------------------------------------------------------------------


def normalize_expr(e: Expr) -> Expr:
    def repl(node: Expr) -> Expr:
        if isinstance(node, BinOp):
            if node.op == "<->":
                return BinOp(
                    "and",
                    BinOp("->", node.left, node.right),
                    BinOp("->", node.right, node.left),
                    span=node.span,
                )
            if node.op == "<-":
                return BinOp("->", node.right, node.left, span=node.span)
        return node

    return transform(e, repl)


def normalize_logic(state: FlattenState) -> FlattenState:
    items: list[Item] = []
    for item in state.items:
        if isinstance(item, Constraint):
            items.append(Constraint(normalize_expr(item.expr), span=item.span))
        elif isinstance(item, Objective):
            items.append(Objective(item.kind, normalize_expr(item.expr), span=item.span))
        elif isinstance(item, GlobalCall):
            items.append(
                GlobalCall(item.name, tuple(normalize_expr(a) for a in item.args),
                           span=item.span)
            )
        else:
            items.append(item)
    state.items = items
    return state


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

PIPELINE = (
    ("substitute_enums", substitute_enums),
    ("substitute_data", substitute_data),
    ("unroll_loops", unroll_loops),
    ("expand_composition", expand_composition),
    ("remove_conditionals", remove_conditionals),
    ("normalize_logic", normalize_logic),
)


def state_from_typed_model(tm: TypedModel) -> FlattenState:
    return FlattenState(
        name=tm.model.name,
        classes=dict(tm.class_map),
        main=tm.model.main_class,
        enums=dict(tm.enums),
        constants=dict(tm.constants),
        assignments=list(tm.assignments),
    )


def build_flat_model(state: FlattenState) -> FlatModel:
    constraints: list[FlatConstraint] = []
    objective: FlatObjective | None = None
    for item, origin in zip(state.items, state.origins):
        if isinstance(item, Constraint):
            constraints.append(FlatConstraint(item.expr, origin))
        elif isinstance(item, GlobalCall):
            constraints.append(
                FlatConstraint(Call(item.name, item.args, span=item.span), origin)
            )
        elif isinstance(item, Objective):
            if objective is not None:
                raise FlattenError("more than one objective after flattening", "build")
            objective = FlatObjective(item.kind, item.expr)
        else:
            raise FlattenError(f"unlowered {type(item).__name__} at build time", "build")
    fm = FlatModel(
        name=state.name,
        variables=list(state.variables),
        constraints=constraints,
        enum_types=dict(state.enum_types),
        tables=dict(state.tables),
        objective=objective,
    )
    problems = flatness_violations(fm)
    if problems:
        raise FlattenError("; ".join(problems), "build")
    return fm


def flatten(tm: TypedModel, data=None) -> tuple[FlatModel, PassTrace]:
    """Run the full six-pass pipeline.  ``data`` is accepted for signature
    symmetry; the analyzed model already carries its data tables."""
    state = state_from_typed_model(tm)
    trace = PassTrace()
    for name, pass_fn in PIPELINE:
        before = node_count(state)
        try:
            state = pass_fn(state)
        except FlattenError:
            raise
        except Exception as exc:  # defensive: attach the pass name
            raise FlattenError(str(exc), name) from exc
        trace.record(name, before, node_count(state))
    return build_flat_model(state), trace
