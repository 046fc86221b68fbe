"""AST for the modeling language: expressions, class members, models, data files.

The same expression nodes serve both the source AST and the flat IR; flatness
is a restriction (single-part references, no enum literals, no data-constant
names), not a separate node set.  Nodes compare structurally — source spans
and type annotations are excluded from equality so that round-trip and
transformation tests can compare trees directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

from .diagnostics import SourceSpan

# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

ARITH_OPS = ("+", "-", "*", "/")
CMP_OPS = ("<", ">", "<=", ">=", "=", "<>")
LOGIC_OPS = ("and", "or", "xor", "->", "<-", "<->")
SET_VALUE_OPS = ("union", "diff", "symdiff", "intersection")
SET_REL_OPS = ("in", "subset", "superset")


@dataclass
class Expr:
    """Base class for expression nodes."""

    span: SourceSpan | None = field(default=None, kw_only=True, compare=False, repr=False)
    ty: object | None = field(default=None, kw_only=True, compare=False, repr=False)


@dataclass
class IntLit(Expr):
    value: int = 0


@dataclass
class RealLit(Expr):
    value: float = 0.0


@dataclass
class BoolLit(Expr):
    value: bool = False


@dataclass
class SetLit(Expr):
    """Explicit set value, ``{1, 3, 5}``."""

    elems: tuple[Expr, ...] = ()


@dataclass
class ArrayLit(Expr):
    """Array of expressions, ``[a, b, c]``; legal only as a global-constraint
    argument."""

    elems: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class RefPart:
    """One segment of a reference path: a name plus optional index expressions."""

    name: str
    indices: tuple[Expr, ...] = ()


@dataclass
class Ref(Expr):
    """A (possibly dotted, possibly indexed) reference: ``man[m].rank[w]``.

    After flattening exactly one part remains and it names a flat variable or
    a constant table.
    """

    parts: tuple[RefPart, ...] = ()

    @property
    def simple_name(self) -> str | None:
        """Name if this is a bare single-part, index-free reference."""
        if len(self.parts) == 1 and not self.parts[0].indices:
            return self.parts[0].name
        return None


@dataclass
class EnumRef(Expr):
    """A resolved enumeration literal (``Tracy``); replaced by its 1-based
    ordinal during enumeration substitution."""

    enum_name: str = ""
    value_name: str = ""
    ordinal: int = 0


@dataclass
class BinOp(Expr):
    op: str = "+"
    left: Expr = None  # type: ignore[assignment]
    right: Expr = None  # type: ignore[assignment]


@dataclass
class UnOp(Expr):
    op: str = "neg"  # "neg" or "not"
    operand: Expr = None  # type: ignore[assignment]


@dataclass
class Call(Expr):
    """Function-style expression (``cardinality(s)``) or, at item level, a
    global-constraint call (``alldifferent(q)``)."""

    name: str = ""
    args: tuple[Expr, ...] = ()


def simple_ref(name: str, *indices: Expr, span: SourceSpan | None = None) -> Ref:
    return Ref(parts=(RefPart(name, tuple(indices)),), span=span)


def children(e: Expr) -> Iterator[Expr]:
    """Immediate sub-expressions of ``e`` (including index expressions)."""
    if isinstance(e, BinOp):
        yield e.left
        yield e.right
    elif isinstance(e, UnOp):
        yield e.operand
    elif isinstance(e, Call):
        yield from e.args
    elif isinstance(e, (SetLit, ArrayLit)):
        yield from e.elems
    elif isinstance(e, Ref):
        for part in e.parts:
            yield from part.indices


def walk(e: Expr) -> Iterator[Expr]:
    """All nodes of ``e``, pre-order."""
    yield e
    for c in children(e):
        yield from walk(c)


def transform(e: Expr, fn) -> Expr:
    """Rebuild ``e`` bottom-up, applying ``fn`` to every node.

    ``fn`` receives a node whose children are already transformed and returns
    a replacement node (possibly the same one).
    """
    if isinstance(e, BinOp):
        e2: Expr = BinOp(e.op, transform(e.left, fn), transform(e.right, fn), span=e.span)
    elif isinstance(e, UnOp):
        e2 = UnOp(e.op, transform(e.operand, fn), span=e.span)
    elif isinstance(e, Call):
        e2 = Call(e.name, tuple(transform(a, fn) for a in e.args), span=e.span)
    elif isinstance(e, SetLit):
        e2 = SetLit(tuple(transform(a, fn) for a in e.elems), span=e.span)
    elif isinstance(e, ArrayLit):
        e2 = ArrayLit(tuple(transform(a, fn) for a in e.elems), span=e.span)
    elif isinstance(e, Ref):
        e2 = Ref(
            tuple(
                RefPart(p.name, tuple(transform(i, fn) for i in p.indices)) for p in e.parts
            ),
            span=e.span,
        )
    else:
        e2 = e
    return fn(e2)


# ---------------------------------------------------------------------------
# Types, shapes, and domains as written in declarations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TypeSpec:
    pass


@dataclass(frozen=True)
class IntType(TypeSpec):
    pass


@dataclass(frozen=True)
class RealType(TypeSpec):
    pass


@dataclass(frozen=True)
class BoolType(TypeSpec):
    pass


@dataclass(frozen=True)
class SetType(TypeSpec):
    """``set of int`` or ``set of SomeEnum`` (element name resolved later)."""

    elem: str = "int"


@dataclass(frozen=True)
class NamedType(TypeSpec):
    """Unresolved type name; the analyzer turns it into EnumType or ObjectType."""

    name: str = ""


@dataclass(frozen=True)
class EnumType(TypeSpec):
    name: str = ""


@dataclass(frozen=True)
class ObjectType(TypeSpec):
    name: str = ""


@dataclass
class DomainInterval:
    lo: Expr
    hi: Expr


@dataclass
class DomainSet:
    elems: tuple[Expr, ...]


DomainSpec = Union[DomainInterval, DomainSet]


@dataclass
class Attribute:
    """A class member: decision variable, set, object, or array thereof.

    ``shape`` holds 0 (scalar), 1 (array) or 2 (matrix) bound expressions;
    each bound is an integer literal, a constant name, or an enum name.
    ``enum_tag`` is set once an enum type has been lowered to its ordinal
    range, so solutions can be rendered with the symbolic labels.
    """

    name: str
    type: TypeSpec
    shape: tuple[Expr, ...] = ()
    domain: DomainSpec | None = None
    enum_tag: str | None = None
    span: SourceSpan | None = field(default=None, kw_only=True, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Constraint-zone items
# ---------------------------------------------------------------------------


@dataclass
class Item:
    span: SourceSpan | None = field(default=None, kw_only=True, compare=False, repr=False)


@dataclass
class Constraint(Item):
    expr: Expr = None  # type: ignore[assignment]


@dataclass
class IntRange:
    lo: Expr
    hi: Expr


@dataclass
class NameRange:
    """A range given by name (an enumeration); traversed in ordinal order."""

    name: str


LoopRange = Union[IntRange, NameRange]


@dataclass
class Forall(Item):
    var: str = ""
    range: LoopRange = None  # type: ignore[assignment]
    body: tuple[Item, ...] = ()


@dataclass
class IfElse(Item):
    cond: Expr = None  # type: ignore[assignment]
    then_items: tuple[Item, ...] = ()
    else_items: tuple[Item, ...] | None = None


@dataclass
class Objective(Item):
    kind: str = "minimize"  # "minimize" | "maximize"
    expr: Expr = None  # type: ignore[assignment]


@dataclass
class GlobalCall(Item):
    name: str = ""
    args: tuple[Expr, ...] = ()


GLOBAL_CONSTRAINTS = ("alldifferent", "cumulatives")


@dataclass
class ConstraintZone:
    name: str
    items: tuple[Item, ...]
    span: SourceSpan | None = field(default=None, kw_only=True, compare=False, repr=False)


@dataclass
class ClassDef:
    name: str
    superclass: str | None
    attributes: tuple[Attribute, ...]
    zones: tuple[ConstraintZone, ...]
    span: SourceSpan | None = field(default=None, kw_only=True, compare=False, repr=False)


@dataclass
class Model:
    """A parsed model file.  The first class defined is the main class."""

    name: str
    imports: tuple[str, ...]
    classes: tuple[ClassDef, ...]
    main_class: str

    def class_named(self, name: str) -> ClassDef | None:
        for c in self.classes:
            if c.name == name:
                return c
        return None


# ---------------------------------------------------------------------------
# Data files
# ---------------------------------------------------------------------------


@dataclass
class VInt:
    value: int


@dataclass
class VReal:
    value: float


@dataclass
class VBool:
    value: bool


@dataclass
class VSym:
    """Symbolic value (an enumeration literal) awaiting ordinal substitution."""

    name: str


@dataclass
class VList:
    """Array literal ``[a, b, c]`` or keyed form ``[Helen:5, Tracy:1]``.

    ``keys`` is None for positional entries; keyed and positional entries may
    not be mixed.
    """

    items: tuple[DataValue, ...]
    keys: tuple[str, ...] | None = None


@dataclass
class VObj:
    """Object literal ``{elem, elem}``; elements match the target class's
    attributes positionally."""

    items: tuple[DataValue, ...]


@dataclass
class VOmit:
    """The ``_`` marker: leave the slot as a decision variable."""


DataValue = Union[VInt, VReal, VBool, VSym, VList, VObj, VOmit]


@dataclass
class EnumDecl:
    name: str
    values: tuple[str, ...]
    span: SourceSpan | None = field(default=None, kw_only=True, compare=False, repr=False)

    def ordinal(self, value_name: str) -> int:
        """1-based position of ``value_name``; raises KeyError if absent."""
        try:
            return self.values.index(value_name) + 1
        except ValueError:
            raise KeyError(value_name) from None


@dataclass
class ConstDecl:
    name: str
    type: TypeSpec
    shape: tuple[Expr, ...]
    value: DataValue
    span: SourceSpan | None = field(default=None, kw_only=True, compare=False, repr=False)


@dataclass
class Assignment:
    """A variable-assignment: concrete values bound into an object's slots."""

    type_name: str
    path: tuple[str, ...]
    value: DataValue
    span: SourceSpan | None = field(default=None, kw_only=True, compare=False, repr=False)


@dataclass
class DataFile:
    enums: dict[str, EnumDecl] = field(default_factory=dict)
    constants: dict[str, ConstDecl] = field(default_factory=dict)
    assignments: list[Assignment] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not (self.enums or self.constants or self.assignments)

    def merged_with(self, other: DataFile) -> tuple[DataFile, list[str]]:
        """Combine two data files; returns the merge plus duplicate-name clashes."""
        clashes = []
        out = DataFile(dict(self.enums), dict(self.constants), list(self.assignments))
        for name, decl in other.enums.items():
            if name in out.enums:
                clashes.append(f"enum '{name}' defined in more than one data file")
            out.enums[name] = decl
        for name, decl in other.constants.items():
            if name in out.constants:
                clashes.append(f"constant '{name}' defined in more than one data file")
            out.constants[name] = decl
        seen = {a.path for a in out.assignments}
        for a in other.assignments:
            if a.path in seen:
                clashes.append(f"assignment to '{'.'.join(a.path)}' repeated")
            out.assignments.append(a)
        return out, clashes
