"""Pretty-printers for expressions and whole models.

Expression rendering is the canonical text form: minimal parentheses by
operator precedence, arithmetic and comparisons set tight (``x[1]+3<=y``),
word operators and arrows spaced (``a -> b``).  The same precedence table
drives parenthesization inside backend templates.
"""

from __future__ import annotations

from .nodes import (
    ArrayLit,
    Attribute,
    BinOp,
    BoolLit,
    BoolType,
    Call,
    ClassDef,
    Constraint,
    ConstraintZone,
    DomainInterval,
    DomainSet,
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
    ObjectType,
    Objective,
    RealLit,
    RealType,
    Ref,
    SetLit,
    SetType,
    TypeSpec,
    UnOp,
)

IMPL_PREC = 0
OR_PREC = 1
XOR_PREC = 2
AND_PREC = 3
CMP_PREC = 4
SETOP_PREC = 5
ADD_PREC = 6
MUL_PREC = 7
UNARY_PREC = 8
ATOM_PREC = 9

_BIN_PREC = {
    "->": IMPL_PREC, "<-": IMPL_PREC, "<->": IMPL_PREC,
    "or": OR_PREC,
    "xor": XOR_PREC,
    "and": AND_PREC,
    "<": CMP_PREC, ">": CMP_PREC, "<=": CMP_PREC, ">=": CMP_PREC,
    "=": CMP_PREC, "<>": CMP_PREC, "in": CMP_PREC, "subset": CMP_PREC,
    "superset": CMP_PREC,
    "union": SETOP_PREC, "diff": SETOP_PREC, "symdiff": SETOP_PREC,
    "intersection": SETOP_PREC,
    "+": ADD_PREC, "-": ADD_PREC,
    "*": MUL_PREC, "/": MUL_PREC,
}

_RIGHT_ASSOC = {"->", "<-", "<->"}
_NON_ASSOC_PREC = (CMP_PREC,)

# Operators rendered with surrounding spaces; the rest are set tight.
_SPACED = {
    "->", "<-", "<->", "and", "or", "xor",
    "in", "subset", "superset", "union", "diff", "symdiff", "intersection",
}


def op_precedence(op: str) -> int:
    return _BIN_PREC[op]


def render_real(value: float) -> str:
    return repr(value)


def render_expr(e: Expr) -> str:
    return _render(e, -1)


def _render(e: Expr, parent_prec: int) -> str:
    if isinstance(e, IntLit):
        return str(e.value) if e.value >= 0 or parent_prec < UNARY_PREC else f"({e.value})"
    if isinstance(e, RealLit):
        s = render_real(e.value)
        return s if e.value >= 0 or parent_prec < UNARY_PREC else f"({s})"
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, EnumRef):
        return e.value_name
    if isinstance(e, Ref):
        return ".".join(
            p.name
            + (f"[{','.join(_render(i, -1) for i in p.indices)}]" if p.indices else "")
            for p in e.parts
        )
    if isinstance(e, Call):
        return f"{e.name}({','.join(_render(a, -1) for a in e.args)})"
    if isinstance(e, ArrayLit):
        return f"[{','.join(_render(a, -1) for a in e.elems)}]"
    if isinstance(e, SetLit):
        return "{" + ",".join(_render(a, -1) for a in e.elems) + "}"
    if isinstance(e, UnOp):
        inner = _render(e.operand, UNARY_PREC)
        text = f"not {inner}" if e.op == "not" else f"-{inner}"
        return f"({text})" if parent_prec >= UNARY_PREC else text
    if isinstance(e, BinOp):
        prec = _BIN_PREC[e.op]
        right_assoc = e.op in _RIGHT_ASSOC
        left = _render(e.left, prec + 1 if right_assoc or prec in _NON_ASSOC_PREC else prec)
        right = _render(e.right, prec if right_assoc else prec + 1)
        op = f" {e.op} " if e.op in _SPACED else e.op
        text = f"{left}{op}{right}"
        return f"({text})" if prec < parent_prec else text
    raise TypeError(f"cannot render {type(e).__name__}")


def render_type(t: TypeSpec) -> str:
    if isinstance(t, IntType):
        return "int"
    if isinstance(t, RealType):
        return "real"
    if isinstance(t, BoolType):
        return "bool"
    if isinstance(t, SetType):
        return f"set of {t.elem}"
    if isinstance(t, (NamedType, EnumType, ObjectType)):
        return t.name
    raise TypeError(f"cannot render type {type(t).__name__}")


def render_attribute(a: Attribute) -> str:
    text = f"{render_type(a.type)} {a.name}"
    if a.shape:
        text += f"[{','.join(render_expr(b) for b in a.shape)}]"
    if a.domain is not None:
        if isinstance(a.domain, DomainInterval):
            text += f" in [{render_expr(a.domain.lo)},{render_expr(a.domain.hi)}]"
        elif isinstance(a.domain, DomainSet):
            text += " in {" + ",".join(render_expr(v) for v in a.domain.elems) + "}"
    return text + ";"


def _render_item(item: Item, indent: int) -> list[str]:
    pad = "  " * indent
    if isinstance(item, Constraint):
        return [pad + render_expr(item.expr) + ";"]
    if isinstance(item, GlobalCall):
        return [pad + f"{item.name}({','.join(render_expr(a) for a in item.args)});"]
    if isinstance(item, Objective):
        return [pad + f"[{item.kind}] {render_expr(item.expr)};"]
    if isinstance(item, Forall):
        if isinstance(item.range, IntRange):
            rng = f"{render_expr(item.range.lo)}..{render_expr(item.range.hi)}"
        else:
            rng = item.range.name
        lines = [pad + f"forall({item.var} in {rng}) {{"]
        for sub in item.body:
            lines.extend(_render_item(sub, indent + 1))
        lines.append(pad + "}")
        return lines
    if isinstance(item, IfElse):
        lines = [pad + f"if ({render_expr(item.cond)}) {{"]
        for sub in item.then_items:
            lines.extend(_render_item(sub, indent + 1))
        if item.else_items is not None:
            lines.append(pad + "} else {")
            for sub in item.else_items:
                lines.extend(_render_item(sub, indent + 1))
        lines.append(pad + "}")
        return lines
    raise TypeError(f"cannot render item {type(item).__name__}")


def _render_zone(zone: ConstraintZone, indent: int) -> list[str]:
    pad = "  " * indent
    lines = [pad + f"constraint {zone.name} {{"]
    for item in zone.items:
        lines.extend(_render_item(item, indent + 1))
    lines.append(pad + "}")
    return lines


def _render_class(cls: ClassDef) -> list[str]:
    head = f"class {cls.name}"
    if cls.superclass:
        head += f" extends {cls.superclass}"
    lines = [head + " {"]
    for attr in cls.attributes:
        lines.append("  " + render_attribute(attr))
    for zone in cls.zones:
        if len(lines) > 1:
            lines.append("")
        lines.extend(_render_zone(zone, 1))
    lines.append("}")
    return lines


def pretty_print(model: Model) -> str:
    """Canonical text for a model; reparsing it yields an equal AST."""
    lines: list[str] = []
    for imp in model.imports:
        lines.append(f"import {imp};")
    if model.imports:
        lines.append("")
    for i, cls in enumerate(model.classes):
        if i:
            lines.append("")
        lines.extend(_render_class(cls))
    return "\n".join(lines) + "\n"
