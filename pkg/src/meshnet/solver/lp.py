"""CPLEX LP-format export and a reader for the subset this module writes.

Layout of an exported file::

    \\ <model name>
    Minimize
     obj: 2 E_0_1 + 0.0001 D_0_1 ...
    Subject To
     <row name>: <terms> <= | >= | = <rhs>
    Bounds
     0 <= E_0_1 <= 1          (every variable, in model order)
     E_0_2 = 0                (fixed variables)
     0 <= D_0_1 <= 48         (continuous variables)
    Binary
     E_0_1 E_0_2 ...
    End

Coefficients equal to an integer are written without a decimal point,
others with Python's shortest round-trip ``repr``. Long expressions wrap
onto continuation lines that start with whitespace. Listing every variable
in ``Bounds`` preserves the variable order, so reading a file back gives a
structurally identical model.
"""

from __future__ import annotations

import math
import re

from ..model.ipmodel import BINARY, CONTINUOUS, IpModel, ModelError

LINE_WIDTH = 100
SECTION_WORDS = {
    "minimize": "min",
    "minimise": "min",
    "min": "min",
    "subject to": "st",
    "such that": "st",
    "st": "st",
    "s.t.": "st",
    "bounds": "bounds",
    "binary": "binary",
    "binaries": "binary",
    "bin": "binary",
    "general": "general",
    "generals": "general",
    "end": "end",
}


class LpParseError(ModelError):
    pass


def _num(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _expr(model: IpModel, terms) -> list[str]:
    out = []
    for k, (v, c) in enumerate(terms):
        name = model.variables[v].name
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        tok = name if mag == 1 else f"{_num(mag)} {name}"
        if k == 0:
            out.append(tok if c > 0 else f"- {tok}")
        else:
            out.append(f"{sign} {tok}")
    return out


def _wrap(head: str, tokens: list[str]) -> list[str]:
    lines = []
    cur = head
    for tok in tokens:
        if len(cur) + 1 + len(tok) > LINE_WIDTH and cur.strip():
            lines.append(cur)
            cur = "   " + tok
        else:
            cur = f"{cur} {tok}" if cur.strip() else cur + tok
    lines.append(cur)
    return lines


def export_lp(model: IpModel) -> str:
    """Deterministic LP text for ``model``."""
    if not model.variables:
        raise ModelError("cannot export a model without variables")
    lines = [f"\\ {model.name}", "Minimize"]
    obj = [(v, c) for v, c in sorted(model.objective.items()) if c != 0]
    if not obj:
        obj_tokens = [f"0 {model.variables[0].name}"]
    else:
        obj_tokens = _expr(model, obj)
    lines += _wrap(" obj:", obj_tokens)
    lines.append("Subject To")
    for c in model.constraints:
        tokens = _expr(model, c.terms) if c.terms else [f"0 {model.variables[0].name}"]
        tokens += [c.sense, _num(c.rhs)]
        lines += _wrap(f" {c.name}:", tokens)
    lines.append("Bounds")
    for var in model.variables:
        if var.lo == var.hi:
            lines.append(f" {var.name} = {_num(var.lo)}")
        elif math.isinf(var.hi) and var.lo == 0:
            lines.append(f" {var.name} >= 0")
        else:
            lines.append(f" {_num(var.lo)} <= {var.name} <= {_num(var.hi)}")
    binaries = [v.name for v in model.variables if v.kind == BINARY]
    if binaries:
        lines.append("Binary")
        lines += _wrap(" ", binaries)
    lines.append("End")
    return "\n".join(lines) + "\n"


_TERM = re.compile(r"([+-]?)\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*([A-Za-z_][\w.\[\]]*)")


def _parse_expr(text: str) -> list[tuple[str, float]]:
    out = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise LpParseError(f"cannot parse expression near {text[pos:pos + 30]!r}")
        sign, coef, name = m.groups()
        c = float(coef) if coef else 1.0
        out.append((name, -c if sign == "-" else c))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


def _section_of(line: str) -> str | None:
    key = " ".join(line.lower().split())
    return SECTION_WORDS.get(key)


def parse_lp(text: str) -> IpModel:
    """Read LP text written by :func:`export_lp` (and simple hand-written files)."""
    name = "meshnet"
    sections: dict[str, list[str]] = {"min": [], "st": [], "bounds": [], "binary": [], "general": []}
    current = None
    for raw in text.splitlines():
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("\\"):
            if current is None and stripped[1:].strip():
                name = stripped[1:].strip()
            continue
        sec = _section_of(stripped)
        if sec == "end":
            current = "end"
            continue
        if sec is not None:
            current = sec
            continue
        if current in (None, "end"):
            raise LpParseError(f"text outside any section: {stripped!r}")
        sections[current].append(raw.rstrip())

    def statements(lines):
        out: list[str] = []
        for line in lines:
            if out and line[:1].isspace() and line.startswith("   ") and not re.match(r"\s*[\w.\[\]]+\s*:", line):
                out[-1] += " " + line.strip()
            else:
                out.append(line.strip())
        return out

    obj_stmt = " ".join(s.strip() for s in sections["min"])
    if ":" in obj_stmt:
        obj_stmt = obj_stmt.split(":", 1)[1]
    obj_terms = _parse_expr(obj_stmt) if obj_stmt.strip() else []

    rows = []
    for k, stmt in enumerate(statements(sections["st"])):
        m = re.match(r"([\w.\[\]]+)\s*:(.*)$", stmt)
        rname, body = (m.group(1), m.group(2)) if m else (f"R{k}", stmt)
        cm = re.search(r"(<=|>=|=<|=>|<|>|=)", body)
        if not cm:
            raise LpParseError(f"row {rname!r} has no comparator")
        sense = {"=<": "<=", "<": "<=", "=>": ">=", ">": ">="}.get(cm.group(1), cm.group(1))
        try:
            rhs = float(body[cm.end():].strip())
        except ValueError:
            raise LpParseError(f"row {rname!r} has a non-numeric right-hand side") from None
        rows.append((rname, _parse_expr(body[: cm.start()]), sense, rhs))

    order: list[str] = []
    bounds: dict[str, list[float]] = {}

    def touch(n):
        if n not in bounds:
            bounds[n] = [0.0, math.inf]
            order.append(n)

    for stmt in statements(sections["bounds"]):
        parts = stmt.replace("<=", " <= ").replace(">=", " >= ").split()
        if len(parts) == 5 and parts[1] == "<=" and parts[3] == "<=":
            touch(parts[2])
            bounds[parts[2]] = [_to_float(parts[0]), _to_float(parts[4])]
        elif len(parts) == 3 and parts[1] == "=":
            touch(parts[0])
            bounds[parts[0]] = [_to_float(parts[2])] * 2
        elif len(parts) == 3 and parts[1] in ("<=", ">="):
            touch(parts[0])
            idx = 1 if parts[1] == "<=" else 0
            bounds[parts[0]][idx] = _to_float(parts[2])
        elif len(parts) == 2 and parts[1].lower() == "free":
            touch(parts[0])
            bounds[parts[0]] = [-math.inf, math.inf]
        else:
            raise LpParseError(f"cannot parse bound {stmt!r}")
    binaries = set()
    for stmt in sections["binary"]:
        binaries.update(stmt.split())
    for n, _ in obj_terms:
        touch(n)
    for _, terms, _, _ in rows:
        for n, _ in terms:
            touch(n)
    for n in sorted(binaries - set(bounds)):
        touch(n)

    model = IpModel(name=name)
    for n in order:
        lo, hi = bounds[n]
        if n in binaries:
            if hi == math.inf:
                hi = 1.0
            model.add_var(n, BINARY, lo, hi)
        else:
            model.add_var(n, CONTINUOUS, lo, hi)
    for n, c in obj_terms:
        v = model.var(n)
        model.set_objective(v, model.objective.get(v, 0.0) + c)
    for rname, terms, sense, rhs in rows:
        model.add_row(rname, [(model.var(n), c) for n, c in terms], sense, rhs)
    return model


def _to_float(tok: str) -> float:
    t = tok.lower().lstrip("+")
    if t in ("inf", "infinity"):
        return math.inf
    if t in ("-inf", "-infinity"):
        return -math.inf
    try:
        return float(tok)
    except ValueError:
        raise LpParseError(f"bad number {tok!r}") from None
