"""Solver-agnostic container for 0-1 / bounded-continuous linear programs."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

BINARY = "binary"
CONTINUOUS = "continuous"
SENSES = ("<=", ">=", "=")


class ModelError(ValueError):
    pass


@dataclass
class Variable:
    name: str
    kind: str
    lo: float = 0.0
    hi: float = 1.0

    @property
    def fixed(self) -> bool:
        return self.lo == self.hi


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[int, float], ...]
    sense: str
    rhs: float
    family: str = ""

    def activity(self, values: Sequence[float]) -> float:
        return sum(c * values[v] for v, c in self.terms)

    def violation(self, values: Sequence[float]) -> float:
        """Amount by which ``values`` violate this row (0 when satisfied)."""
        lhs = self.activity(values)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass
class IpModel:
    """Variables, linear rows and a minimisation objective.

    ``meta`` maps mesh entities to variable ids (see :mod:`meshnet.model.network`)
    and records how derived indicators are defined in terms of edge variables.
    ``mesh`` and ``spec`` are construction context; they are not part of the
    LP text and are ``None`` on models read back from a file.
    """

    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    name: str = "meshnet"
    meta: dict[str, Any] = field(default_factory=dict)
    mesh: Any = None
    spec: Any = None

    def __post_init__(self):
        self._index = {v.name: i for i, v in enumerate(self.variables)}
        self._row_names = {c.name for c in self.constraints}

    # -- construction ----------------------------------------------------

    def add_var(self, name: str, kind: str = BINARY, lo: float = 0.0, hi: float = 1.0) -> int:
        if name in self._index:
            raise ModelError(f"duplicate variable {name!r}")
        if kind not in (BINARY, CONTINUOUS):
            raise ModelError(f"unknown variable kind {kind!r}")
        if lo > hi:
            raise ModelError(f"variable {name!r} has lo > hi")
        if kind == BINARY and (lo not in (0, 1) or hi not in (0, 1)):
            raise ModelError(f"binary variable {name!r} needs 0/1 bounds")
        self.variables.append(Variable(name, kind, float(lo), float(hi)))
        self._index[name] = len(self.variables) - 1
        return len(self.variables) - 1

    def add_row(
        self,
        name: str,
        terms: Iterable[tuple[int, float]],
        sense: str,
        rhs: float,
        family: str = "",
    ) -> Constraint:
        if sense not in SENSES:
            raise ModelError(f"unknown comparator {sense!r}")
        if name in self._row_names:
            raise ModelError(f"duplicate constraint {name!r}")
        merged: dict[int, float] = {}
        for v, c in terms:
            if not 0 <= v < len(self.variables):
                raise ModelError(f"row {name!r} references undeclared variable {v}")
            merged[v] = merged.get(v, 0.0) + float(c)
        row = Constraint(
            name, tuple((v, c) for v, c in merged.items() if c != 0), sense, float(rhs), family
        )
        self.constraints.append(row)
        self._row_names.add(name)
        return row

    def add_range(self, name: str, terms, lo: float, hi: float, family: str = ""):
        """``lo <= terms <= hi`` as two rows, ``name_lo`` and ``name_hi``."""
        terms = list(terms)
        self.add_row(f"{name}_lo", terms, ">=", lo, family)
        self.add_row(f"{name}_hi", terms, "<=", hi, family)

    def fix(self, var: int, value: float):
        v = self.variables[var]
        if not v.lo <= value <= v.hi:
            raise ModelError(f"cannot fix {v.name} to {value}: bounds are [{v.lo}, {v.hi}]")
        v.lo = v.hi = float(value)

    def set_objective(self, var: int, coef: float):
        if coef == 0:
            self.objective.pop(var, None)
        else:
            self.objective[var] = float(coef)

    # -- queries ---------------------------------------------------------

    def var(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ModelError(f"unknown variable {name!r}") from None

    def has_var(self, name: str) -> bool:
        return name in self._index

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def rows(self, family: str) -> list[Constraint]:
        return [c for c in self.constraints if c.family == family]

    def family_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.constraints:
            out[c.family] = out.get(c.family, 0) + 1
        return out

    def objective_value(self, values: Sequence[float]) -> float:
        return float(sum(c * values[v] for v, c in self.objective.items()))

    def check(self, values: Sequence[float], tol: float = 1e-9) -> list[str]:
        """Names of rows and bounds violated by a full assignment."""
        bad = []
        for i, v in enumerate(self.variables):
            x = values[i]
            if x < v.lo - tol or x > v.hi + tol:
                bad.append(f"bound:{v.name}")
            elif v.kind == BINARY and x not in (0, 1):
                bad.append(f"integrality:{v.name}")
        for c in self.constraints:
            if c.violation(values) > tol:
                bad.append(c.name)
        return bad

    def check_exact(self, values: Sequence[float], continuous_tol: float = 1e-9) -> list[str]:
        """Like :meth:`check`, but evaluates rows in rational arithmetic.

        Rows touching only binary variables must hold exactly; rows with a
        continuous variable get ``continuous_tol`` absolute slack.
        """
        exact = [Fraction(x) for x in values]
        tol = Fraction(continuous_tol)
        bad = []
        for i, v in enumerate(self.variables):
            if exact[i] < Fraction(v.lo) or exact[i] > Fraction(v.hi):
                bad.append(f"bound:{v.name}")
        for c in self.constraints:
            lhs = sum((Fraction(coef) * exact[v] for v, coef in c.terms), Fraction(0))
            slack = (
                tol if any(self.variables[v].kind == CONTINUOUS for v, _ in c.terms) else Fraction(0)
            )
            rhs = Fraction(c.rhs)
            if c.sense == "<=" and lhs > rhs + slack:
                bad.append(c.name)
            elif c.sense == ">=" and lhs < rhs - slack:
                bad.append(c.name)
            elif c.sense == "=" and abs(lhs - rhs) > slack:
                bad.append(c.name)
        return bad

    def structurally_equal(self, other: "IpModel") -> bool:
        return (
            [(v.name, v.kind, v.lo, v.hi) for v in self.variables]
            == [(v.name, v.kind, v.lo, v.hi) for v in other.variables]
            and [(c.name, c.terms, c.sense, c.rhs) for c in self.constraints]
            == [(c.name, c.terms, c.sense, c.rhs) for c in other.constraints]
            and self.objective == other.objective
        )
