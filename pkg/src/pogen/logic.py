"""Literal, cube, clause, and CNF algebra plus circuit-to-CNF encodings.

Literals follow the DIMACS convention: a nonzero int ``v`` is the positive
literal of variable ``v`` and ``-v`` its negation.  Cubes and clauses are
canonical: duplicate-free, sorted by (variable, sign), and a variable never
occurs with both polarities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .circuit import (
    AndGate,
    Circuit,
    FALSE_LIT,
    TRUE_LIT,
    lit_negated,
    lit_var as aig_lit_var,
)


class InvalidCubeError(ValueError):
    """A cube or clause saw conflicting or malformed literals."""


def lit_key(lit: int) -> tuple[int, bool]:
    return (abs(lit), lit < 0)


def _canonical(literals: Iterable[int]) -> tuple[int, ...]:
    lits = sorted(set(literals), key=lit_key)
    for lit in lits:
        if lit == 0:
            raise InvalidCubeError("literal 0 is not allowed")
    for a, b in zip(lits, lits[1:]):
        if abs(a) == abs(b):
            raise InvalidCubeError(f"variable {abs(a)} occurs with both polarities")
    return tuple(lits)


@dataclass(frozen=True)
class Cube:
    """Conjunction of literals; doubles as a (partial) state."""

    literals: tuple[int, ...]

    def __init__(self, literals: Iterable[int] = ()):
        object.__setattr__(self, "literals", _canonical(literals))

    def __iter__(self) -> Iterator[int]:
        return iter(self.literals)

    def __len__(self) -> int:
        return len(self.literals)

    def __contains__(self, lit: int) -> bool:
        return lit in self.literals

    def variables(self) -> frozenset[int]:
        return frozenset(abs(l) for l in self.literals)

    def negate(self) -> "Clause":
        return Clause(-l for l in self.literals)

    def subsumes(self, other: "Cube") -> bool:
        """True iff self's literals are a subset of other's (superset of states)."""
        return set(self.literals) <= set(other.literals)

    def value(self, var: int) -> bool | None:
        if var in self.literals:
            return True
        if -var in self.literals:
            return False
        return None

    def without(self, vars: Iterable[int]) -> "Cube":
        drop = set(vars)
        return Cube(l for l in self.literals if abs(l) not in drop)

    def union(self, other: "Cube | Iterable[int]") -> "Cube":
        return Cube(list(self.literals) + list(other))


@dataclass(frozen=True)
class Clause:
    """Disjunction of literals."""

    literals: tuple[int, ...]

    def __init__(self, literals: Iterable[int] = ()):
        object.__setattr__(self, "literals", _canonical(literals))

    def __iter__(self) -> Iterator[int]:
        return iter(self.literals)

    def __len__(self) -> int:
        return len(self.literals)

    def __contains__(self, lit: int) -> bool:
        return lit in self.literals

    def variables(self) -> frozenset[int]:
        return frozenset(abs(l) for l in self.literals)

    def negate(self) -> Cube:
        return Cube(-l for l in self.literals)


@dataclass(frozen=True)
class Cnf:
    clauses: tuple[Clause, ...]
    num_vars: int

    def __init__(self, clauses: Iterable[Clause | Iterable[int]] = (), num_vars: int = 0):
        norm = []
        for c in clauses:
            if isinstance(c, Clause):
                norm.append(c)
                continue
            lits = set(c)
            if any(-l in lits for l in lits):
                continue  # tautologies carry no information
            norm.append(Clause(lits))
        max_ref = max((max((abs(l) for l in c), default=0) for c in norm), default=0)
        object.__setattr__(self, "clauses", tuple(norm))
        object.__setattr__(self, "num_vars", max(num_vars, max_ref))

    def __iter__(self) -> Iterator[Clause]:
        return iter(self.clauses)

    def __len__(self) -> int:
        return len(self.clauses)

    def eval(self, assignment: Mapping[int, bool] | Sequence[bool]) -> bool:
        """Evaluate under a full assignment (indexable by variable)."""
        for clause in self.clauses:
            for lit in clause:
                if bool(assignment[abs(lit)]) == (lit > 0):
                    break
            else:
                return False
        return True

    def conjoin(self, *others: "Cnf") -> "Cnf":
        clauses = list(self.clauses)
        nv = self.num_vars
        for o in others:
            clauses.extend(o.clauses)
            nv = max(nv, o.num_vars)
        return Cnf(clauses, nv)

    def rename(self, mapping: Mapping[int, int]) -> "Cnf":
        """Rename variables; identity for variables missing from the map."""

        def map_lit(lit: int) -> int:
            tgt = mapping.get(abs(lit), abs(lit))
            return tgt if lit > 0 else -tgt

        nv = max(
            [self.num_vars] + [mapping.get(v, v) for v in range(1, self.num_vars + 1)]
        )
        return Cnf([Clause(map_lit(l) for l in c) for c in self.clauses], nv)

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        for clause in self.clauses:
            lines.append(" ".join(str(l) for l in clause.literals) + " 0")
        return "\n".join(lines) + "\n"


def negate(cube: Cube) -> Clause:
    return cube.negate()


def subsumes(c1: Cube, c2: Cube) -> bool:
    return c1.subsumes(c2)


# ---------------------------------------------------------------------------
# Tseitin encoding of a circuit's transition relation.


@dataclass(frozen=True)
class CircuitEncoding:
    """CNF of a circuit's transition behaviour plus variable bookkeeping.

    CNF variables reuse the circuit's variable ids for inputs, latches, and
    gates; next-state variables are allocated after ``circuit.max_var`` in
    latch order.  Models restricted to (state, input, next) are exactly the
    circuit's transitions.
    """

    cnf: Cnf
    state_vars: tuple[int, ...]
    input_vars: tuple[int, ...]
    next_vars: tuple[int, ...]
    aux_vars: tuple[int, ...]
    next_of: dict[int, int]  # latch var -> next-state var
    num_vars: int


def aig_to_cnf_lit(lit: int) -> int:
    """Map an AIG literal (2v/2v+1) to a signed CNF literal over var v."""
    if lit <= 1:
        raise ValueError("constant literal has no CNF counterpart")
    v = aig_lit_var(lit)
    return -v if lit_negated(lit) else v


def gate_clauses(gate: AndGate) -> list[list[int]]:
    """Standard three-clause AND encoding; constants are folded."""
    h = gate.var
    for fan in (gate.left, gate.right):
        if fan == FALSE_LIT:
            return [[-h]]
    fans = [f for f in (gate.left, gate.right) if f != TRUE_LIT]
    if not fans:
        return [[h]]
    if len(fans) == 1:
        a = aig_to_cnf_lit(fans[0])
        return [[-h, a], [h, -a]]
    a, b = aig_to_cnf_lit(fans[0]), aig_to_cnf_lit(fans[1])
    return [[-h, a], [-h, b], [h, -a, -b]]


def tseitin(circuit: Circuit) -> CircuitEncoding:
    """Encode the transition function as CNF with one aux var per gate."""
    clauses: list[list[int]] = []
    for gate in circuit.and_gates:
        clauses.extend(gate_clauses(gate))
    next_of: dict[int, int] = {}
    next_vars = []
    nv = circuit.max_var
    for latch in circuit.latches:
        nv += 1
        next_of[latch.var] = nv
        next_vars.append(nv)
        f = latch.next_lit
        if f == FALSE_LIT:
            clauses.append([-nv])
        elif f == TRUE_LIT:
            clauses.append([nv])
        else:
            fl = aig_to_cnf_lit(f)
            clauses.append([-nv, fl])
            clauses.append([nv, -fl])
    return CircuitEncoding(
        cnf=Cnf(clauses, nv),
        state_vars=circuit.latch_vars,
        input_vars=circuit.input_vars,
        next_vars=tuple(next_vars),
        aux_vars=circuit.gate_vars,
        next_of=next_of,
        num_vars=nv,
    )


def cone_gate_vars(circuit: Circuit, roots: Iterable[int]) -> list[int]:
    """Gate variables in the cones of the given AIG literals, topo order."""
    gates = circuit.gate_map()
    seen: set[int] = set()
    stack = [aig_lit_var(l) for l in roots if l > 1]
    while stack:
        v = stack.pop()
        if v in seen or v not in gates:
            continue
        seen.add(v)
        g = gates[v]
        for fan in (g.left, g.right):
            if fan > 1:
                stack.append(aig_lit_var(fan))
    return sorted(seen)


def output_cnf(circuit: Circuit, roots: Sequence[int], disjoin: bool) -> Cnf:
    """Self-contained CNF asserting the given output literals.

    With ``disjoin`` the roots are asserted as a disjunction (bad-state
    predicates); otherwise each root is asserted individually (invariant
    constraints).  Gate clauses for the cones are included so the result
    stands alone.
    """
    clauses: list[list[int]] = []
    gates = circuit.gate_map()
    for v in cone_gate_vars(circuit, roots):
        clauses.extend(gate_clauses(gates[v]))
    if disjoin:
        if TRUE_LIT in roots:
            return Cnf([], circuit.max_var)
        top = [aig_to_cnf_lit(l) for l in roots if l != FALSE_LIT]
        if not top:
            clauses = [[]]  # no bad literal can hold: predicate is false
        else:
            clauses.append(top)
    else:
        for lit in roots:
            if lit == TRUE_LIT:
                continue
            if lit == FALSE_LIT:
                clauses = [[]]
                break
            clauses.append([aig_to_cnf_lit(lit)])
    return Cnf(clauses, circuit.max_var)


# ---------------------------------------------------------------------------
# Two-rail encoding for three-valued reasoning over circuits.


@dataclass(frozen=True)
class TwoRailMap:
    """Rail pair per circuit variable: (0,0)=X, (1,0)=0, (0,1)=1.

    The CNF excludes (1,1) for every mapped variable and encodes each AND
    gate so that complete rail assignments to the fanins force the output
    rails to the three-valued AND of the fanin values.
    """

    cnf: Cnf
    rails: dict[int, tuple[int, int]]  # circuit var -> (rail0 var, rail1 var)
    num_vars: int

    def lit_rails(self, lit: int) -> tuple[int, int]:
        """Rails of an AIG literal; negation swaps the rails."""
        if lit <= 1:
            raise ValueError("constant literals carry no rails")
        r0, r1 = self.rails[aig_lit_var(lit)]
        return (r1, r0) if lit_negated(lit) else (r0, r1)


def two_rail_encode(circuit: Circuit) -> TwoRailMap:
    rails = {v: (2 * v - 1, 2 * v) for v in range(1, circuit.max_var + 1)}
    clauses: list[list[int]] = []
    for v in range(1, circuit.max_var + 1):
        r0, r1 = rails[v]
        clauses.append([-r0, -r1])

    def lit_rails(lit: int) -> tuple[int, int]:
        r0, r1 = rails[aig_lit_var(lit)]
        return (r1, r0) if lit_negated(lit) else (r0, r1)

    for gate in circuit.and_gates:
        h0, h1 = rails[gate.var]
        if gate.left == FALSE_LIT or gate.right == FALSE_LIT:
            clauses.append([h0])
            continue
        fans = [f for f in (gate.left, gate.right) if f != TRUE_LIT]
        if not fans:
            clauses.append([h1])
            continue
        if len(fans) == 1:
            a0, a1 = lit_rails(fans[0])
            clauses += [[-h0, a0], [h0, -a0], [-h1, a1], [h1, -a1]]
            continue
        a0, a1 = lit_rails(fans[0])
        b0, b1 = lit_rails(fans[1])
        # one-rail: output is 1 iff both fanins are 1
        clauses += [[-h1, a1], [-h1, b1], [h1, -a1, -b1]]
        # zero-rail: output is 0 iff some fanin is 0
        clauses += [[h0, -a0], [h0, -b0], [-h0, a0, b0]]
    return TwoRailMap(
        cnf=Cnf(clauses, 2 * circuit.max_var),
        rails=rails,
        num_vars=2 * circuit.max_var,
    )
