"""Transition systems: circuit and DIMSPEC frontends, constraint repairs,
and relation reversal.

A TransitionSystem is a CNF-level view: predicates I(s), bad(s), T(s,i,s')
plus an optional separate invariant constraint C(s,i).  Capability flags
record which structural properties are guaranteed by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .circuit import Circuit, CircuitBuilder, lit_not, parse_aiger, var_lit
from .logic import Cnf, output_cnf, tseitin


class FormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConstraintModeError(ValueError):
    pass


class ConstraintMode(Enum):
    REJECT = "reject"
    SELF_LOOPS = "self_loops"
    DEAD_END = "dead_end"
    KEEP_SEPARATE = "keep_separate"


ORIGIN_CIRCUIT = "circuit"
ORIGIN_CIRCUIT_CONSTRAINT = "circuit+constraint"
ORIGIN_DIMSPEC = "dimspec"
ORIGIN_REVERSED = "reversed"


@dataclass(frozen=True)
class Caps:
    """Tri-state structural guarantees: True/False/None (unknown)."""

    right_unique: bool | None = None
    left_total: bool | None = None
    left_unique: bool | None = None
    right_total: bool | None = None

    def transpose(self) -> "Caps":
        return Caps(
            right_unique=self.left_unique,
            left_total=self.right_total,
            left_unique=self.right_unique,
            right_total=self.left_total,
        )


@dataclass(frozen=True)
class TransitionSystem:
    state_vars: tuple[int, ...]
    input_vars: tuple[int, ...]
    next_vars: tuple[int, ...]
    init: Cnf  # over s
    bad: Cnf  # over s plus private aux
    trans: Cnf  # over s, i, s', aux
    constraint: Cnf | None  # over s, i (plus aux defined in trans)
    caps: Caps
    origin: str
    circuit: Circuit | None  # forward-orientation circuit, when one exists
    num_vars: int

    def __post_init__(self):
        if len(self.state_vars) != len(self.next_vars):
            raise FormatError("state and next variable vectors differ in length")
        groups = (self.state_vars, self.input_vars, self.next_vars)
        total = sum(len(g) for g in groups)
        if len(set().union(*map(set, groups))) != total:
            raise FormatError("state, input, and next variables must be disjoint")

    @property
    def aux_vars(self) -> tuple[int, ...]:
        named = set(self.state_vars) | set(self.input_vars) | set(self.next_vars)
        return tuple(
            v for v in range(1, self.trans.num_vars + 1) if v not in named
        )

    def next_of(self) -> dict[int, int]:
        return dict(zip(self.state_vars, self.next_vars))

    def prev_of(self) -> dict[int, int]:
        return dict(zip(self.next_vars, self.state_vars))

    def semantic_trans(self) -> Cnf:
        """T as a predicate: the stored CNF with any separate constraint."""
        if self.constraint is None:
            return self.trans
        return self.trans.conjoin(self.constraint)


def circuit_to_ts(
    circuit: Circuit, mode: ConstraintMode = ConstraintMode.KEEP_SEPARATE
) -> TransitionSystem:
    """Build a transition system from a circuit, repairing constraints.

    self_loops and dead_end rewrite the circuit into a plain right-unique,
    left-total function; keep_separate stores C alongside the unconstrained
    function; reject refuses constrained circuits.
    """
    if circuit.constraint_literals:
        if mode == ConstraintMode.REJECT:
            raise ConstraintModeError(
                "circuit has invariant constraints (mode=reject)"
            )
        if mode == ConstraintMode.SELF_LOOPS:
            circuit = apply_self_loops(circuit)
        elif mode == ConstraintMode.DEAD_END:
            circuit = apply_dead_end(circuit)
    enc = tseitin(circuit)
    init = Cnf(
        [[v] if latch.init else [-v] for v, latch in zip(circuit.latch_vars, circuit.latches)],
        enc.num_vars,
    )
    bad = output_cnf(circuit, circuit.bad_literals, disjoin=True)
    if circuit.constraint_literals:
        constraint = output_cnf(circuit, circuit.constraint_literals, disjoin=False)
        caps = Caps(right_unique=True, left_total=False)
        origin = ORIGIN_CIRCUIT_CONSTRAINT
    else:
        constraint = None
        caps = Caps(right_unique=True, left_total=True)
        origin = ORIGIN_CIRCUIT
    return TransitionSystem(
        state_vars=enc.state_vars,
        input_vars=enc.input_vars,
        next_vars=enc.next_vars,
        init=init,
        bad=bad,
        trans=enc.cnf,
        constraint=constraint,
        caps=caps,
        origin=origin,
        circuit=circuit,
        num_vars=enc.num_vars,
    )


def apply_self_loops(circuit: Circuit) -> Circuit:
    """Feed each latch its old value whenever the constraint is violated."""
    b = CircuitBuilder(circuit)
    c_all = b.conjoin(list(b.constraint_literals))
    for latch in circuit.latches:
        new_next = b.add_mux(c_all, latch.next_lit, var_lit(latch.var))
        b.set_latch_next(latch.var, new_next)
    b.constraint_literals = []
    return b.build()


def apply_dead_end(circuit: Circuit) -> Circuit:
    """Route constraint violations into a dedicated absorbing dead state.

    Adds one latch d with next function d or not C, and restricts the bad
    predicate to non-dead states so verdicts stay comparable with the
    separate-constraint semantics.
    """
    b = CircuitBuilder(circuit)
    dead_var = b.add_latch(init=0)
    c_all = b.conjoin(list(b.constraint_literals))
    alive_and_ok = b.add_and(lit_not(var_lit(dead_var)), c_all)
    b.set_latch_next(dead_var, lit_not(alive_and_ok))
    b.bad_literals = [
        b.add_and(lit, lit_not(var_lit(dead_var))) for lit in b.bad_literals
    ]
    b.constraint_literals = []
    return b.build()


def reverse(ts: TransitionSystem) -> TransitionSystem:
    """Swap the roles of current and next state (and of init and bad).

    The transition CNF is only renamed: (a, i, b) is a transition of ts iff
    (b, i, a) is a transition of the result.  Capabilities transpose.
    """
    if ts.constraint is not None:
        raise ConstraintModeError(
            "cannot reverse a system with a separate constraint; repair it first"
        )
    mapping: dict[int, int] = {}
    for s, n in zip(ts.state_vars, ts.next_vars):
        mapping[s] = n
        mapping[n] = s
    return TransitionSystem(
        state_vars=ts.state_vars,
        input_vars=ts.input_vars,
        next_vars=ts.next_vars,
        init=ts.bad,
        bad=ts.init,
        trans=ts.trans.rename(mapping),
        constraint=None,
        caps=ts.caps.transpose(),
        origin=ORIGIN_REVERSED,
        circuit=ts.circuit,
        num_vars=ts.num_vars,
    )


def from_cnf(
    state_vars,
    input_vars,
    next_vars,
    init: Cnf,
    bad: Cnf,
    trans: Cnf,
    caps: Caps = Caps(),
    origin: str = ORIGIN_DIMSPEC,
    constraint: Cnf | None = None,
) -> TransitionSystem:
    """Assemble a relation-level transition system (fixtures, DIMSPEC)."""
    num_vars = max(
        trans.num_vars,
        init.num_vars,
        bad.num_vars,
        constraint.num_vars if constraint else 0,
        max([*state_vars, *input_vars, *next_vars], default=0),
    )
    return TransitionSystem(
        state_vars=tuple(state_vars),
        input_vars=tuple(input_vars),
        next_vars=tuple(next_vars),
        init=init,
        bad=bad,
        trans=trans,
        constraint=constraint,
        caps=caps,
        origin=origin,
        circuit=None,
        num_vars=num_vars,
    )


def parse_dimspec(text: bytes | str) -> TransitionSystem:
    """Parse the four-section DIMSPEC format (i/u/g/t CNFs).

    Sections i, u, g range over variables 1..n; the transition section over
    1..2n with n+v the primed copy of v.  The universal section is conjoined
    onto the transition relation for both the current and next state, and
    onto the initial states (see docs/formats.md).
    """
    if isinstance(text, bytes):
        text = text.decode("ascii", errors="replace")
    sections: dict[str, tuple[int, list[list[int]]]] = {}
    current: list[list[int]] | None = None
    cur_key = ""
    cur_vars = 0
    pending: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        toks = line.split()
        if toks[0] in ("i", "u", "g", "t") and len(toks) >= 2 and toks[1] == "cnf":
            if pending:
                raise FormatError("clause not terminated by 0", line=lineno)
            if len(toks) != 4 or not toks[2].isdigit() or not toks[3].isdigit():
                raise FormatError(
                    f"bad section header {line!r}; expected '<sec> cnf <vars> <clauses>'",
                    line=lineno,
                )
            cur_key = toks[0]
            cur_vars = int(toks[2])
            if cur_key in sections:
                raise FormatError(f"duplicate section {cur_key!r}", line=lineno)
            current = []
            sections[cur_key] = (cur_vars, current)
            continue
        if current is None:
            raise FormatError("clause before any section header", line=lineno)
        for tok in toks:
            try:
                lit = int(tok)
            except ValueError:
                raise FormatError(f"bad literal {tok!r}", line=lineno) from None
            if lit == 0:
                current.append(pending)
                pending = []
            else:
                if abs(lit) > cur_vars:
                    raise FormatError(
                        f"variable {abs(lit)} out of range for section {cur_key!r}",
                        line=lineno,
                    )
                pending.append(lit)
    if pending:
        raise FormatError("clause not terminated by 0")
    missing = {"i", "u", "g", "t"} - set(sections)
    if missing:
        raise FormatError(f"missing section(s): {', '.join(sorted(missing))}")

    n_i = sections["i"][0]
    n_u = sections["u"][0]
    n_g = sections["g"][0]
    n_t = sections["t"][0]
    n = max(n_i, n_u, n_g, (n_t + 1) // 2)
    if n_t > 2 * n:
        raise FormatError("transition section exceeds twice the state width")

    state_vars = tuple(range(1, n + 1))
    next_vars = tuple(range(n + 1, 2 * n + 1))
    u_clauses = sections["u"][1]
    u_cur = Cnf(u_clauses, n)
    u_next = u_cur.rename({v: v + n for v in state_vars})
    init = Cnf(sections["i"][1], n).conjoin(u_cur)
    bad = Cnf(sections["g"][1], n)
    trans = Cnf(sections["t"][1], 2 * n).conjoin(u_cur, u_next)
    return TransitionSystem(
        state_vars=state_vars,
        input_vars=(),
        next_vars=next_vars,
        init=init,
        bad=bad,
        trans=trans,
        constraint=None,
        caps=Caps(),
        origin=ORIGIN_DIMSPEC,
        circuit=None,
        num_vars=2 * n,
    )


def load_transition_system(
    path: str,
    fmt: str | None = None,
    mode: ConstraintMode = ConstraintMode.KEEP_SEPARATE,
) -> TransitionSystem:
    """Load a system from a file, sniffing AIGER vs DIMSPEC when needed."""
    with open(path, "rb") as fh:
        data = fh.read()
    if fmt is None:
        head = data.lstrip()[:4]
        if head.startswith(b"aag") or head.startswith(b"aig"):
            fmt = "aiger"
        else:
            fmt = "dimspec"
    if fmt == "aiger":
        return circuit_to_ts(parse_aiger(data), mode)
    if fmt == "dimspec":
        return parse_dimspec(data)
    raise FormatError(f"unknown format {fmt!r}")
