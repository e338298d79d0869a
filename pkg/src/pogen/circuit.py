"""And-inverter circuits and the ASCII AIGER frontend.

Circuits use the AIGER variable/literal convention: variable ids are
positive ints, literal ``2*v`` is the variable, ``2*v + 1`` its negation,
and the literals 0/1 denote constant false/true.  Inputs occupy variables
``1..I``, latches ``I+1..I+L``, AND gates the remaining ids in topological
order.
"""

from __future__ import annotations

from dataclasses import dataclass


class AigerError(ValueError):
    """Malformed AIGER input."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnsupportedFormatError(AigerError):
    """Well-formed input in a variant this frontend does not accept."""


def lit_var(lit: int) -> int:
    return lit >> 1


def lit_negated(lit: int) -> bool:
    return bool(lit & 1)


def var_lit(var: int, negated: bool = False) -> int:
    return 2 * var + int(negated)


def lit_not(lit: int) -> int:
    return lit ^ 1


FALSE_LIT = 0
TRUE_LIT = 1


@dataclass(frozen=True)
class Latch:
    var: int
    next_lit: int
    init: int  # 0 or 1; uninitialized latches are rejected at parse time


@dataclass(frozen=True)
class AndGate:
    var: int
    left: int
    right: int


@dataclass(frozen=True)
class Circuit:
    num_inputs: int
    latches: tuple[Latch, ...]
    and_gates: tuple[AndGate, ...]
    bad_literals: tuple[int, ...]
    constraint_literals: tuple[int, ...]
    max_var: int

    @property
    def input_vars(self) -> tuple[int, ...]:
        return tuple(range(1, self.num_inputs + 1))

    @property
    def latch_vars(self) -> tuple[int, ...]:
        return tuple(l.var for l in self.latches)

    @property
    def gate_vars(self) -> tuple[int, ...]:
        return tuple(g.var for g in self.and_gates)

    def gate_map(self) -> dict[int, AndGate]:
        return {g.var: g for g in self.and_gates}

    def validate(self) -> None:
        """Check structural invariants; raises AigerError on violation."""
        n_in, n_l = self.num_inputs, len(self.latches)
        expected_latch = list(range(n_in + 1, n_in + n_l + 1))
        if [l.var for l in self.latches] != expected_latch:
            raise AigerError("latch variables must follow the inputs contiguously")
        prev = n_in + n_l
        for g in self.and_gates:
            if g.var <= prev:
                raise AigerError(f"gate variable {g.var} not strictly increasing")
            for lit in (g.left, g.right):
                if lit > 1 and lit_var(lit) >= g.var:
                    raise AigerError(
                        f"gate {g.var} fanin literal {lit} breaks topological order"
                    )
            prev = g.var
        if prev > self.max_var:
            raise AigerError(f"variable {prev} exceeds declared maximum {self.max_var}")
        for lit in self._all_literals():
            if lit > 1 and lit_var(lit) > self.max_var:
                raise AigerError(f"literal {lit} exceeds declared maximum variable")
        for latch in self.latches:
            if latch.init not in (0, 1):
                raise AigerError(f"latch {latch.var} has unsupported init {latch.init}")

    def _all_literals(self):
        for latch in self.latches:
            yield latch.next_lit
        for g in self.and_gates:
            yield g.left
            yield g.right
        yield from self.bad_literals
        yield from self.constraint_literals

    def support_vars(self, lit: int) -> frozenset[int]:
        """Input/latch variables in the cone of ``lit``."""
        if lit <= 1:
            return frozenset()
        gates = self.gate_map()
        seen: set[int] = set()
        leaves: set[int] = set()
        stack = [lit_var(lit)]
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            gate = gates.get(v)
            if gate is None:
                leaves.add(v)
                continue
            for fan in (gate.left, gate.right):
                if fan > 1:
                    stack.append(lit_var(fan))
        return frozenset(leaves)


def parse_aiger(text: bytes | str) -> Circuit:
    """Parse an ASCII AIGER 1.0/1.9 file into a Circuit."""
    if isinstance(text, bytes):
        text = text.decode("ascii", errors="replace")
    lines = text.splitlines()
    if not lines:
        raise AigerError("empty input", line=1)
    header = lines[0].split()
    if header[:1] == ["aig"]:
        raise UnsupportedFormatError("binary 'aig' format is not supported", line=1)
    if not header or header[0] != "aag":
        raise AigerError("expected 'aag' header", line=1)
    fields = header[1:]
    if len(fields) not in (5, 7, 9) or not all(f.isdigit() for f in fields):
        raise AigerError("header must be 'aag M I L O A [B C [J F]]'", line=1)
    nums = [int(f) for f in fields]
    m, n_in, n_latch, n_out, n_and = nums[:5]
    n_bad = nums[5] if len(nums) > 5 else 0
    n_con = nums[6] if len(nums) > 6 else 0
    n_just = nums[7] if len(nums) > 7 else 0
    n_fair = nums[8] if len(nums) > 8 else 0
    if n_just or n_fair:
        raise UnsupportedFormatError(
            "justice/fairness sections are not supported (safety checking only)", line=1
        )

    pos = 1

    def next_line(what: str) -> tuple[str, int]:
        nonlocal pos
        if pos >= len(lines):
            raise AigerError(f"unexpected end of file, expected {what}", line=pos + 1)
        ln = lines[pos]
        pos += 1
        return ln, pos

    def parse_lit(tok: str, lineno: int) -> int:
        if not tok.lstrip("-").isdigit() or tok.startswith("-"):
            raise AigerError(f"expected a literal, got {tok!r}", line=lineno)
        lit = int(tok)
        if lit > 1 and lit_var(lit) > m:
            raise AigerError(f"literal {lit} exceeds maximum variable {m}", line=lineno)
        return lit

    for i in range(n_in):
        ln, lineno = next_line("input")
        lit = parse_lit(ln.strip(), lineno)
        if lit != var_lit(i + 1):
            raise AigerError(f"input {i} must be literal {var_lit(i + 1)}", line=lineno)

    latches = []
    for i in range(n_latch):
        ln, lineno = next_line("latch")
        toks = ln.split()
        if len(toks) not in (2, 3):
            raise AigerError("latch line must be 'lit next [init]'", line=lineno)
        cur = parse_lit(toks[0], lineno)
        var = lit_var(cur)
        if lit_negated(cur) or var != n_in + i + 1:
            raise AigerError(
                f"latch {i} must be literal {var_lit(n_in + i + 1)}", line=lineno
            )
        nxt = parse_lit(toks[1], lineno)
        init = 0
        if len(toks) == 3:
            if toks[2] == toks[0]:
                raise AigerError(
                    "uninitialized latches are not supported (init must be 0 or 1)",
                    line=lineno,
                )
            if toks[2] not in ("0", "1"):
                raise AigerError(f"bad latch init {toks[2]!r}", line=lineno)
            init = int(toks[2])
        latches.append(Latch(var, nxt, init))

    outputs = []
    for _ in range(n_out):
        ln, lineno = next_line("output")
        outputs.append(parse_lit(ln.strip(), lineno))
    bads = []
    for _ in range(n_bad):
        ln, lineno = next_line("bad")
        bads.append(parse_lit(ln.strip(), lineno))
    constraints = []
    for _ in range(n_con):
        ln, lineno = next_line("constraint")
        constraints.append(parse_lit(ln.strip(), lineno))

    gates = []
    for _ in range(n_and):
        ln, lineno = next_line("and gate")
        toks = ln.split()
        if len(toks) != 3:
            raise AigerError("and line must be 'out left right'", line=lineno)
        out = parse_lit(toks[0], lineno)
        if lit_negated(out):
            raise AigerError("gate output literal must be positive", line=lineno)
        left = parse_lit(toks[1], lineno)
        right = parse_lit(toks[2], lineno)
        gates.append(AndGate(lit_var(out), left, right))

    # Outputs double as bad-state detectors when no B section is present.
    bad_literals = tuple(bads) if n_bad else tuple(outputs)
    circuit = Circuit(
        num_inputs=n_in,
        latches=tuple(latches),
        and_gates=tuple(gates),
        bad_literals=bad_literals,
        constraint_literals=tuple(constraints),
        max_var=m,
    )
    try:
        circuit.validate()
    except AigerError as exc:
        raise AigerError(str(exc), line=pos) from None
    return circuit


def unparse_aiger(circuit: Circuit) -> str:
    """Serialize a Circuit back to canonical ASCII AIGER text."""
    use_19 = bool(circuit.constraint_literals)
    n_out = 0 if use_19 else len(circuit.bad_literals)
    n_bad = len(circuit.bad_literals) if use_19 else 0
    header = [
        "aag",
        str(circuit.max_var),
        str(circuit.num_inputs),
        str(len(circuit.latches)),
        str(n_out),
        str(len(circuit.and_gates)),
    ]
    if use_19:
        header += [str(n_bad), str(len(circuit.constraint_literals))]
    out = [" ".join(header)]
    for v in circuit.input_vars:
        out.append(str(var_lit(v)))
    for latch in circuit.latches:
        out.append(f"{var_lit(latch.var)} {latch.next_lit} {latch.init}")
    for lit in circuit.bad_literals:
        out.append(str(lit))
    for lit in circuit.constraint_literals:
        out.append(str(lit))
    for g in circuit.and_gates:
        out.append(f"{var_lit(g.var)} {g.left} {g.right}")
    return "\n".join(out) + "\n"


class CircuitBuilder:
    """Grows a circuit by appending gates; used by constraint repairs."""

    def __init__(self, base: Circuit):
        self.num_inputs = base.num_inputs
        self.latches = list(base.latches)
        self.gates = list(base.and_gates)
        self.bad_literals = list(base.bad_literals)
        self.constraint_literals = list(base.constraint_literals)
        self._next_var = base.max_var + 1

    def add_and(self, left: int, right: int) -> int:
        """Add an AND gate, returns its output literal. Folds constants."""
        if left == FALSE_LIT or right == FALSE_LIT:
            return FALSE_LIT
        if left == TRUE_LIT:
            return right
        if right == TRUE_LIT:
            return left
        if left == right:
            return left
        if left == lit_not(right):
            return FALSE_LIT
        var = self._next_var
        self._next_var += 1
        self.gates.append(AndGate(var, left, right))
        return var_lit(var)

    def add_or(self, left: int, right: int) -> int:
        return lit_not(self.add_and(lit_not(left), lit_not(right)))

    def add_mux(self, sel: int, if_true: int, if_false: int) -> int:
        a = self.add_and(sel, if_true)
        b = self.add_and(lit_not(sel), if_false)
        return self.add_or(a, b)

    def conjoin(self, lits: list[int]) -> int:
        acc = TRUE_LIT
        for lit in lits:
            acc = self.add_and(acc, lit)
        return acc

    def add_latch(self, init: int) -> int:
        """Append a latch variable, renumbering gates to keep ids contiguous.

        The new latch's next function defaults to constant 0; set it with
        set_latch_next once its driving literal exists.  Returns the latch var.
        """
        var = self.num_inputs + len(self.latches) + 1

        def shift_lit(lit: int) -> int:
            if lit <= 1 or lit_var(lit) < var:
                return lit
            return lit + 2

        self.latches = [
            Latch(l.var, shift_lit(l.next_lit), l.init) for l in self.latches
        ]
        self.gates = [
            AndGate(g.var + 1, shift_lit(g.left), shift_lit(g.right))
            for g in self.gates
        ]
        self.bad_literals = [shift_lit(l) for l in self.bad_literals]
        self.constraint_literals = [shift_lit(l) for l in self.constraint_literals]
        self.latches.append(Latch(var, FALSE_LIT, init))
        self._next_var += 1
        return var

    def set_latch_next(self, var: int, next_lit: int) -> None:
        for i, latch in enumerate(self.latches):
            if latch.var == var:
                self.latches[i] = Latch(var, next_lit, latch.init)
                return
        raise AigerError(f"no latch with variable {var}")

    def build(self) -> Circuit:
        circuit = Circuit(
            num_inputs=self.num_inputs,
            latches=tuple(self.latches),
            and_gates=tuple(self.gates),
            bad_literals=tuple(self.bad_literals),
            constraint_literals=tuple(self.constraint_literals),
            max_var=self._next_var - 1,
        )
        circuit.validate()
        return circuit


def eval_circuit(
    circuit: Circuit, state: dict[int, int], inputs: dict[int, int]
) -> dict[int, int]:
    """Plain Boolean evaluation; returns values for every variable."""
    values: dict[int, int] = {}
    values.update(state)
    values.update(inputs)

    def lit_value(lit: int) -> int:
        if lit == FALSE_LIT:
            return 0
        if lit == TRUE_LIT:
            return 1
        v = values[lit_var(lit)]
        return v ^ 1 if lit_negated(lit) else v

    for g in circuit.and_gates:
        values[g.var] = lit_value(g.left) & lit_value(g.right)
    return values


def next_state(
    circuit: Circuit, state: dict[int, int], inputs: dict[int, int]
) -> dict[int, int]:
    """Successor latch values under plain Boolean semantics."""
    values = eval_circuit(circuit, state, inputs)

    def lit_value(lit: int) -> int:
        if lit <= 1:
            return lit
        v = values[lit_var(lit)]
        return v ^ 1 if lit_negated(lit) else v

    return {l.var: lit_value(l.next_lit) for l in circuit.latches}
