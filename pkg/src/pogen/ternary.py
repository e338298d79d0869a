"""Event-driven three-valued (01X) circuit simulation.

Values are 0, 1, and X encoded as the ints 0, 1, 2.  AND follows
X and 0 = 0, X and 1 = X, X and X = X; negation maps X to X.
"""

from __future__ import annotations

import heapq

from .circuit import Circuit, FALSE_LIT, TRUE_LIT, lit_negated, lit_var

ZERO = 0
ONE = 1
X = 2

_NOT = (1, 0, 2)


def t_and(a: int, b: int) -> int:
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE and b == ONE:
        return ONE
    return X


def t_not(a: int) -> int:
    return _NOT[a]


class TernaryFrame:
    """Mutable 01X valuation of every circuit node.

    set_value re-simulates event-driven: only the fanout cone of the changed
    node is recomputed, in topological order.
    """

    def __init__(self, circuit: Circuit):
        self.circuit = circuit
        self.values = [X] * (circuit.max_var + 1)
        self._gate_index = {g.var: i for i, g in enumerate(circuit.and_gates)}
        self._fanout: dict[int, list[int]] = {}
        for i, g in enumerate(circuit.and_gates):
            for fan in (g.left, g.right):
                if fan > 1:
                    self._fanout.setdefault(lit_var(fan), []).append(i)

    def lit_value(self, lit: int) -> int:
        if lit == FALSE_LIT:
            return ZERO
        if lit == TRUE_LIT:
            return ONE
        v = self.values[lit_var(lit)]
        return t_not(v) if lit_negated(lit) else v

    def reset(self, state: dict[int, int], inputs: dict[int, int]) -> None:
        """Assign leaves and evaluate every gate once in topological order."""
        for v in range(1, self.circuit.max_var + 1):
            self.values[v] = X
        self.values[0] = X
        for var, val in state.items():
            self.values[var] = val
        for var, val in inputs.items():
            self.values[var] = val
        for g in self.circuit.and_gates:
            self.values[g.var] = t_and(self.lit_value(g.left), self.lit_value(g.right))

    def set_value(self, var: int, value: int) -> None:
        if self.values[var] == value:
            return
        self.values[var] = value
        dirty: list[int] = []
        queued = set()
        for gi in self._fanout.get(var, ()):
            heapq.heappush(dirty, gi)
            queued.add(gi)
        gates = self.circuit.and_gates
        while dirty:
            gi = heapq.heappop(dirty)
            queued.discard(gi)
            g = gates[gi]
            new = t_and(self.lit_value(g.left), self.lit_value(g.right))
            if new == self.values[g.var]:
                continue
            self.values[g.var] = new
            for fo in self._fanout.get(g.var, ()):
                if fo not in queued:
                    heapq.heappush(dirty, fo)
                    queued.add(fo)

    def next_state_values(self) -> dict[int, int]:
        return {l.var: self.lit_value(l.next_lit) for l in self.circuit.latches}

    def constraint_values(self) -> list[int]:
        return [self.lit_value(l) for l in self.circuit.constraint_literals]


def simulate(
    circuit: Circuit, state: dict[int, int], inputs: dict[int, int]
) -> dict[int, int]:
    """One-shot 01X simulation; returns next-state latch values."""
    frame = TernaryFrame(circuit)
    frame.reset(state, inputs)
    return frame.next_state_values()
