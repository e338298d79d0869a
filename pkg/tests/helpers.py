"""Independent oracles for the test suite.

Everything here works by exhaustive enumeration over small spaces and never
calls into the solver stack it is checking.
"""

from __future__ import annotations

import itertools


def enumerate_sat(num_vars: int, clauses: list[list[int]]) -> bool:
    """Truth-table satisfiability via bitmask enumeration."""
    if any(len(c) == 0 for c in clauses):
        return False
    full = (1 << (1 << num_vars)) - 1
    var_mask = {}
    for v in range(1, num_vars + 1):
        mask = 0
        for a in range(1 << num_vars):
            if (a >> (v - 1)) & 1:
                mask |= 1 << a
        var_mask[v] = mask
    acc = full
    for clause in clauses:
        cm = 0
        for lit in clause:
            m = var_mask[abs(lit)]
            cm |= m if lit > 0 else (~m & full)
        acc &= cm
        if acc == 0:
            return False
    return acc != 0


def count_models(num_vars: int, clauses: list[list[int]]) -> int:
    count = 0
    for bits in itertools.product((False, True), repeat=num_vars):
        assign = {v: bits[v - 1] for v in range(1, num_vars + 1)}
        if eval_clauses(clauses, assign):
            count += 1
    return count


def eval_clauses(clauses: list[list[int]], assign: dict[int, bool]) -> bool:
    for clause in clauses:
        if not any(assign[abs(l)] == (l > 0) for l in clause):
            return False
    return True


def all_models(num_vars: int, clauses: list[list[int]]):
    for bits in itertools.product((False, True), repeat=num_vars):
        assign = {v: bits[v - 1] for v in range(1, num_vars + 1)}
        if eval_clauses(clauses, assign):
            yield assign


def brute_min_cover(clauses: list[set[int]], candidates: set[int]) -> int:
    """Smallest hitting-set size by subset enumeration."""
    cands = sorted(candidates, key=abs)
    for size in range(0, len(cands) + 1):
        for pick in itertools.combinations(cands, size):
            ps = set(pick)
            if all(c & ps for c in clauses):
                return size
    raise AssertionError("uncoverable")


def brute_max_sat(num_vars: int, hard: list[list[int]], soft: list[int]) -> int:
    """Maximum satisfied soft units over all models of the hard part."""
    best = -1
    for assign in all_models(num_vars, hard):
        sat = sum(1 for lit in soft if assign[abs(lit)] == (lit > 0))
        best = max(best, sat)
    if best < 0:
        raise AssertionError("hard part unsatisfiable")
    return best


def expand_qbf(
    exists_outer: list[int],
    forall: list[int],
    exists_inner: list[int],
    num_vars: int,
    clauses: list[list[int]],
) -> bool:
    """Validity of exists-forall-exists by direct expansion."""

    def inner_sat(partial: dict[int, bool]) -> bool:
        free = [v for v in exists_inner]
        for bits in itertools.product((False, True), repeat=len(free)):
            assign = dict(partial)
            assign.update({v: b for v, b in zip(free, bits)})
            if eval_clauses(clauses, assign):
                return True
        return False

    def forall_holds(partial: dict[int, bool]) -> bool:
        for bits in itertools.product((False, True), repeat=len(forall)):
            assign = dict(partial)
            assign.update({v: b for v, b in zip(forall, bits)})
            if not inner_sat(assign):
                return False
        return True

    for bits in itertools.product((False, True), repeat=len(exists_outer)):
        assign = {v: b for v, b in zip(exists_outer, bits)}
        if forall_holds(assign):
            return True
    return False


def bfs_reachable(ts, transition_fn, initial_states):
    """Explicit-state reachable set given a successor function."""
    seen = set(initial_states)
    frontier = list(initial_states)
    while frontier:
        state = frontier.pop()
        for nxt in transition_fn(state):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def system_bfs_verdict(ts) -> str:
    """Explicit-state safety verdict for a transition system.

    Uses direct circuit evaluation when the system is circuit-defined
    (admissible steps only, when a separate constraint exists) and SAT-based
    successor enumeration otherwise.
    """
    import itertools as it

    from pogen.circuit import eval_circuit, next_state
    from pogen.sat import Solver

    svars, ivars, nvars = ts.state_vars, ts.input_vars, ts.next_vars

    def assum(vars_, bits):
        return [v if b else -v for v, b in zip(vars_, bits)]

    init_solver = Solver(ts.num_vars)
    init_solver.add_cnf(ts.init)
    init_states = []
    while True:
        res = init_solver.solve()
        if not res.sat:
            break
        bits = tuple(res.model[v] for v in svars)
        init_states.append(bits)
        init_solver.add_clause([-v if b else v for v, b in zip(svars, bits)])

    circuit = ts.circuit if ts.origin in ("circuit", "circuit+constraint") else None

    if circuit is not None:

        def successors(bits):
            state = {v: b for v, b in zip(svars, bits)}
            out = []
            for ibits in it.product((0, 1), repeat=len(ivars)):
                inputs = {v: b for v, b in zip(ivars, ibits)}
                if ts.constraint is not None:
                    values = eval_circuit(circuit, state, inputs)

                    def lit_val(lit):
                        if lit <= 1:
                            return lit
                        v = values[lit >> 1]
                        return v ^ 1 if lit & 1 else v

                    if not all(lit_val(l) for l in circuit.constraint_literals):
                        continue
                nxt = next_state(circuit, state, inputs)
                out.append(tuple(nxt[v] for v in svars))
            return out

    else:
        trans_clauses = [list(c.literals) for c in ts.trans]
        if ts.constraint is not None:
            trans_clauses += [list(c.literals) for c in ts.constraint]

        def successors(bits):
            solver = Solver(ts.num_vars)
            for c in trans_clauses:
                solver.add_clause(c)
            base = assum(svars, bits)
            out = []
            while True:
                res = solver.solve(base)
                if not res.sat:
                    break
                pair = tuple(res.model[v] for v in ivars), tuple(
                    res.model[v] for v in nvars
                )
                out.append(pair[1])
                block = [
                    (-v if b else v) for v, b in zip(ivars, pair[0])
                ] + [(-v if b else v) for v, b in zip(nvars, pair[1])]
                solver.add_clause(block)
            return out

    seen = set(init_states)
    work = list(init_states)
    while work:
        cur = work.pop()
        for nxt in successors(cur):
            if nxt not in seen:
                seen.add(nxt)
                work.append(nxt)

    bad_solver = Solver(ts.num_vars)
    bad_solver.add_cnf(ts.bad)
    for bits in seen:
        if bad_solver.solve(assum(svars, bits)).sat:
            return "unsafe"
    return "safe"
