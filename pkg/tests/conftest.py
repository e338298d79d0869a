"""Shared fixtures: the three reference systems and random generators.

SYS-A: two latches s1, s2 and input i1 with h = s1 and s2, s1' = h or i1,
s2' = constant 0; bad output observes s2 (never reachable, so the system
is safe).  The canonical generalization instance targets s1' with witness
m = not s1 and not s2, i = i1.

SYS-B: the left-unique one-variable relation s1 = i1 and s1', given
directly as a three-clause CNF.

SYS-C: one latch with s1' = i1 under the invariant constraint
C = not (i1 and s1); crafted so the unconstrained function is total but
the constrained relation is not left-total.
"""

from __future__ import annotations

import random

import pytest

from pogen.circuit import parse_aiger
from pogen.formats import (
    Caps,
    ConstraintMode,
    TransitionSystem,
    circuit_to_ts,
    from_cnf,
)
from pogen.logic import Cnf, Cube
from pogen.pogp import PogpInstance

SYS_A_TEXT = """aag 5 1 2 1 2
2
4 11 0
6 0 0
6
8 4 6
10 9 3
"""

SYS_B_CNF = [[-1, 2], [-1, 3], [1, -2, -3]]

SYS_C_TEXT = """aag 3 1 1 0 1 1 1
2
4 2
4
7
6 2 4
"""

COUNTER2_TEXT = """aag 6 0 2 1 4
2 3 0
4 11 0
12
6 4 3
8 5 2
10 7 9
12 4 2
"""


@pytest.fixture
def sys_a_circuit():
    return parse_aiger(SYS_A_TEXT)


@pytest.fixture
def sys_a(sys_a_circuit):
    return circuit_to_ts(sys_a_circuit, ConstraintMode.KEEP_SEPARATE)


@pytest.fixture
def sys_a_instance(sys_a) -> PogpInstance:
    # State vars: s1=2, s2=3; input i1=1; next vars: s1'=6, s2'=7.
    return PogpInstance(
        ts=sys_a,
        frame=Cnf(),
        d=Cube([2]),
        d_next=Cube([6]),
        m=Cube([-2, -3]),
        i=Cube([1]),
        t_next=Cube([6, -7]),
    )


@pytest.fixture
def sys_b() -> TransitionSystem:
    # Left-unique by construction: s1 is a function of (i1, s1').
    return from_cnf(
        state_vars=[1],
        input_vars=[2],
        next_vars=[3],
        init=Cnf([[-1]]),
        bad=Cnf([[1]]),
        trans=Cnf(SYS_B_CNF),
        caps=Caps(left_unique=True, right_total=True),
        origin="reversed",
    )


def make_sys_b_instance(ts: TransitionSystem, m_positive: bool) -> PogpInstance:
    if m_positive:
        m, i = Cube([1]), Cube([2])
    else:
        m, i = Cube([-1]), Cube([-2])
    return PogpInstance(
        ts=ts,
        frame=Cnf(),
        d=None,
        d_next=Cube([3]),
        m=m,
        i=i,
        t_next=Cube([3]),
    )


@pytest.fixture
def sys_b_instance(sys_b) -> PogpInstance:
    return make_sys_b_instance(sys_b, m_positive=False)


@pytest.fixture
def sys_c_circuit():
    return parse_aiger(SYS_C_TEXT)


@pytest.fixture
def sys_c(sys_c_circuit):
    return circuit_to_ts(sys_c_circuit, ConstraintMode.KEEP_SEPARATE)


@pytest.fixture
def counter2():
    return circuit_to_ts(parse_aiger(COUNTER2_TEXT), ConstraintMode.REJECT)


@pytest.fixture
def rng():
    return random.Random(20240817)


# ---------------------------------------------------------------------------
# Random generators.


def random_circuit(rng, n_latches, n_inputs, n_gates, with_constraint=False):
    """A random AIG in valid topological form, as AIGER text."""
    n_vars = n_inputs + n_latches + n_gates
    lines = [[]]
    for v in range(1, n_inputs + 1):
        lines.append([2 * v])
    avail = list(range(1, n_inputs + n_latches + 1))

    def rand_lit():
        if not avail:
            return rng.randint(0, 1)
        return 2 * rng.choice(avail) + rng.randint(0, 1)

    gate_lines = []
    for g in range(n_gates):
        var = n_inputs + n_latches + g + 1
        left, right = rand_lit(), rand_lit()
        gate_lines.append([2 * var, left, right])
        avail.append(var)

    latch_lines = []
    for j in range(n_latches):
        var = n_inputs + j + 1
        latch_lines.append([2 * var, rand_lit(), rng.randint(0, 1)])
    bad = rand_lit()
    constraint = rand_lit() if with_constraint else None
    n_bad, n_con = (1, 1) if with_constraint else (1, 0)
    if with_constraint:
        header = f"aag {n_vars} {n_inputs} {n_latches} 0 {n_gates} {n_bad} {n_con}"
    else:
        header = f"aag {n_vars} {n_inputs} {n_latches} 1 {n_gates}"
    out = [header]
    for v in range(1, n_inputs + 1):
        out.append(str(2 * v))
    for line in latch_lines:
        out.append(" ".join(map(str, line)))
    out.append(str(bad))
    if constraint is not None:
        out.append(str(constraint))
    for line in gate_lines:
        out.append(" ".join(map(str, line)))
    return "\n".join(out) + "\n"


def random_cnf(rng, n_vars, n_clauses, width=3):
    clauses = []
    for _ in range(n_clauses):
        k = rng.randint(1, min(width, n_vars))
        vs = rng.sample(range(1, n_vars + 1), k)
        clauses.append([v if rng.random() < 0.5 else -v for v in vs])
    return clauses


def random_relation_ts(rng, n_state, n_inputs, n_clauses) -> TransitionSystem:
    """A random CNF-defined transition system (general relation)."""
    state = list(range(1, n_state + 1))
    inputs = list(range(n_state + 1, n_state + n_inputs + 1))
    nxt = list(range(n_state + n_inputs + 1, 2 * n_state + n_inputs + 1))
    all_vars = state + inputs + nxt
    clauses = []
    for _ in range(n_clauses):
        k = rng.randint(1, 3)
        vs = rng.sample(all_vars, min(k, len(all_vars)))
        clauses.append([v if rng.random() < 0.5 else -v for v in vs])
    init = Cnf([[-v] for v in state])
    bad = Cnf([[v] for v in state])
    return from_cnf(
        state_vars=state,
        input_vars=inputs,
        next_vars=nxt,
        init=init,
        bad=bad,
        trans=Cnf(clauses, 2 * n_state + n_inputs),
        caps=Caps(),
        origin="dimspec",
    )


def instance_from_model(ts, rng=None, frame_clauses=0):
    """Build a valid generalization instance by solving the transition CNF."""
    from pogen.sat import Solver as _Solver

    solver = _Solver(ts.num_vars)
    solver.add_cnf(ts.trans)
    if ts.constraint is not None:
        solver.add_cnf(ts.constraint)
    res = solver.solve()
    if not res.sat:
        return None
    m = Cube(res.model_cube(ts.state_vars))
    i = Cube(res.model_cube(ts.input_vars))
    t = Cube(res.model_cube(ts.next_vars))
    if rng is None:
        d_next = t
    else:
        k = rng.randint(1, len(ts.next_vars)) if ts.next_vars else 0
        lits = rng.sample(list(t.literals), k) if k else []
        d_next = Cube(lits)
    d = None
    frame = Cnf([], ts.num_vars)
    if rng is not None and frame_clauses:
        mvals = {abs(l): l for l in m}
        clauses = []
        for _ in range(frame_clauses):
            k = rng.randint(1, min(2, len(ts.state_vars)))
            vs = rng.sample(list(ts.state_vars), k)
            clause = [mvals[v] if rng.random() < 0.7 else -mvals[v] for v in vs]
            if not any(l in m for l in clause):
                clause[0] = mvals[abs(clause[0])]
            clauses.append(clause)
        frame = Cnf(clauses, ts.num_vars)
    inst = PogpInstance(
        ts=ts, frame=frame, d=d, d_next=d_next, m=m, i=i, t_next=t
    )
    inst.validate()
    return inst


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo one line per acceptance criterion in the summary block."""
    try:
        from test_acceptance import ACCEPTANCE_LINES
    except ImportError:
        return
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
