import itertools

import pytest
from hypothesis import given, strategies as st

from pogen.circuit import AndGate, Circuit, next_state, parse_aiger
from pogen.logic import (
    Clause,
    Cnf,
    Cube,
    InvalidCubeError,
    tseitin,
    two_rail_encode,
)
from pogen.sat import Solver

from conftest import random_circuit
from helpers import count_models


def test_cube_canonical_and_negate():
    c = Cube([3, -1, 2])
    assert c.literals == (-1, 2, 3)
    cl = c.negate()
    assert isinstance(cl, Clause)
    assert cl.literals == (1, -2, -3)
    assert cl.negate() == c


def test_negate_example():
    # not(s1 and not s2) == (not s1 or s2)
    assert Cube([1, -2]).negate() == Clause([-1, 2])


def test_cube_conflicting_literals_rejected():
    with pytest.raises(InvalidCubeError):
        Cube([1, -1])


def test_subsumes():
    assert Cube([1]).subsumes(Cube([1, 2]))
    assert not Cube([1, 2]).subsumes(Cube([1]))
    assert not Cube([-1]).subsumes(Cube([1, 2]))


def test_cnf_eval_matches_truth_table():
    cnf = Cnf([[1, -2], [-1, 2]])
    expected = {
        (False, False): True,
        (False, True): False,
        (True, False): False,
        (True, True): True,
    }
    for a, b in expected:
        assign = {1: a, 2: b}
        assert cnf.eval(assign) == expected[(a, b)]


@given(st.lists(st.integers(min_value=1, max_value=8), min_size=0, max_size=8),
       st.lists(st.booleans(), min_size=8, max_size=8))
def test_negate_involution(vars_, signs):
    lits = list({v * (1 if s else -1) for v, s in zip(vars_, signs)})
    filtered = []
    seen = set()
    for l in lits:
        if abs(l) not in seen:
            filtered.append(l)
            seen.add(abs(l))
    cube = Cube(filtered)
    assert cube.negate().negate() == cube


def test_tseitin_single_and_gate_clause_shape():
    circuit = Circuit(
        num_inputs=2,
        latches=(),
        and_gates=(AndGate(3, 2, 4),),
        bad_literals=(),
        constraint_literals=(),
        max_var=3,
    )
    enc = tseitin(circuit)
    got = {frozenset(c.literals) for c in enc.cnf}
    assert got == {
        frozenset({-3, 1}),
        frozenset({-3, 2}),
        frozenset({3, -1, -2}),
    }


def test_tseitin_passthrough_latch():
    # One latch fed by the input: CNF equivalent to next == input.
    text = "aag 2 1 1 0 0\n2\n4 2 0\n"
    enc = tseitin(parse_aiger(text))
    # vars: i1=1, s1=2, s1'=3
    assert count_models(3, [list(c.literals) for c in enc.cnf]) == 4
    for assign in itertools.product((False, True), repeat=3):
        d = {v + 1: assign[v] for v in range(3)}
        ok = enc.cnf.eval(d)
        assert ok == (d[3] == d[1])


def test_tseitin_model_count_matches_transitions(sys_a_circuit):
    enc = tseitin(sys_a_circuit)
    clauses = [list(c.literals) for c in enc.cnf]
    # Models projected onto (s, i, s') must match brute-force evaluation:
    # every (state, input) pair yields exactly one transition.
    n = enc.num_vars
    models = count_models(n, clauses)
    assert models == 2 ** (len(enc.state_vars) + len(enc.input_vars))
    # Spot-check projection correctness against direct evaluation.
    for bits in itertools.product((0, 1), repeat=3):
        s1, s2, i1 = bits
        nxt = next_state(sys_a_circuit, {2: s1, 3: s2}, {1: i1})
        solver = Solver(n)
        solver.add_cnf(enc.cnf)
        assum = [2 if s1 else -2, 3 if s2 else -3, 1 if i1 else -1]
        res = solver.solve(assum)
        assert res.sat
        assert bool(res.model[6]) == bool(nxt[2])
        assert bool(res.model[7]) == bool(nxt[3])


def test_random_circuit_tseitin_transition_count(rng):
    for _ in range(10):
        text = random_circuit(rng, n_latches=2, n_inputs=2, n_gates=4)
        circuit = parse_aiger(text)
        enc = tseitin(circuit)
        clauses = [list(c.literals) for c in enc.cnf]
        assert count_models(enc.num_vars, clauses) == 2 ** 4


def test_two_rail_and_gate_semantics():
    # h = a and b over rails; check ternary outputs by unit propagation.
    circuit = Circuit(
        num_inputs=2,
        latches=(),
        and_gates=(AndGate(3, 2, 4),),
        bad_literals=(),
        constraint_literals=(),
        max_var=3,
    )
    tr = two_rail_encode(circuit)

    def propagate(a, b):
        s = Solver(tr.num_vars)
        s.add_cnf(tr.cnf)
        assum = []
        for var, val in ((1, a), (2, b)):
            r0, r1 = tr.rails[var]
            if val == 0:
                assum += [r0, -r1]
            elif val == 1:
                assum += [r1, -r0]
            else:
                assum += [-r0, -r1]
        res = s.solve(assum)
        assert res.sat
        h0, h1 = tr.rails[3]
        got0, got1 = res.model[h0], res.model[h1]
        if got0 and not got1:
            return 0
        if got1 and not got0:
            return 1
        return "X"

    assert propagate("X", 0) == 0
    assert propagate("X", 1) == "X"
    assert propagate("X", "X") == "X"
    assert propagate(1, 1) == 1


def test_two_rail_imprecision_matches_simulation():
    # b = a and not a propagates X even though b is constant false.
    circuit = Circuit(
        num_inputs=1,
        latches=(),
        and_gates=(AndGate(2, 2, 3),),
        bad_literals=(),
        constraint_literals=(),
        max_var=2,
    )
    tr = two_rail_encode(circuit)
    s = Solver(tr.num_vars)
    s.add_cnf(tr.cnf)
    r0, r1 = tr.rails[1]
    res = s.solve([-r0, -r1])
    assert res.sat
    b0, b1 = tr.rails[2]
    assert not res.model[b0] and not res.model[b1]


def test_aiger_roundtrip(sys_a_circuit, rng):
    from pogen.circuit import unparse_aiger

    assert parse_aiger(unparse_aiger(sys_a_circuit)) == sys_a_circuit
    for _ in range(20):
        text = random_circuit(
            rng,
            n_latches=rng.randint(0, 3),
            n_inputs=rng.randint(0, 3),
            n_gates=rng.randint(0, 5),
            with_constraint=rng.random() < 0.4,
        )
        c = parse_aiger(text)
        assert parse_aiger(unparse_aiger(c)) == c


def test_aiger_errors():
    from pogen.circuit import AigerError, UnsupportedFormatError

    with pytest.raises(UnsupportedFormatError):
        parse_aiger("aig 1 1 0 0 0\n")
    with pytest.raises(AigerError):
        parse_aiger("nope\n")
    with pytest.raises(AigerError):
        parse_aiger("aag 1 1 0 1 0\n2\n6\n")  # literal out of range
    with pytest.raises(AigerError):
        # gate output below fanin: breaks topological order
        parse_aiger("aag 3 2 0 1 1\n2\n4\n6\n6 8 2\n")
    with pytest.raises(UnsupportedFormatError):
        parse_aiger("aag 1 1 0 0 0 0 0 1 0\n2\n2\n")  # justice section
    with pytest.raises(AigerError):
        parse_aiger("aag 1 0 1 0 0\n2 2 2\n")  # uninitialized latch


def test_empty_and_passthrough_circuits():
    c0 = parse_aiger("aag 0 0 0 1 0\n0\n")
    assert c0.latches == () and c0.bad_literals == (0,)
    c1 = parse_aiger("aag 1 1 0 1 0\n2\n2\n")
    assert c1.num_inputs == 1 and c1.bad_literals == (2,)
