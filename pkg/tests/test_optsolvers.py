import pytest

from pogen.logic import Cnf
from pogen.optsolvers import (
    HardUnsatError,
    InfeasibleCoverError,
    InvalidBaseError,
    MaxQbfProblem,
    MaxSatProblem,
    Qbf2Problem,
    max_qbf,
    max_sat,
    min_cover,
    qbf2_solve,
    qdimacs,
    wdimacs,
)

from conftest import random_cnf
from helpers import brute_max_sat, brute_min_cover, expand_qbf


def test_max_sat_mutual_exclusion():
    model, n = max_sat(MaxSatProblem(Cnf([[-1, -2]]), [1, 2]))
    assert n == 1


def test_max_sat_no_hard():
    model, n = max_sat(MaxSatProblem(Cnf([], 2), [1, 2]))
    assert n == 2
    assert model[1] and model[2]


def test_max_sat_hard_unsat():
    with pytest.raises(HardUnsatError):
        max_sat(MaxSatProblem(Cnf([[1], [-1]]), [1]))


def test_max_sat_random_matches_enumeration(rng):
    for _ in range(60):
        n = rng.randint(1, 7)
        hard = random_cnf(rng, n, rng.randint(0, 2 * n))
        softs = sorted(
            rng.sample(range(1, n + 1), rng.randint(1, n))
        )
        soft = [v if rng.random() < 0.5 else -v for v in softs]
        try:
            want = brute_max_sat(n, hard, soft)
        except AssertionError:
            with pytest.raises(HardUnsatError):
                max_sat(MaxSatProblem(Cnf(hard, n), soft))
            continue
        _, got = max_sat(MaxSatProblem(Cnf(hard, n), soft))
        assert got == want, (hard, soft)


def test_max_sat_monotone_under_hard_clauses(rng):
    for _ in range(20):
        n = rng.randint(2, 6)
        hard = random_cnf(rng, n, n)
        soft = [v for v in range(1, n + 1)]
        try:
            base = brute_max_sat(n, hard, soft)
        except AssertionError:
            continue
        _, got = max_sat(MaxSatProblem(Cnf(hard, n), soft))
        extra = random_cnf(rng, n, 1)
        try:
            tightened = brute_max_sat(n, hard + extra, soft)
        except AssertionError:
            continue
        _, got2 = max_sat(MaxSatProblem(Cnf(hard + extra, n), soft))
        assert got2 <= got
        assert got == base and got2 == tightened


def test_min_cover_simple():
    rows = [frozenset({-1, 3}), frozenset({-2, 3})]
    got = min_cover(rows, {-1, -2, 3})
    assert got == {3}


def test_min_cover_empty():
    assert min_cover([], {1, 2}) == set()


def test_min_cover_infeasible():
    with pytest.raises(InfeasibleCoverError):
        min_cover([frozenset({5})], {1, 2})


def test_min_cover_random_matches_brute_force(rng):
    for _ in range(40):
        n_elems = rng.randint(1, 10)
        n_rows = rng.randint(1, 12)
        cands = set()
        for v in range(1, n_elems + 1):
            cands.add(v if rng.random() < 0.5 else -v)
        cands = set(list(cands))
        rows = []
        for _ in range(n_rows):
            k = rng.randint(1, min(4, len(cands)))
            rows.append(set(rng.sample(sorted(cands, key=abs), k)))
        want = brute_min_cover(rows, cands)
        got = min_cover([frozenset(r) for r in rows], cands)
        assert len(got) == want
        for r in rows:
            assert r & got


def test_qbf2_forall_exists_iff():
    # forall a exists b: a <-> b
    p = Qbf2Problem((), (1,), (2,), Cnf([[-1, 2], [1, -2]]))
    assert qbf2_solve(p).valid


def test_qbf2_forall_exists_and():
    p = Qbf2Problem((), (1,), (2,), Cnf([[1], [2]]))
    res = qbf2_solve(p)
    assert not res.valid
    assert res.counterexample == {1: False}


def test_qbf2_empty_forall_is_sat():
    p = Qbf2Problem((1,), (), (2,), Cnf([[1, 2]]))
    res = qbf2_solve(p)
    assert res.valid


def test_qbf2_outer_witness():
    # exists x forall u exists e: (x) and (u -> e) and (not u -> e)
    p = Qbf2Problem((1,), (2,), (3,), Cnf([[1], [-2, 3], [2, 3]]))
    res = qbf2_solve(p)
    assert res.valid
    assert res.witness == {1: True}


def test_qbf2_random_matches_expansion(rng):
    for _ in range(80):
        n_x = rng.randint(0, 2)
        n_u = rng.randint(0, 3)
        n_e = rng.randint(1, 3)
        x = list(range(1, n_x + 1))
        u = list(range(n_x + 1, n_x + n_u + 1))
        e = list(range(n_x + n_u + 1, n_x + n_u + n_e + 1))
        n = n_x + n_u + n_e
        clauses = random_cnf(rng, n, rng.randint(1, 2 * n))
        want = expand_qbf(x, u, e, n, clauses)
        got = qbf2_solve(Qbf2Problem(tuple(x), tuple(u), tuple(e), Cnf(clauses, n)))
        assert got.valid == want, (x, u, e, clauses)


def test_qbf2_forall_exists_reduction_shape(rng):
    # Validity of two-block forall-exists formulas matches the expansion
    # oracle (the shape the soundness checker reduces to).
    for _ in range(30):
        n_x = rng.randint(1, 3)
        n_y = rng.randint(1, 3)
        x = list(range(1, n_x + 1))
        y = list(range(n_x + 1, n_x + n_y + 1))
        clauses = random_cnf(rng, n_x + n_y, rng.randint(1, 8))
        want = expand_qbf([], x, y, n_x + n_y, clauses)
        got = qbf2_solve(Qbf2Problem((), tuple(x), tuple(y), Cnf(clauses, n_x + n_y)))
        assert got.valid == want


def test_max_qbf_simple():
    # exists u forall a exists b with soft {u}:
    # u -> (b <-> a); valid for u but also without: optimum selects u.
    matrix = Cnf([[-1, -2, 3], [-1, 2, -3]])
    p = MaxQbfProblem(Qbf2Problem((1,), (2,), (3,), matrix), soft=[1])
    witness, count = max_qbf(p)
    assert count == 1 and witness[1]


def test_max_qbf_forced_zero():
    # u forces a contradiction under some universal value: optimum is 0.
    # u -> (b and not a <-> ...): use u -> (a) which fails for a=0.
    matrix = Cnf([[-1, 2], [3, -3]])
    p = MaxQbfProblem(Qbf2Problem((1,), (2,), (3,), matrix), soft=[1])
    witness, count = max_qbf(p)
    assert count == 0


def test_max_qbf_invalid_base():
    matrix = Cnf([[2], [-2]])  # forall 2: contradiction
    p = MaxQbfProblem(Qbf2Problem((1,), (2,), (3,), matrix), soft=[1])
    with pytest.raises(InvalidBaseError):
        max_qbf(p)


def test_max_qbf_random_matches_expansion(rng):
    for _ in range(25):
        n_u = rng.randint(1, 3)
        n_a = rng.randint(1, 2)
        n_e = rng.randint(1, 2)
        u = list(range(1, n_u + 1))
        a = list(range(n_u + 1, n_u + n_a + 1))
        e = list(range(n_u + n_a + 1, n_u + n_a + n_e + 1))
        n = n_u + n_a + n_e
        clauses = random_cnf(rng, n, rng.randint(1, 6))
        base_valid = expand_qbf(u, a, e, n, clauses)
        if not base_valid:
            continue

        def level_valid(k):
            # any selector subset of size >= k working?
            import itertools as it

            for subset in it.combinations(u, k):
                forced = [[v] for v in subset]
                if expand_qbf(u, a, e, n, clauses + forced):
                    return True
            return False

        want = max(k for k in range(0, n_u + 1) if level_valid(k))
        p = MaxQbfProblem(Qbf2Problem(tuple(u), tuple(a), tuple(e), Cnf(clauses, n)), soft=list(u))
        _, got = max_qbf(p)
        assert got == want, (u, a, e, clauses)

        _, got_asc = max_qbf(p, descending=False)
        assert got_asc == want


def test_dumps():
    p = MaxSatProblem(Cnf([[1, 2]]), [1])
    assert wdimacs(p).startswith("p wcnf")
    q = Qbf2Problem((1,), (2,), (3,), Cnf([[1, 2, 3]]))
    assert "a 2 0" in qdimacs(q)


def test_max_qbf_witness_rechecks_and_is_locally_maximal(rng):
    from pogen.logic import Cnf as _Cnf

    checked = 0
    while checked < 10:
        n_u, n_a, n_e = rng.randint(1, 3), rng.randint(1, 2), rng.randint(1, 2)
        u = list(range(1, n_u + 1))
        a = list(range(n_u + 1, n_u + n_a + 1))
        e = list(range(n_u + n_a + 1, n_u + n_a + n_e + 1))
        n = n_u + n_a + n_e
        clauses = random_cnf(rng, n, rng.randint(1, 6))
        base = Qbf2Problem(tuple(u), tuple(a), tuple(e), _Cnf(clauses, n))
        try:
            witness, count = max_qbf(MaxQbfProblem(base, soft=list(u)))
        except InvalidBaseError:
            continue
        checked += 1
        chosen = [v for v in u if witness.get(v)]
        assert len(chosen) == count
        # Re-checking the returned selector assignment validates.
        forced = _Cnf(clauses + [[v] for v in chosen], n)
        assert qbf2_solve(Qbf2Problem(tuple(u), tuple(a), tuple(e), forced)).valid
        # No strict superset of the chosen selectors validates: a valid
        # superset would carry count+1 true selectors, contradicting the
        # cardinality search's optimum.
        for extra in u:
            if extra in chosen:
                continue
            more = _Cnf(clauses + [[v] for v in chosen] + [[extra]], n)
            assert not qbf2_solve(
                Qbf2Problem(tuple(u), tuple(a), tuple(e), more)
            ).valid
