"""Optimization layers over the SAT core: exact partial MaxSAT, exact
unate covering, 2-QBF decision via counterexample-guided refinement, and
MaxQBF via cardinality-bounded QBF search."""

from __future__ import annotations

from dataclasses import dataclass, field

from .logic import Cnf
from .sat import Solver


class OptError(Exception):
    pass


class HardUnsatError(OptError):
    """The hard part of a MaxSAT problem is unsatisfiable."""


class InfeasibleCoverError(OptError):
    """Some clause cannot be hit by any candidate literal."""


class InvalidBaseError(OptError):
    """A MaxQBF instance whose all-selectors-false base is already invalid."""


# ---------------------------------------------------------------------------
# Totalizer cardinality structure.


class Totalizer:
    """Totalizer over input literals with both implication directions.

    outputs[j] is a variable equivalent (under the clauses) to "at least
    j+1 inputs are true"; assuming -outputs[k] bounds the count to at most
    k, assuming outputs[k-1] forces at least k.
    """

    def __init__(self, solver: Solver, inputs: list[int]):
        self.solver = solver
        self.inputs = list(inputs)
        self.outputs: list[int] = self._build(self.inputs)

    def _build(self, lits: list[int]) -> list[int]:
        if len(lits) <= 1:
            return list(lits)
        mid = len(lits) // 2
        left = self._build(lits[:mid])
        right = self._build(lits[mid:])
        return self._merge(left, right)

    def _merge(self, a: list[int], b: list[int]) -> list[int]:
        out = [self.solver.new_var() for _ in range(len(a) + len(b))]
        for i in range(len(a) + 1):
            for j in range(len(b) + 1):
                s = i + j
                if s >= 1:
                    clause = [out[s - 1]]
                    if i >= 1:
                        clause.append(-a[i - 1])
                    if j >= 1:
                        clause.append(-b[j - 1])
                    self.solver.add_clause(clause)
                if s < len(out):
                    clause = [-out[s]]
                    if i < len(a):
                        clause.append(a[i])
                    if j < len(b):
                        clause.append(b[j])
                    self.solver.add_clause(clause)
        return out


# ---------------------------------------------------------------------------
# Partial MaxSAT.


@dataclass
class MaxSatProblem:
    hard: Cnf
    soft: list[int]  # unit soft clauses, weight 1 each


def max_sat(
    problem: MaxSatProblem, solver: Solver | None = None
) -> tuple[list[int], int]:
    """Exact partial MaxSAT; returns (model, number of satisfied softs).

    Iterative SAT with one totalizer over relaxation literals, tightening
    the bound from the first model down until unsatisfiable.
    """
    s = solver or Solver()
    s.reserve(problem.hard.num_vars)
    s.add_cnf(problem.hard)
    first = s.solve()
    if not first.sat:
        raise HardUnsatError("hard clauses are unsatisfiable")
    soft = list(problem.soft)
    if not soft:
        return first.model, 0
    for lit in soft:
        s.reserve(abs(lit))
    relax = []
    for lit in soft:
        r = s.new_var()
        s.add_clause([lit, r])
        relax.append(r)
    tot = Totalizer(s, relax)

    def violations(model: list[int]) -> int:
        return sum(1 for lit in soft if model[abs(lit)] != (1 if lit > 0 else 0))

    res = s.solve()
    assert res.sat
    best_model = res.model
    best_v = violations(res.model)
    while best_v > 0:
        bound = best_v - 1
        res = s.solve([-tot.outputs[bound]])
        if not res.sat:
            break
        best_model = res.model
        best_v = violations(res.model)
    return best_model, len(soft) - best_v


def wdimacs(problem: MaxSatProblem) -> str:
    """WDIMACS dump for debugging."""
    top = len(problem.soft) + 1
    lines = [
        f"p wcnf {problem.hard.num_vars} {len(problem.hard) + len(problem.soft)} {top}"
    ]
    for clause in problem.hard:
        lines.append(f"{top} " + " ".join(map(str, clause)) + " 0")
    for lit in problem.soft:
        lines.append(f"1 {lit} 0")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Exact minimum unate covering.


def min_cover(
    clauses: list[frozenset[int]] | list[set[int]] | list[tuple[int, ...]],
    candidates: set[int] | frozenset[int],
) -> set[int]:
    """Minimum-cardinality subset of candidates hitting every clause.

    Branch and bound with essential/dominance reductions and a lower bound
    from a greedily built set of pairwise independent clauses.  Exact.
    """
    cand = sorted(candidates, key=lambda l: (abs(l), l < 0))
    rows: list[frozenset[int]] = []
    for c in clauses:
        hit = frozenset(l for l in c if l in candidates)
        if not hit:
            raise InfeasibleCoverError(f"clause {sorted(c)} has no candidate literal")
        rows.append(hit)

    def greedy(rows: list[frozenset[int]]) -> set[int]:
        picked: set[int] = set()
        remaining = list(rows)
        while remaining:
            counts: dict[int, int] = {}
            for r in remaining:
                for l in r:
                    counts[l] = counts.get(l, 0) + 1
            best = max(sorted(counts), key=lambda l: (counts[l], -abs(l)))
            picked.add(best)
            remaining = [r for r in remaining if best not in r]
        return picked

    best: set[int] = greedy(rows)

    def lower_bound(rows: list[frozenset[int]]) -> int:
        used: set[int] = set()
        lb = 0
        for r in sorted(rows, key=lambda r: (len(r), sorted(r))):
            if not (r & used):
                lb += 1
                used |= r
        return lb

    def reduce(
        rows: list[frozenset[int]], chosen: set[int]
    ) -> tuple[list[frozenset[int]], set[int]] | None:
        changed = True
        rows = list(rows)
        chosen = set(chosen)
        while changed:
            changed = False
            for r in rows:
                if len(r) == 1:
                    (l,) = r
                    chosen.add(l)
                    rows = [x for x in rows if l not in x]
                    changed = True
                    break
            if changed:
                continue
            # row dominance: keep the harder (subset) rows
            rows_sorted = sorted(set(rows), key=lambda r: (len(r), sorted(r)))
            kept: list[frozenset[int]] = []
            for r in rows_sorted:
                if not any(k <= r for k in kept):
                    kept.append(r)
            if len(kept) != len(rows):
                rows = kept
                changed = True
        return rows, chosen

    def search(rows: list[frozenset[int]], chosen: set[int]) -> None:
        nonlocal best
        reduced = reduce(rows, chosen)
        rows, chosen = reduced
        if len(chosen) >= len(best):
            return
        if not rows:
            best = set(chosen)
            return
        if len(chosen) + lower_bound(rows) >= len(best):
            return
        pivot = min(rows, key=lambda r: (len(r), sorted(r)))
        for l in sorted(pivot, key=lambda l: (abs(l), l < 0)):
            search([r for r in rows if l not in r], chosen | {l})

    search(rows, set())
    return best


# ---------------------------------------------------------------------------
# 2-QBF via counterexample-guided refinement.


@dataclass
class Qbf2Problem:
    """exists X forall U exists E : matrix, with X possibly empty."""

    exists_outer: tuple[int, ...]
    forall: tuple[int, ...]
    exists_inner: tuple[int, ...]
    matrix: Cnf

    def __post_init__(self):
        blocks = (set(self.exists_outer), set(self.forall), set(self.exists_inner))
        seen: set[int] = set()
        for b in blocks:
            if b & seen:
                raise OptError("variable bound in more than one quantifier block")
            seen |= b
        used = {abs(l) for c in self.matrix for l in c}
        unbound = used - seen
        if unbound:
            raise OptError(f"matrix variable {min(unbound)} is unbound")


@dataclass
class Qbf2Result:
    valid: bool
    witness: dict[int, bool] | None = None  # outer-exists assignment
    counterexample: dict[int, bool] | None = None  # falsifying forall assignment
    stats: dict = field(default_factory=dict)


def qbf2_solve(problem: Qbf2Problem) -> Qbf2Result:
    """Decide validity by candidate/verifier refinement.

    The candidate solver proposes an outer assignment; the verifier searches
    a universal assignment with no inner-existential completion; refinement
    conjoins the matrix cofactor under that counterexample over a fresh copy
    of the inner variables.
    """
    matrix = problem.matrix
    x_vars = list(problem.exists_outer)
    u_vars = list(problem.forall)
    stats = {"candidates": 0, "verifier_calls": 0, "refinements": 0}

    if not u_vars:
        s = Solver(matrix.num_vars)
        s.add_cnf(matrix)
        res = s.solve()
        if not res.sat:
            return Qbf2Result(False, stats=stats)
        witness = {v: bool(res.model[v]) for v in x_vars}
        return Qbf2Result(True, witness=witness, stats=stats)

    x_set = set(x_vars)
    u_set = set(u_vars)

    # Verifier-side check solver: full matrix, queried under assumptions.
    check = Solver(matrix.num_vars)
    check.add_cnf(matrix)

    cand = Solver(max(x_vars, default=0))
    last_cex: dict[int, bool] | None = None

    def find_counterexample(xhat: dict[int, bool]) -> dict[int, bool] | None:
        """A forall assignment falsifying every inner completion, or None."""
        vcand = Solver(max(u_vars))
        x_assum = [v if xhat[v] else -v for v in sorted(xhat)]
        while True:
            stats["verifier_calls"] += 1
            prop = vcand.solve()
            if not prop.sat:
                return None
            ustar = {v: bool(prop.model[v]) for v in u_vars}
            u_assum = [v if ustar[v] else -v for v in u_vars]
            res = check.solve(x_assum + u_assum)
            if not res.sat:
                return ustar
            # The proposed u admits an inner model; require future u's to
            # falsify the matrix under that model (some clause all-false).
            emodel = res.model
            selectors = []
            for clause in matrix:
                fixed_true = False
                u_lits = []
                for lit in clause:
                    v = abs(lit)
                    if v in x_set:
                        if xhat[v] == (lit > 0):
                            fixed_true = True
                            break
                    elif v in u_set:
                        u_lits.append(lit)
                    elif bool(emodel[v]) == (lit > 0):
                        fixed_true = True
                        break
                if fixed_true or not u_lits:
                    continue
                z = vcand.new_var()
                for lit in u_lits:
                    vcand.add_clause([-z, -lit])
                selectors.append(z)
            if not selectors:
                # The inner model satisfies the matrix for every u: no
                # counterexample exists.
                return None
            vcand.add_clause(selectors)

    while True:
        stats["candidates"] += 1
        res = cand.solve()
        if not res.sat:
            return Qbf2Result(False, counterexample=last_cex, stats=stats)
        xhat = {v: bool(res.model[v]) for v in x_vars}
        cex = find_counterexample(xhat)
        if cex is None:
            return Qbf2Result(True, witness=xhat, stats=stats)
        last_cex = cex
        stats["refinements"] += 1
        # Conjoin the cofactor matrix[U := cex] over a fresh inner copy.
        copy_map: dict[int, int] = {}
        empty = False
        for clause in matrix:
            lits = []
            satisfied = False
            for lit in clause:
                v = abs(lit)
                if v in cex:
                    if cex[v] == (lit > 0):
                        satisfied = True
                        break
                    continue
                if v in x_set:
                    lits.append(lit)
                    continue
                if v not in copy_map:
                    copy_map[v] = cand.new_var()
                nv = copy_map[v]
                lits.append(nv if lit > 0 else -nv)
            if satisfied:
                continue
            if not lits:
                empty = True
                break
            cand.add_clause(lits)
        if empty:
            return Qbf2Result(False, counterexample=cex, stats=stats)


def qdimacs(problem: Qbf2Problem) -> str:
    """QDIMACS dump for debugging."""
    lines = [f"p cnf {problem.matrix.num_vars} {len(problem.matrix)}"]
    if problem.exists_outer:
        lines.append("e " + " ".join(map(str, problem.exists_outer)) + " 0")
    if problem.forall:
        lines.append("a " + " ".join(map(str, problem.forall)) + " 0")
    if problem.exists_inner:
        lines.append("e " + " ".join(map(str, problem.exists_inner)) + " 0")
    for clause in problem.matrix:
        lines.append(" ".join(map(str, clause)) + " 0")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# MaxQBF: maximize satisfied unit soft clauses over the outermost block.


@dataclass
class MaxQbfProblem:
    qbf2: Qbf2Problem
    soft: list[int]  # unit soft clauses over outermost-exists selector vars

    def __post_init__(self):
        outer = set(self.qbf2.exists_outer)
        stray = [l for l in self.soft if abs(l) not in outer]
        if stray:
            raise OptError(
                f"soft selector {stray[0]} is not bound in the outermost block"
            )


def max_qbf(
    problem: MaxQbfProblem, descending: bool = True
) -> tuple[dict[int, bool], int]:
    """Exact MaxQBF by cardinality-bounded validity search.

    Scans candidate cardinality levels for the soft selectors (descending
    from all-true by default); the first valid level is the optimum.
    Returns the witness selector assignment and the satisfied-soft count.
    """
    soft = list(problem.soft)
    base = problem.qbf2
    n = len(soft)

    def solve_with_bound(k: int) -> Qbf2Result:
        if k == 0:
            return qbf2_solve(base)
        helper = Solver(base.matrix.num_vars)
        clauses = [list(c.literals) for c in base.matrix]
        tot = Totalizer(_ClauseSink(helper, clauses), soft)
        matrix = Cnf(clauses, helper.num_vars)
        aux = tuple(
            v
            for v in range(base.matrix.num_vars + 1, helper.num_vars + 1)
        )
        bounded = Qbf2Problem(
            exists_outer=tuple(base.exists_outer) + aux,
            forall=base.forall,
            exists_inner=base.exists_inner,
            matrix=matrix.conjoin(Cnf([[tot.outputs[k - 1]]], helper.num_vars)),
        )
        return qbf2_solve(bounded)

    levels = range(n, -1, -1) if descending else range(0, n + 1)
    best: tuple[dict[int, bool], int] | None = None
    for k in levels:
        res = solve_with_bound(k)
        if descending:
            if res.valid:
                witness = res.witness or {}
                count = sum(
                    1 for lit in soft if witness.get(abs(lit), False) == (lit > 0)
                )
                return witness, count
        else:
            if res.valid:
                witness = res.witness or {}
                count = sum(
                    1 for lit in soft if witness.get(abs(lit), False) == (lit > 0)
                )
                best = (witness, max(count, k))
            else:
                break
    if best is None:
        raise InvalidBaseError("instance invalid even with all softs relaxed")
    return best


class _ClauseSink:
    """Adapter letting Totalizer write into a plain clause list."""

    def __init__(self, var_source: Solver, clauses: list[list[int]]):
        self._vars = var_source
        self._clauses = clauses

    def new_var(self) -> int:
        return self._vars.new_var()

    def add_clause(self, lits) -> None:
        self._clauses.append(list(lits))
