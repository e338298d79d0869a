"""Incremental CDCL SAT solving with assumptions and propagation views.

The solver keeps every clause it is given (no preprocessing, no clause
deletion), so clause identity is stable across solve calls.  Assumptions
are handled MiniSat-style as pseudo-decisions at the top levels; failed
assumptions yield an assumption core via final-conflict analysis.
"""

from __future__ import annotations

import heapq
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

TRUE = 1
FALSE = 0
UNASSIGNED = -1

FALSE_FIRST = "false_first"
TRUE_FIRST = "true_first"
PHASE_SAVING = "phase_saving"


class SatError(Exception):
    pass


class InconsistentAssignmentError(SatError):
    """propagate_with saw a conflicting assignment."""


class IncompletePropagationError(SatError):
    """BCP left required variables unassigned (relation not right-unique)."""

    def __init__(self, missing: Sequence[int]):
        super().__init__(f"propagation left {len(missing)} variable(s) open")
        self.missing = tuple(missing)


@dataclass
class SolveResult:
    status: str  # "sat" or "unsat"
    model: list[int] | None = None  # index by var: 0/1
    assumption_core: tuple[int, ...] | None = None

    @property
    def sat(self) -> bool:
        return self.status == "sat"

    def model_cube(self, variables: Iterable[int]) -> tuple[int, ...]:
        assert self.model is not None
        return tuple(v if self.model[v] else -v for v in variables)


@dataclass
class ImplicationView:
    """Snapshot of one BCP run over the clause database.

    ``order`` lists assigned literals in assignment order; ``reason`` maps a
    variable to the literals of its antecedent clause, or None when the
    variable was a root of the propagation (an element of the asserted cube).
    """

    order: list[int]
    reason: dict[int, tuple[int, ...] | None]

    def literal(self, var: int) -> int | None:
        for lit in self.order:
            if abs(lit) == var:
                return lit
        return None

    def is_root(self, var: int) -> bool:
        return self.reason.get(var, ()) is None


def _lit_index(lit: int) -> int:
    return (lit << 1) if lit > 0 else ((-lit) << 1) | 1


class Solver:
    def __init__(self, num_vars: int = 0):
        self.num_vars = 0
        self.clauses: list[list[int]] = []
        self._watches: list[list[int]] = [[], []]
        self._assign: list[int] = [UNASSIGNED]
        self._level: list[int] = [0]
        self._reason: list[int] = [-1]
        self._phase: list[bool] = [False]
        self._activity: list[float] = [0.0]
        self._trail: list[int] = []
        self._trail_lim: list[int] = []
        self._qhead = 0
        self._ok = True
        self._var_inc = 1.0
        self._order: list[tuple[float, int]] = []
        self.polarity_mode = PHASE_SAVING
        self.stats = Counter()
        if num_vars:
            self.reserve(num_vars)

    # -- variable management ------------------------------------------------

    def new_var(self) -> int:
        self.num_vars += 1
        self._assign.append(UNASSIGNED)
        self._level.append(0)
        self._reason.append(-1)
        self._phase.append(False)
        self._activity.append(0.0)
        self._watches.append([])
        self._watches.append([])
        heapq.heappush(self._order, (0.0, self.num_vars))
        return self.num_vars

    def reserve(self, num_vars: int) -> None:
        while self.num_vars < num_vars:
            self.new_var()

    def set_default_polarity(self, mode: str) -> None:
        if mode not in (FALSE_FIRST, TRUE_FIRST, PHASE_SAVING):
            raise ValueError(f"unknown polarity mode {mode!r}")
        self.polarity_mode = mode

    # -- clause management --------------------------------------------------

    def value_lit(self, lit: int) -> int:
        v = self._assign[abs(lit)]
        if v == UNASSIGNED:
            return UNASSIGNED
        return v if lit > 0 else v ^ 1

    def add_clause(self, literals: Iterable[int]) -> None:
        lits = sorted(set(int(l) for l in literals), key=lambda l: (abs(l), l < 0))
        for lit in lits:
            if lit == 0:
                raise SatError("literal 0 in clause")
        for a, b in zip(lits, lits[1:]):
            if a == -b:
                return  # tautology
        top = max((abs(l) for l in lits), default=0)
        if top > self.num_vars:
            self.reserve(top)
        if self._trail_lim:
            self._backtrack(0)
        if not lits:
            self._ok = False
            return
        if not self._ok:
            self.clauses.append(lits)
            return
        # Watches must sit on non-false literals or the clause is handled now
        # (level-0 state may already falsify part of it).
        for i, lit in enumerate(lits):
            if self.value_lit(lit) != FALSE:
                lits[0], lits[i] = lits[i], lits[0]
                break
        for i in range(1, len(lits)):
            if self.value_lit(lits[i]) != FALSE:
                lits[1], lits[i] = lits[i], lits[1]
                break
        cid = len(self.clauses)
        self.clauses.append(lits)
        first = self.value_lit(lits[0])
        if first == FALSE:
            self._ok = False
            return
        unit = len(lits) == 1 or self.value_lit(lits[1]) == FALSE
        if len(lits) > 1:
            self._watches[_lit_index(lits[0])].append(cid)
            self._watches[_lit_index(lits[1])].append(cid)
        if unit and first == UNASSIGNED:
            self._enqueue(lits[0], cid)
            if self._propagate() != -1:
                self._ok = False

    def add_cnf(self, cnf) -> None:
        for clause in cnf:
            self.add_clause(clause)

    def dump_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        for c in self.clauses:
            lines.append(" ".join(map(str, c)) + " 0")
        return "\n".join(lines) + "\n"

    # -- trail --------------------------------------------------------------

    def _decision_level(self) -> int:
        return len(self._trail_lim)

    def _enqueue(self, lit: int, reason: int) -> None:
        v = abs(lit)
        self._assign[v] = TRUE if lit > 0 else FALSE
        self._level[v] = self._decision_level()
        self._reason[v] = reason
        self._trail.append(lit)

    def _new_level(self) -> None:
        self._trail_lim.append(len(self._trail))

    def _backtrack(self, level: int) -> None:
        if self._decision_level() <= level:
            return
        bound = self._trail_lim[level]
        for lit in reversed(self._trail[bound:]):
            v = abs(lit)
            self._phase[v] = lit > 0
            self._assign[v] = UNASSIGNED
            self._reason[v] = -1
            heapq.heappush(self._order, (-self._activity[v], v))
        del self._trail[bound:]
        del self._trail_lim[level:]
        self._qhead = min(self._qhead, len(self._trail))

    # -- propagation --------------------------------------------------------

    def _propagate(self) -> int:
        """Run BCP to fixpoint; returns a conflicting clause id or -1."""
        while self._qhead < len(self._trail):
            p = self._trail[self._qhead]
            self._qhead += 1
            self.stats["propagations"] += 1
            wl = self._watches[_lit_index(-p)]
            i = 0
            j = 0
            conflict = -1
            n = len(wl)
            while i < n:
                cid = wl[i]
                i += 1
                lits = self.clauses[cid]
                if lits[0] == -p:
                    lits[0], lits[1] = lits[1], lits[0]
                first = lits[0]
                if self.value_lit(first) == TRUE:
                    wl[j] = cid
                    j += 1
                    continue
                moved = False
                for k in range(2, len(lits)):
                    if self.value_lit(lits[k]) != FALSE:
                        lits[1], lits[k] = lits[k], lits[1]
                        self._watches[_lit_index(lits[1])].append(cid)
                        moved = True
                        break
                if moved:
                    continue
                wl[j] = cid
                j += 1
                if self.value_lit(first) == FALSE:
                    while i < n:
                        wl[j] = wl[i]
                        j += 1
                        i += 1
                    conflict = cid
                    break
                self._enqueue(first, cid)
            del wl[j:]
            if conflict != -1:
                self._qhead = len(self._trail)
                return conflict
        return -1

    # -- conflict analysis ----------------------------------------------------

    def _bump(self, var: int) -> None:
        self._activity[var] += self._var_inc
        if self._activity[var] > 1e100:
            for v in range(1, self.num_vars + 1):
                self._activity[v] *= 1e-100
            self._var_inc *= 1e-100

    def _analyze(self, confl: int) -> tuple[list[int], int]:
        """1UIP conflict analysis; returns (learnt clause, backjump level)."""
        learnt: list[int] = [0]
        seen = [False] * (self.num_vars + 1)
        counter = 0
        p_trail = 0  # 0 while expanding the conflict clause itself
        index = len(self._trail) - 1
        level = self._decision_level()
        reason_lits = self.clauses[confl]
        while True:
            for q in reason_lits:
                if p_trail != 0 and q == p_trail:
                    continue
                v = abs(q)
                if not seen[v] and self._level[v] > 0:
                    seen[v] = True
                    self._bump(v)
                    if self._level[v] >= level:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[abs(self._trail[index])]:
                index -= 1
            p_trail = self._trail[index]
            v = abs(p_trail)
            seen[v] = False
            index -= 1
            counter -= 1
            if counter == 0:
                break
            reason_lits = self.clauses[self._reason[v]]
        learnt[0] = -p_trail
        if len(learnt) == 1:
            return learnt, 0
        max_i = 1
        for i in range(2, len(learnt)):
            if self._level[abs(learnt[i])] > self._level[abs(learnt[max_i])]:
                max_i = i
        learnt[1], learnt[max_i] = learnt[max_i], learnt[1]
        return learnt, self._level[abs(learnt[1])]

    def _analyze_final(self, failed: int) -> tuple[int, ...]:
        """Assumptions implying the negation of a failed assumption literal."""
        core = {failed}
        if self._decision_level() == 0:
            return tuple(sorted(core, key=lambda l: abs(l)))
        seen = [False] * (self.num_vars + 1)
        seen[abs(failed)] = True
        for i in range(len(self._trail) - 1, self._trail_lim[0] - 1, -1):
            lit = self._trail[i]
            v = abs(lit)
            if not seen[v]:
                continue
            rid = self._reason[v]
            if rid == -1:
                core.add(lit)  # pseudo-decision, i.e. an assumption
            else:
                for q in self.clauses[rid]:
                    if abs(q) != v and self._level[abs(q)] > 0:
                        seen[abs(q)] = True
            seen[v] = False
        return tuple(sorted(core, key=lambda l: abs(l)))

    def _learn(self, learnt: list[int]) -> None:
        cid = len(self.clauses)
        self.clauses.append(learnt)
        self.stats["learned"] += 1
        if len(learnt) > 1:
            self._watches[_lit_index(learnt[0])].append(cid)
            self._watches[_lit_index(learnt[1])].append(cid)
        self._enqueue(learnt[0], cid)

    # -- decisions ------------------------------------------------------------

    def _pick_branch_var(self) -> int:
        while self._order:
            act, v = self._order[0]
            if self._assign[v] != UNASSIGNED:
                heapq.heappop(self._order)
                continue
            if -act != self._activity[v]:
                heapq.heappop(self._order)
                heapq.heappush(self._order, (-self._activity[v], v))
                continue
            return v
        return 0

    def _decision_phase(self, var: int) -> bool:
        if self.polarity_mode == FALSE_FIRST:
            return False
        if self.polarity_mode == TRUE_FIRST:
            return True
        return self._phase[var]

    # -- main search ----------------------------------------------------------

    def solve(self, assumptions: Iterable[int] = ()) -> SolveResult:
        self.stats["solves"] += 1
        asum = [int(l) for l in assumptions]
        for lit in asum:
            if abs(lit) > self.num_vars:
                self.reserve(abs(lit))
        self._backtrack(0)
        if not self._ok:
            return SolveResult("unsat", assumption_core=())
        if self._propagate() != -1:
            self._ok = False
            return SolveResult("unsat", assumption_core=())
        conflicts_since_restart = 0
        restart_limit = 100
        while True:
            confl = self._propagate()
            if confl != -1:
                self.stats["conflicts"] += 1
                conflicts_since_restart += 1
                if self._decision_level() == 0:
                    self._ok = False
                    return SolveResult("unsat", assumption_core=())
                if self._decision_level() <= len(asum):
                    core = self._analyze_final_conflict(confl, asum)
                    self._backtrack(0)
                    return SolveResult("unsat", assumption_core=core)
                learnt, bt = self._analyze(confl)
                self._var_inc /= 0.95
                self._backtrack(bt)
                self._learn(learnt)
                continue
            if conflicts_since_restart >= restart_limit and self._decision_level() > len(asum):
                conflicts_since_restart = 0
                restart_limit = int(restart_limit * 1.5)
                self.stats["restarts"] += 1
                self._backtrack(len(asum))
                continue
            if self._decision_level() < len(asum):
                p = asum[self._decision_level()]
                val = self.value_lit(p)
                if val == TRUE:
                    self._new_level()  # placeholder level keeps indexing aligned
                elif val == FALSE:
                    core = self._analyze_final(p)
                    self._backtrack(0)
                    return SolveResult("unsat", assumption_core=core)
                else:
                    self._new_level()
                    self._enqueue(p, -1)
                continue
            v = self._pick_branch_var()
            if v == 0:
                model = [0] * (self.num_vars + 1)
                for u in range(1, self.num_vars + 1):
                    model[u] = self._assign[u]
                self._backtrack(0)
                return SolveResult("sat", model=model)
            self.stats["decisions"] += 1
            self._new_level()
            self._enqueue(v if self._decision_phase(v) else -v, -1)

    def _analyze_final_conflict(self, confl: int, asum: list[int]) -> tuple[int, ...]:
        """Assumption core from a conflict inside the assumption prefix."""
        core: set[int] = set()
        seen = [False] * (self.num_vars + 1)
        for q in self.clauses[confl]:
            if self._level[abs(q)] > 0:
                seen[abs(q)] = True
        asum_set = set(asum)
        for i in range(len(self._trail) - 1, (self._trail_lim[0] if self._trail_lim else 0) - 1, -1):
            lit = self._trail[i]
            v = abs(lit)
            if not seen[v]:
                continue
            rid = self._reason[v]
            if rid == -1:
                if lit in asum_set:
                    core.add(lit)
            else:
                for q in self.clauses[rid]:
                    if abs(q) != v and self._level[abs(q)] > 0:
                        seen[abs(q)] = True
            seen[v] = False
        return tuple(sorted(core, key=lambda l: abs(l)))

    # -- propagation views ------------------------------------------------------

    def propagate_with(
        self,
        assignment: Iterable[int],
        require_assigned: Iterable[int] = (),
    ) -> ImplicationView:
        """BCP the given literals on top of the database and snapshot reasons.

        Raises InconsistentAssignmentError if the literals conflict with the
        database, IncompletePropagationError if any required variable is left
        unassigned after propagation (the database is not right-unique for
        this assignment).  Solver state is restored afterwards.
        """
        if not self._ok:
            raise InconsistentAssignmentError("clause database is unsatisfiable")
        self._backtrack(0)
        if self._propagate() != -1:
            self._ok = False
            raise InconsistentAssignmentError("clause database is unsatisfiable")
        self._new_level()
        try:
            for lit in assignment:
                if abs(lit) > self.num_vars:
                    self.reserve(abs(lit))
                val = self.value_lit(lit)
                if val == FALSE:
                    raise InconsistentAssignmentError(
                        f"literal {lit} conflicts with the database"
                    )
                if val == UNASSIGNED:
                    self._enqueue(lit, -1)
            if self._propagate() != -1:
                raise InconsistentAssignmentError(
                    "assignment is not consistent with the database"
                )
            missing = [v for v in require_assigned if self._assign[v] == UNASSIGNED]
            if missing:
                raise IncompletePropagationError(missing)
            order = list(self._trail)
            reason: dict[int, tuple[int, ...] | None] = {}
            for lit in order:
                v = abs(lit)
                rid = self._reason[v]
                reason[v] = None if rid == -1 else tuple(self.clauses[rid])
            return ImplicationView(order=order, reason=reason)
        finally:
            self._backtrack(0)


class RemovalActivity:
    """Per-variable removal-success counter ordering generalization probes.

    Variables removed more often sort first; ties break on ascending id.
    """

    def __init__(self) -> None:
        self.counts: Counter[int] = Counter()

    def record_removed(self, variables: Iterable[int]) -> None:
        for v in variables:
            self.counts[v] += 1

    def key(self, var: int) -> tuple[int, int]:
        return (-self.counts[var], var)

    def order(self, variables: Iterable[int]) -> list[int]:
        return sorted(variables, key=self.key)
