"""Proof-obligation generalization strategies.

Every strategy consumes a PogpInstance and returns a GenResult whose cube
still satisfies the generalization contract: each state it contains has a
transition into the target cube (within the frame, for free variants).
Strategies are stateless apart from cached per-system encodings and the
combiner's running statistics; one strategy object serves one transition
system.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .circuit import FALSE_LIT, TRUE_LIT
from .formats import (
    ORIGIN_CIRCUIT,
    ORIGIN_CIRCUIT_CONSTRAINT,
    ORIGIN_REVERSED,
    TransitionSystem,
)
from .logic import (
    Cnf,
    Cube,
    aig_to_cnf_lit,
    cone_gate_vars,
    gate_clauses,
    two_rail_encode,
)
from .optsolvers import (
    MaxQbfProblem,
    MaxSatProblem,
    Qbf2Problem,
    max_qbf,
    max_sat,
    min_cover,
    qbf2_solve,
)
from .pogp import GenResult, PogpInstance, complete_model
from .sat import FALSE_FIRST, RemovalActivity, Solver
from .ternary import ONE, TernaryFrame, X


class StrategyError(Exception):
    pass


class InapplicableStrategyError(StrategyError):
    def __init__(self, strategy: str, missing: str, detail: str = ""):
        msg = f"strategy {strategy!r} is not applicable: requires {missing}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.strategy = strategy
        self.missing = missing


class SoundnessError(StrategyError):
    """An internal query that must be unsatisfiable came back satisfiable."""


@dataclass(frozen=True)
class Applicability:
    ok: bool
    missing: str | None = None
    detail: str = ""


LIFT_AUTO = "auto"
LIFT_PLAIN = "plain"
LIFT_EXTENDED = "extended"


def _is_circuit_forward(ts: TransitionSystem) -> bool:
    return ts.circuit is not None and ts.origin in (
        ORIGIN_CIRCUIT,
        ORIGIN_CIRCUIT_CONSTRAINT,
    )


def check_applicable(
    name: str, ts: TransitionSystem, mode: str = "fix", lifting_variant: str = LIFT_AUTO
) -> Applicability:
    """Structural compatibility of a strategy with a transition system."""
    base, _, suffix = name.partition(":")
    if suffix == "free":
        mode = "free"
    if base not in STRATEGIES:
        return Applicability(False, "a known strategy name", f"unknown {name!r}")
    if mode not in ("fix", "free"):
        return Applicability(False, "mode fix or free")
    if mode == "free" and base not in FREE_CAPABLE:
        return Applicability(False, "fix mode", f"{base} has no free variant")

    caps = ts.caps
    if base in ("01x-sim", "s01x", "ms01x", "ms01x-igbg"):
        if not _is_circuit_forward(ts):
            return Applicability(
                False, "a circuit-defined transition function", f"origin is {ts.origin}"
            )
    elif base in ("lifting", "lifting-ld"):
        separate = ts.constraint is not None
        if lifting_variant == LIFT_PLAIN or (lifting_variant == LIFT_AUTO and not separate):
            if caps.right_unique is not True:
                return Applicability(False, "right-uniqueness")
            if caps.left_total is not True:
                return Applicability(False, "left-totality")
        else:
            if caps.right_unique is not True:
                return Applicability(False, "right-uniqueness")
            if not separate:
                if caps.left_total is not True:
                    return Applicability(False, "left-totality")
    elif base == "igbg":
        if caps.right_unique is not True:
            return Applicability(False, "right-uniqueness")
    elif base == "structural":
        if ts.origin != ORIGIN_REVERSED or ts.circuit is None:
            return Applicability(
                False, "a reversed circuit-defined system", f"origin is {ts.origin}"
            )
    return Applicability(True)


# ---------------------------------------------------------------------------
# Shared helpers.


def _constraint_assertion_lits(ts: TransitionSystem) -> list[int]:
    """CNF literals asserting the invariant constraint outputs."""
    if ts.constraint is None:
        return []
    if ts.circuit is not None and ts.circuit.constraint_literals:
        lits = []
        for lit in ts.circuit.constraint_literals:
            if lit == TRUE_LIT:
                continue
            if lit == FALSE_LIT:
                raise StrategyError("constraint is constantly false")
            lits.append(aig_to_cnf_lit(lit))
        return lits
    return [c.literals[0] for c in ts.constraint if len(c) == 1]


def _result(strategy: str, inst: PogpInstance, cube: Cube, start: float, **stats) -> GenResult:
    return GenResult(
        cube=cube,
        removed=len(inst.ts.state_vars) - len(cube),
        strategy=strategy,
        time=time.perf_counter() - start,
        solver_stats=dict(stats),
    )


class Strategy:
    name = "base"

    def __init__(
        self,
        ts: TransitionSystem,
        mode: str = "fix",
        activity: RemovalActivity | None = None,
        allow_unsound: bool = False,
        lifting_variant: str = LIFT_AUTO,
    ):
        app = check_applicable(self.name, ts, mode, lifting_variant)
        if not app.ok and not allow_unsound:
            raise InapplicableStrategyError(self.name, app.missing or "?", app.detail)
        self.ts = ts
        self.mode = mode
        self.activity = activity or RemovalActivity()
        self.allow_unsound = allow_unsound
        self.lifting_variant = lifting_variant

    def generalize(self, inst: PogpInstance) -> GenResult:
        raise NotImplementedError

    def _order(self, variables) -> list[int]:
        return self.activity.order(variables)


# ---------------------------------------------------------------------------
# Ternary simulation.


class Sim01X(Strategy):
    """Greedy X-probing over event-driven three-valued simulation."""

    name = "01x-sim"

    def __init__(self, ts, **kw):
        super().__init__(ts, **kw)
        self._frame = TernaryFrame(ts.circuit)

    def generalize(self, inst: PogpInstance) -> GenResult:
        start = time.perf_counter()
        ts = self.ts
        circuit = ts.circuit
        frame = self._frame
        state = {abs(l): (1 if l > 0 else 0) for l in inst.m}
        inputs = {abs(l): (1 if l > 0 else 0) for l in inst.i}
        frame.reset(state, inputs)
        prev = ts.prev_of()
        observed = []  # next-function literals asserted by the target cube
        for lit in inst.d_next:
            latch_var = prev[abs(lit)]
            next_lit = next(
                l.next_lit for l in circuit.latches if l.var == latch_var
            )
            observed.append(next_lit)
        constraint_lits = list(circuit.constraint_literals) if ts.constraint is not None else []

        def ok() -> bool:
            for lit in observed:
                if frame.lit_value(lit) == X:
                    return False
            for lit in constraint_lits:
                if frame.lit_value(lit) != ONE:
                    return False
            return True

        kept = {abs(l) for l in inst.m}
        probes = 0
        changed = True
        while changed:
            changed = False
            for var in self._order(sorted(kept)):
                old = frame.values[var]
                probes += 1
                frame.set_value(var, X)
                if ok():
                    kept.discard(var)
                    changed = True
                else:
                    frame.set_value(var, old)
        cube = Cube(l for l in inst.m if abs(l) in kept)
        return _result(self.name, inst, cube, start, probes=probes)


# ---------------------------------------------------------------------------
# Lifting (assumption cores of the negated-target query).


class Lifting(Strategy):
    name = "lifting"
    literal_dropping = False

    def generalize(self, inst: PogpInstance) -> GenResult:
        start = time.perf_counter()
        ts = self.ts
        separate = ts.constraint is not None
        variant = self.lifting_variant
        if variant == LIFT_AUTO:
            variant = LIFT_EXTENDED if separate else LIFT_PLAIN
        solver = Solver(ts.num_vars)
        solver.add_cnf(ts.trans)
        target = [-l for l in inst.d_next]
        if variant == LIFT_EXTENDED and separate:
            target = [-l for l in _constraint_assertion_lits(ts)] + target
        elif separate:
            # Plain lifting over the full (non-left-total) relation: the
            # unsound mode the applicability check refuses by default.
            solver.add_cnf(ts.constraint)
        solver.add_clause(target)
        fixed = list(inst.i)
        queries = 1
        res = solver.solve(list(inst.m) + fixed)
        if res.sat:
            raise SoundnessError("lifting query is satisfiable; transition relation "
                                 "is not a (constrained) function here")
        core = set(res.assumption_core or ())
        kept = [l for l in inst.m if l in core]
        if self.literal_dropping:
            changed = True
            while changed:
                changed = False
                for lit in sorted(kept, key=lambda l: self.activity.key(abs(l))):
                    trial = [l for l in kept if l != lit]
                    queries += 1
                    res = solver.solve(trial + fixed)
                    if not res.sat:
                        core = set(res.assumption_core or ())
                        kept = [l for l in trial if l in core]
                        changed = True
                        break
        cube = Cube(kept)
        return _result(self.name, inst, cube, start, queries=queries)


class LiftingLD(Lifting):
    name = "lifting-ld"
    literal_dropping = True


# ---------------------------------------------------------------------------
# Implication-graph traversal.


class Igbg(Strategy):
    """Backward walk over BCP antecedents from the target literals."""

    name = "igbg"

    def __init__(self, ts, **kw):
        super().__init__(ts, **kw)
        self._solver = Solver(ts.num_vars)
        self._solver.add_cnf(ts.trans)
        named = set(ts.state_vars) | set(ts.input_vars)
        self._require = tuple(
            v for v in range(1, ts.trans.num_vars + 1) if v not in named
        )

    def generalize(self, inst: PogpInstance) -> GenResult:
        start = time.perf_counter()
        ts = self.ts
        view = self._solver.propagate_with(
            list(inst.m) + list(inst.i), require_assigned=self._require
        )
        roots = [abs(l) for l in inst.d_next]
        if ts.constraint is not None:
            roots += [abs(l) for l in _constraint_assertion_lits(ts)]
        state_set = set(ts.state_vars)
        seen: set[int] = set()
        kept_vars: set[int] = set()
        stack = list(roots)
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            reason = view.reason.get(v, None)
            if reason is None:
                if v in state_set:
                    kept_vars.add(v)
                continue
            for lit in reason:
                if abs(lit) != v:
                    stack.append(abs(lit))
        cube = Cube(l for l in inst.m if abs(l) in kept_vars)
        return _result(self.name, inst, cube, start, visited=len(seen))


# ---------------------------------------------------------------------------
# Two-rail encodings of the circuit (sign-minimal SAT and MaxSAT).


class _TwoRailBase(Strategy):
    def __init__(self, ts, **kw):
        super().__init__(ts, **kw)
        self._map = two_rail_encode(ts.circuit)

    def _pin_value(self, aig_lit: int, value: int) -> list[int]:
        r0, r1 = self._map.lit_rails(aig_lit)
        return [r1, -r0] if value else [r0, -r1]

    def _pins(self, inst: PogpInstance, pin_state: bool) -> list[int]:
        ts = self.ts
        circuit = ts.circuit
        pins: list[int] = []
        for lit in inst.i:
            pins += self._pin_value(2 * abs(lit), 1 if lit > 0 else 0)
        if pin_state:
            for lit in inst.m:
                v = abs(lit)
                r0, r1 = self._map.rails[v]
                pins.append(-(r0 if lit > 0 else r1))  # forbid the flipped value
        prev = ts.prev_of()
        next_lit_of = {l.var: l.next_lit for l in circuit.latches}
        for lit in inst.d_next:
            nl = next_lit_of[prev[abs(lit)]]
            if nl <= 1:
                continue  # constant next functions need (and admit) no pin
            pins += self._pin_value(nl, 1 if lit > 0 else 0)
        if ts.constraint is not None:
            for cl in circuit.constraint_literals:
                if cl <= 1:
                    continue
                pins += self._pin_value(cl, 1)
        return pins

    def _free_clauses(self, inst: PogpInstance) -> list[list[int]]:
        """Input non-X clauses plus the frame over state rails."""
        clauses: list[list[int]] = []
        for v in self.ts.input_vars:
            r0, r1 = self._map.rails[v]
            clauses.append([r0, r1])
        for clause in inst.frame:
            railed = []
            for lit in clause:
                r0, r1 = self._map.rails[abs(lit)]
                railed.append(r1 if lit > 0 else r0)
            clauses.append(railed)
        return clauses

    def _cube_from_rails(self, model: list[int]) -> Cube:
        lits = []
        for v in self.ts.state_vars:
            r0, r1 = self._map.rails[v]
            if model[r1]:
                lits.append(v)
            elif model[r0]:
                lits.append(-v)
        return Cube(lits)


class S01X(_TwoRailBase):
    """Sign-minimal SAT over the two-rail encoding (decisions prefer X)."""

    name = "s01x"

    def generalize(self, inst: PogpInstance) -> GenResult:
        start = time.perf_counter()
        solver = Solver(self._map.num_vars)
        solver.add_cnf(self._map.cnf)
        solver.set_default_polarity(FALSE_FIRST)
        if self.mode == "free":
            for cl in self._free_clauses(inst):
                solver.add_clause(cl)
        res = solver.solve(self._pins(inst, pin_state=self.mode == "fix"))
        if not res.sat:
            raise SoundnessError("two-rail instance is unsatisfiable")
        cube = self._cube_from_rails(res.model)
        return _result(self.name, inst, cube, start, conflicts=solver.stats["conflicts"])


class Ms01X(_TwoRailBase):
    """Exact maximization of X-valued state bits over the two-rail encoding."""

    name = "ms01x"

    def generalize(
        self, inst: PogpInstance, warm_start: set[int] | None = None
    ) -> GenResult:
        start = time.perf_counter()
        clauses = [list(c.literals) for c in self._map.cnf]
        top = self._map.num_vars
        soft = []
        for v in self.ts.state_vars:
            r0, r1 = self._map.rails[v]
            if warm_start and v in warm_start:
                clauses += [[-r0], [-r1]]
                continue
            top += 1
            t = top
            clauses += [[-t, -r0], [-t, -r1], [t, r0, r1]]
            soft.append(t)
        for lit in self._pins(inst, pin_state=self.mode == "fix"):
            clauses.append([lit])
        if self.mode == "free":
            clauses += self._free_clauses(inst)
        model, _count = max_sat(MaxSatProblem(Cnf(clauses, top), soft))
        cube = self._cube_from_rails(model)
        return _result(self.name, inst, cube, start, soft=len(soft))


# ---------------------------------------------------------------------------
# Covering approaches.


def _cover_rows(
    ts: TransitionSystem, model: list[int]
) -> tuple[list[tuple[int, ...]], list[int]]:
    """Transition clauses not hit by the non-state part of the model."""
    state_set = set(ts.state_vars)
    support = [
        (v if model[v] else -v)
        for v in range(1, ts.trans.num_vars + 1)
        if v not in state_set
    ]
    support_set = set(support)
    remaining = []
    for clause in ts.semantic_trans():
        if any(l in support_set for l in clause):
            continue
        remaining.append(clause.literals)
    return remaining, support


class GreedyCover(Strategy):
    """Pick most-frequent witness literals until every clause is hit."""

    name = "greedy-cover"

    def generalize(self, inst: PogpInstance) -> GenResult:
        start = time.perf_counter()
        model = complete_model(self.ts, inst)
        remaining, support = _cover_rows(self.ts, model)
        kept: list[int] = []
        candidates = set(inst.m)
        while remaining:
            counts: dict[int, int] = {}
            for clause in remaining:
                for l in clause:
                    if l in candidates:
                        counts[l] = counts.get(l, 0) + 1
            if not counts:
                raise SoundnessError("cover ran out of candidate literals")
            best = min(
                counts,
                key=lambda l: (-counts[l], self.activity.key(abs(l)), abs(l), l < 0),
            )
            kept.append(best)
            candidates.discard(best)
            remaining = [c for c in remaining if best not in c]
        cube = Cube(kept)
        return _result(
            self.name, inst, cube, start, support=tuple(sorted(support, key=abs))
        )


class Gentr(Strategy):
    """Core of the negated-transition query keeps the responsible literals."""

    name = "gentr"

    def __init__(self, ts, **kw):
        super().__init__(ts, **kw)
        solver = Solver(ts.num_vars)
        selectors = []
        for clause in ts.semantic_trans():
            z = solver.new_var()
            for lit in clause:
                solver.add_clause([-z, -lit])
            selectors.append(z)
        solver.add_clause(selectors)
        self._solver = solver

    def generalize(self, inst: PogpInstance) -> GenResult:
        start = time.perf_counter()
        model = complete_model(self.ts, inst)
        state_set = set(self.ts.state_vars)
        assum = [
            (v if model[v] else -v) for v in range(1, self.ts.trans.num_vars + 1)
        ]
        res = self._solver.solve(assum)
        if res.sat:
            raise SoundnessError("negated-transition query is satisfiable")
        core = set(res.assumption_core or ())
        kept = [l for l in inst.m if l in core]
        support = tuple(l for l in assum if abs(l) not in state_set)
        cube = Cube(kept)
        return _result(self.name, inst, cube, start, support=support)


class IlpCover(Strategy):
    """Exact covering: minimum witness literals hitting every clause."""

    name = "ilp-cover"

    def generalize(self, inst: PogpInstance) -> GenResult:
        start = time.perf_counter()
        if self.mode == "free":
            return self._free(inst, start)
        model = complete_model(self.ts, inst)
        remaining, support = _cover_rows(self.ts, model)
        chosen = min_cover([frozenset(r) for r in remaining], set(inst.m))
        cube = Cube(chosen)
        return _result(
            self.name, inst, cube, start, support=tuple(sorted(support, key=abs))
        )

    def _free(self, inst: PogpInstance, start: float) -> GenResult:
        """Binate covering via exact MaxSAT over per-literal selector vars."""
        ts = self.ts
        formula = ts.semantic_trans().conjoin(inst.frame)
        clauses = [list(c.literals) for c in formula]
        clauses += [[l] for l in inst.d_next]
        if inst.d is not None:
            clauses.append([-l for l in inst.d])
        nv = 0
        pos: dict[int, int] = {}
        neg: dict[int, int] = {}
        for v in range(1, max(formula.num_vars, ts.num_vars) + 1):
            pos[v] = nv + 1
            neg[v] = nv + 2
            nv += 2
        hard: list[list[int]] = []
        for clause in clauses:
            hard.append([pos[abs(l)] if l > 0 else neg[abs(l)] for l in clause])
        for v in pos:
            hard.append([-pos[v], -neg[v]])
        soft = []
        for v in ts.state_vars:
            nv += 1
            t = nv
            hard += [[-t, -pos[v]], [-t, -neg[v]]]
            soft.append(t)
        model, _ = max_sat(MaxSatProblem(Cnf(hard, nv), soft))
        lits = []
        for v in ts.state_vars:
            if model[pos[v]]:
                lits.append(v)
            elif model[neg[v]]:
                lits.append(-v)
        cube = Cube(lits)
        return _result(self.name, inst, cube, start)


class SatCover(Strategy):
    """Clause-level two-rail substitution solved with X-preferring decisions."""

    name = "sat-cover"

    def __init__(self, ts, **kw):
        super().__init__(ts, **kw)
        nv = ts.num_vars
        self._rails: dict[int, tuple[int, int]] = {}
        for v in ts.state_vars:
            self._rails[v] = (nv + 1, nv + 2)
            nv += 2
        self._railed_vars = nv
        clauses = []
        for clause in ts.semantic_trans():
            clauses.append([self._rail_lit(l) for l in clause])
        for r0, r1 in self._rails.values():
            clauses.append([-r0, -r1])
        self._base = clauses

    def _rail_lit(self, lit: int) -> int:
        v = abs(lit)
        if v not in self._rails:
            return lit
        r0, r1 = self._rails[v]
        return r1 if lit > 0 else r0

    def generalize(self, inst: PogpInstance) -> GenResult:
        start = time.perf_counter()
        solver = Solver(self._railed_vars)
        for cl in self._base:
            solver.add_clause(cl)
        solver.set_default_polarity(FALSE_FIRST)
        assum = list(inst.d_next)
        if self.mode == "fix":
            for lit in inst.m:
                r0, r1 = self._rails[abs(lit)]
                assum.append(-(r0 if lit > 0 else r1))
        else:
            for clause in inst.frame:
                solver.add_clause([self._rail_lit(l) for l in clause])
        res = solver.solve(assum)
        if not res.sat:
            raise SoundnessError("railed cover instance is unsatisfiable")
        lits = []
        for v in self.ts.state_vars:
            r0, r1 = self._rails[v]
            if res.model[r1]:
                lits.append(v)
            elif res.model[r0]:
                lits.append(-v)
        cube = Cube(lits)
        return _result(self.name, inst, cube, start, conflicts=solver.stats["conflicts"])


# ---------------------------------------------------------------------------
# QBF approaches.


class GreedyQbf(Strategy):
    """Probe state variables one at a time by universal quantification."""

    name = "greedy-qbf"

    def generalize(self, inst: PogpInstance) -> GenResult:
        start = time.perf_counter()
        ts = self.ts
        base = ts.semantic_trans().conjoin(Cnf([[l] for l in inst.d_next], ts.num_vars))
        if self.mode == "free":
            base = base.conjoin(inst.frame)
            if inst.d is not None:
                base = base.conjoin(Cnf([[-l for l in inst.d]], ts.num_vars))
        removed: list[int] = []
        kept = {abs(l): l for l in inst.m}
        witness = dict(kept)
        qbf_calls = 0
        for var in self._order([abs(l) for l in inst.m]):
            trial = removed + [var]
            trial_set = set(trial)
            if self.mode == "fix":
                units = [[lit] for v, lit in kept.items() if v not in trial_set]
                matrix = base.conjoin(Cnf(units, ts.num_vars))
                outer: tuple[int, ...] = ()
            else:
                matrix = base
                outer = tuple(v for v in ts.state_vars if v not in trial_set)
            inner = tuple(
                v
                for v in range(1, matrix.num_vars + 1)
                if v not in trial_set and v not in set(outer)
            )
            qbf_calls += 1
            res = qbf2_solve(
                Qbf2Problem(
                    exists_outer=outer,
                    forall=tuple(trial),
                    exists_inner=inner,
                    matrix=matrix,
                )
            )
            if res.valid:
                removed.append(var)
                if self.mode == "free" and res.witness:
                    witness = {
                        v: (v if res.witness[v] else -v)
                        for v in res.witness
                    }
        if self.mode == "fix":
            cube = Cube(l for v, l in kept.items() if v not in set(removed))
        else:
            cube = Cube(
                witness.get(v, kept[v])
                for v in ts.state_vars
                if v not in set(removed)
            )
        return _result(self.name, inst, cube, start, qbf_calls=qbf_calls)


class MaxQbf(Strategy):
    """Exact minimum cube via selector-driven universal quantification."""

    name = "max-qbf"

    def generalize(self, inst: PogpInstance) -> GenResult:
        start = time.perf_counter()
        ts = self.ts
        matrix = ts.semantic_trans().conjoin(
            Cnf([[l] for l in inst.d_next], ts.num_vars)
        )
        if self.mode == "free":
            matrix = matrix.conjoin(inst.frame)
            if inst.d is not None:
                matrix = matrix.conjoin(Cnf([[-l for l in inst.d]], ts.num_vars))
        nv = max(matrix.num_vars, ts.num_vars)
        u_of: dict[int, int] = {}
        forall_of: dict[int, int] = {}
        exists_of: dict[int, int] = {}
        clauses: list[list[int]] = []
        mvals = {abs(l): l > 0 for l in inst.m}
        for v in ts.state_vars:
            u = nv + 1
            sa = nv + 2
            nv += 2
            u_of[v] = u
            forall_of[v] = sa
            clauses += [[-u, -v, sa], [-u, v, -sa]]
            if self.mode == "fix":
                clauses.append([u, v] if mvals[v] else [u, -v])
            else:
                se = nv + 1
                nv += 1
                exists_of[v] = se
                clauses += [[u, -v, se], [u, v, -se]]
        full = matrix.conjoin(Cnf(clauses, nv))
        outer = tuple(u_of.values()) + tuple(exists_of.values())
        forall = tuple(forall_of.values())
        inner = tuple(
            v for v in range(1, full.num_vars + 1)
            if v not in set(outer) and v not in set(forall)
        )
        problem = MaxQbfProblem(
            qbf2=Qbf2Problem(
                exists_outer=outer, forall=forall, exists_inner=inner, matrix=full
            ),
            soft=[u_of[v] for v in ts.state_vars],
        )
        witness, _count = max_qbf(problem)
        lits = []
        for v in ts.state_vars:
            if witness.get(u_of[v], False):
                continue
            if self.mode == "fix":
                lits.append(v if mvals[v] else -v)
            else:
                lits.append(v if witness.get(exists_of[v], False) else -v)
        cube = Cube(lits)
        return _result(self.name, inst, cube, start)


# ---------------------------------------------------------------------------
# Structural generalization for reversed circuits.


class Structural(Strategy):
    """Drop outputs of non-constant functions with disjoint support cones.

    Only meaningful on the reversal of a circuit: the obligation constrains
    original circuit outputs, so an output whose cone is disjoint from every
    other latch function (and from the target-pinned source bits) can take
    either value independently.
    """

    name = "structural"

    def __init__(self, ts, **kw):
        super().__init__(ts, **kw)
        circuit = ts.circuit
        self._support: dict[int, frozenset[int]] = {}
        self._nonconstant: dict[int, bool] = {}
        for latch in circuit.latches:
            self._support[latch.var] = circuit.support_vars(latch.next_lit)
            self._nonconstant[latch.var] = self._check_nonconstant(circuit, latch.next_lit)

    @staticmethod
    def _check_nonconstant(circuit, lit: int) -> bool:
        if lit <= 1:
            return False
        gates = circuit.gate_map()
        solver = Solver(circuit.max_var)
        for v in cone_gate_vars(circuit, [lit]):
            for cl in gate_clauses(gates[v]):
                solver.add_clause(cl)
        root = aig_to_cnf_lit(lit)
        return solver.solve([root]).sat and solver.solve([-root]).sat

    def generalize(self, inst: PogpInstance) -> GenResult:
        start = time.perf_counter()
        ts = self.ts
        # Reversed orientation: d' pins original present-state bits.
        pinned = {ts.prev_of()[abs(l)] for l in inst.d_next}
        latch_vars = [abs(l) for l in inst.m]
        removable: set[int] = set()
        for v in self._order(latch_vars):
            sup = self._support[v]
            if not self._nonconstant[v]:
                continue
            if sup & pinned:
                continue
            if any(sup & self._support[w] for w in latch_vars if w != v):
                continue
            removable.add(v)
        cube = Cube(l for l in inst.m if abs(l) not in removable)
        return _result(self.name, inst, cube, start)


# ---------------------------------------------------------------------------
# Combiner.


@dataclass
class CombinerConfig:
    window: int = 50
    fast_factor: float = 2.0  # "not much slower" threshold
    slow_factor: float = 10.0  # "much slower" threshold
    win_fraction: float = 0.2  # fraction of strict improvements that counts


@dataclass
class CombinerState:
    config: CombinerConfig = field(default_factory=CombinerConfig)
    regime: str = "combined"
    igbg_times: list[float] = field(default_factory=list)
    ms_times: list[float] = field(default_factory=list)
    igbg_removed: list[int] = field(default_factory=list)
    ms_removed: list[int] = field(default_factory=list)

    def record(
        self, igbg_time: float, ms_time: float, igbg_removed: int, ms_removed: int
    ) -> None:
        if self.regime != "combined":
            return
        self.igbg_times.append(igbg_time)
        self.ms_times.append(ms_time)
        self.igbg_removed.append(igbg_removed)
        self.ms_removed.append(ms_removed)
        if len(self.igbg_times) >= self.config.window:
            self._evaluate()

    def _evaluate(self) -> None:
        cfg = self.config
        mean_igbg = sum(self.igbg_times) / len(self.igbg_times)
        mean_ms = sum(self.ms_times) / len(self.ms_times)
        wins = sum(
            1 for a, b in zip(self.ms_removed, self.igbg_removed) if a > b
        )
        frac = wins / len(self.ms_removed)
        if mean_ms <= cfg.fast_factor * max(mean_igbg, 1e-12) and frac >= cfg.win_fraction:
            self.regime = "ms01x"
        elif mean_ms > cfg.slow_factor * max(mean_igbg, 1e-12) and frac < cfg.win_fraction:
            self.regime = "igbg"
        else:
            self.igbg_times.clear()
            self.ms_times.clear()
            self.igbg_removed.clear()
            self.ms_removed.clear()


class Ms01XIgbg(Strategy):
    """Dynamic pairing: IGBG seeds a warm-started exact maximization, and
    running statistics pick a single survivor when one dominates."""

    name = "ms01x-igbg"

    def __init__(self, ts, state: CombinerState | None = None, **kw):
        super().__init__(ts, **kw)
        self.state = state or CombinerState()
        self._igbg = Igbg(ts, activity=self.activity)
        self._ms = Ms01X(ts, mode="fix", activity=self.activity)

    def generalize(self, inst: PogpInstance) -> GenResult:
        start = time.perf_counter()
        if self.state.regime == "ms01x":
            sub = self._ms.generalize(inst)
            return _result(self.name, inst, sub.cube, start, regime="ms01x")
        if self.state.regime == "igbg":
            sub = self._igbg.generalize(inst)
            return _result(self.name, inst, sub.cube, start, regime="igbg")
        ig = self._igbg.generalize(inst)
        warm = {v for v in self.ts.state_vars if ig.cube.value(v) is None}
        ms = self._ms.generalize(inst, warm_start=warm)
        self.state.record(ig.time, ms.time, ig.removed, ms.removed)
        best = ms if ms.removed >= ig.removed else ig
        return _result(self.name, inst, best.cube, start, regime="combined")


# ---------------------------------------------------------------------------
# Registry.


STRATEGIES: dict[str, type[Strategy]] = {
    "01x-sim": Sim01X,
    "lifting": Lifting,
    "lifting-ld": LiftingLD,
    "igbg": Igbg,
    "s01x": S01X,
    "ms01x": Ms01X,
    "ms01x-igbg": Ms01XIgbg,
    "greedy-cover": GreedyCover,
    "gentr": Gentr,
    "ilp-cover": IlpCover,
    "sat-cover": SatCover,
    "greedy-qbf": GreedyQbf,
    "max-qbf": MaxQbf,
    "structural": Structural,
}

FREE_CAPABLE = frozenset({"s01x", "ms01x", "sat-cover", "ilp-cover", "greedy-qbf", "max-qbf"})


def strategy_names() -> list[str]:
    return list(STRATEGIES)


def parse_strategy_name(name: str) -> tuple[str, str]:
    """Split 'name[:free]' into (name, mode)."""
    base, _, suffix = name.partition(":")
    if suffix == "free":
        return base, "free"
    if suffix:
        raise StrategyError(f"unknown strategy suffix {suffix!r}")
    return base, "fix"


def get_strategy(
    name: str,
    ts: TransitionSystem,
    mode: str | None = None,
    activity: RemovalActivity | None = None,
    allow_unsound: bool = False,
    lifting_variant: str = LIFT_AUTO,
) -> Strategy:
    base, parsed_mode = parse_strategy_name(name)
    if mode is None:
        mode = parsed_mode
    if base not in STRATEGIES:
        raise StrategyError(f"unknown strategy {name!r}")
    cls = STRATEGIES[base]
    return cls(
        ts,
        mode=mode,
        activity=activity,
        allow_unsound=allow_unsound,
        lifting_variant=lifting_variant,
    )
