"""The PDR engine: frames, the obligation queue, recursive blocking with a
pluggable generalization strategy, clause pushing, and self-validating
verdicts.

Frames are delta-encoded (a clause is stored at the highest level where it
holds) and realized inside two incremental solvers through per-level
activation literals.  Counterexamples are reconstructed by forward SAT
chaining through the obligation cubes and replay-checked; invariants are
re-verified with three independent SAT checks before a Safe verdict is
returned.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .formats import TransitionSystem, reverse as reverse_ts
from .logic import Cnf, Cube
from .pogp import GenResult, PogpInstance
from .sat import RemovalActivity, Solver
from .strategies import (
    LIFT_AUTO,
    InapplicableStrategyError,
    Strategy,
    check_applicable,
    get_strategy,
)


class EngineError(Exception):
    pass


class SoundnessAlarm(EngineError):
    """A generalized obligation claimed a counterexample that does not replay.

    Raised when trace reconstruction fails, which can only happen when the
    configured generalization strategy produced an unsound cube.
    """


@dataclass
class EngineConfig:
    strategy: str = "lifting-ld"
    mode: str = "fix"
    reverse: bool = False
    po_push: bool = True
    max_frames: int | None = None
    max_obligations: int | None = None
    lifting_variant: str = LIFT_AUTO
    allow_unsound: bool = False
    debug_checks: bool = False
    extract_hook: Callable[[PogpInstance], None] | None = None
    cancel_check: Callable[[], bool] | None = None


@dataclass
class EngineStats:
    frames_opened: int = 0
    clauses_learned: int = 0
    clause_literals: int = 0
    pos_generated: int = 0
    removed_bits: int = 0
    removal_opportunities: int = 0
    gen_time: float = 0.0
    wall_time: float = 0.0
    sat_calls: int = 0

    @property
    def mean_clause_size(self) -> float:
        return self.clause_literals / self.clauses_learned if self.clauses_learned else 0.0

    @property
    def gen_time_share(self) -> float:
        return min(1.0, self.gen_time / self.wall_time) if self.wall_time > 0 else 0.0

    @property
    def mean_reduction_ratio(self) -> float:
        if not self.removal_opportunities:
            return 0.0
        return self.removed_bits / self.removal_opportunities


@dataclass
class Safe:
    invariant: Cnf
    stats: EngineStats

    verdict = "safe"
    exit_code = 0


@dataclass
class Unsafe:
    trace: list[tuple[Cube, Cube | None]]  # (state minterm, inputs); last inputs None
    stats: EngineStats

    verdict = "unsafe"
    exit_code = 1


@dataclass
class Unknown:
    reason: str
    frames_reached: int
    stats: EngineStats

    verdict = "unknown"
    exit_code = 2


Verdict = Safe | Unsafe | Unknown


@dataclass(order=True)
class _Obligation:
    level: int
    depth: int
    seq: int
    cube: Cube = field(compare=False)
    minterm: Cube = field(compare=False)
    inputs: Cube = field(compare=False)
    successor: "_Obligation | None" = field(compare=False, default=None)


def negate_cnf(cnf: Cnf, next_var: int) -> tuple[list[list[int]], int]:
    """Clauses equisatisfiable with the negation, via one selector per clause."""
    selectors = []
    out: list[list[int]] = []
    for clause in cnf:
        z = next_var = next_var + 1
        selectors.append(z)
        for lit in clause:
            out.append([-z, -lit])
    out.append(selectors if selectors else [])
    return out, next_var


class Engine:
    def __init__(self, ts: TransitionSystem, config: EngineConfig | None = None):
        self.config = config or EngineConfig()
        self.source_ts = ts
        if self.config.reverse:
            ts = reverse_ts(ts)
        self.ts = ts
        app = check_applicable(
            self.config.strategy, ts, self.config.mode, self.config.lifting_variant
        )
        if not app.ok and not self.config.allow_unsound:
            raise InapplicableStrategyError(
                self.config.strategy, app.missing or "?", app.detail
            )
        self.activity = RemovalActivity()
        self.strategy: Strategy = get_strategy(
            self.config.strategy,
            ts,
            mode=self.config.mode,
            activity=self.activity,
            allow_unsound=self.config.allow_unsound,
            lifting_variant=self.config.lifting_variant,
        )
        self.stats = EngineStats()
        self._next = ts.next_of()
        self._alloc = ts.num_vars

        # Primed copy of the bad predicate (fresh aux block).
        bad_aux = sorted(
            {abs(l) for c in ts.bad for l in c} - set(ts.state_vars)
        )
        mapping = dict(self._next)
        for v in bad_aux:
            self._alloc += 1
            mapping[v] = self._alloc
        self._bad_next = ts.bad.rename(mapping)

        self._cons = Solver(self._alloc)
        self._cons.add_cnf(ts.trans)
        self._root = Solver(self._alloc)
        self._root.add_cnf(ts.trans)
        if ts.constraint is not None:
            self._cons.add_cnf(ts.constraint)
            self._root.add_cnf(ts.constraint)
        self._root.add_cnf(self._bad_next)

        self._init_solver = Solver(ts.num_vars)
        self._init_solver.add_cnf(ts.init)
        self._init_cube = self._init_as_cube()

        self._acts: list[int] = []
        self._frames: list[list[Cube]] = []  # blocked cubes per level (delta)
        self._seq = 0
        self._push_frame()  # level 0 holds the initial predicate
        for clause in ts.init:
            for solver in (self._cons, self._root):
                solver.add_clause([-self._acts[0]] + list(clause.literals))
        self._push_frame()  # level 1

    # -- bookkeeping --------------------------------------------------------

    def _init_as_cube(self) -> Cube | None:
        lits = []
        for clause in self.ts.init:
            if len(clause) != 1:
                return None
            lits.append(clause.literals[0])
        try:
            return Cube(lits)
        except ValueError:
            return None

    def _push_frame(self) -> None:
        self._alloc += 1
        self._acts.append(self._alloc)
        self._frames.append([])
        self.stats.frames_opened = max(self.stats.frames_opened, len(self._frames) - 1)

    @property
    def _top(self) -> int:
        return len(self._frames) - 1

    def _frame_assumptions(self, level: int) -> list[int]:
        return self._acts[level : self._top + 1]

    def _prime(self, lits: Iterable[int]) -> list[int]:
        return [
            (self._next[abs(l)] if l > 0 else -self._next[abs(l)]) for l in lits
        ]

    def frame_cnf(self, level: int) -> Cnf:
        clauses: list[list[int]] = []
        if level == 0:
            clauses += [list(c.literals) for c in self.ts.init]
        for j in range(max(level, 1), self._top + 1):
            clauses += [list(c.negate().literals) for c in self._frames[j]]
        return Cnf(clauses, self.ts.num_vars)

    def _intersects_init(self, cube: Cube) -> bool:
        if self._init_cube is not None:
            return all(-l not in self._init_cube for l in cube)
        self.stats.sat_calls += 1
        return self._init_solver.solve(list(cube)).sat

    def _add_blocked(self, cube: Cube, level: int) -> None:
        # Delta encoding: the cube lives at the highest level where it holds.
        for lower in range(1, level):
            self._frames[lower] = [c for c in self._frames[lower] if c != cube]
        self._frames[level].append(cube)
        clause = [-l for l in cube]
        for solver in (self._cons, self._root):
            solver.add_clause([-self._acts[level]] + clause)
        self.stats.clauses_learned += 1
        self.stats.clause_literals += len(clause)
        if self.config.debug_checks:
            self._check_frame_invariants()

    def _check_frame_invariants(self) -> None:
        seen: set[tuple[int, ...]] = set()
        for level in range(1, self._top + 1):
            for cube in self._frames[level]:
                key = cube.literals
                if key in seen:
                    raise EngineError("blocked cube stored at two levels")
                seen.add(key)
                if self._intersects_init(cube):
                    raise EngineError("blocked cube intersects the initial states")

    # -- queries --------------------------------------------------------------

    def _query_blocked(self, cube: Cube, level: int):
        """SAT?[not cube and R_{level-1} and T and cube'] with model on sat."""
        self.stats.sat_calls += 1
        self._alloc += 1
        actq = self._alloc
        self._cons.add_clause([-actq] + [-l for l in cube])
        assum = [actq] + self._frame_assumptions(level - 1) + self._prime(cube)
        res = self._cons.solve(assum)
        self._cons.add_clause([-actq])
        return res

    def _relative_inductive(self, lits: list[int], frame_level: int) -> bool:
        self.stats.sat_calls += 1
        self._alloc += 1
        actq = self._alloc
        self._cons.add_clause([-actq] + [-l for l in lits])
        assum = [actq] + self._frame_assumptions(frame_level) + self._prime(lits)
        res = self._cons.solve(assum)
        self._cons.add_clause([-actq])
        return not res.sat

    def _query_bad_predecessor(self, level: int):
        self.stats.sat_calls += 1
        return self._root.solve(self._frame_assumptions(level))

    # -- generalization of blocked cubes (clause side) --------------------------

    def _generalize_clause(self, cube: Cube, level: int) -> Cube:
        lits = list(cube.literals)
        changed = True
        while changed:
            changed = False
            for lit in self.activity.order([abs(l) for l in lits]):
                if len(lits) == 1:
                    break
                trial = [l for l in lits if abs(l) != lit]
                if self._intersects_init(Cube(trial)):
                    continue
                if self._relative_inductive(trial, level - 1):
                    lits = trial
                    changed = True
                    break
        return Cube(lits)

    # -- proof obligations ------------------------------------------------------

    def _make_instance(
        self, frame_level: int, d: Cube | None, d_next: Cube, model
    ) -> PogpInstance:
        ts = self.ts
        return PogpInstance(
            ts=ts,
            frame=self.frame_cnf(frame_level),
            d=d,
            d_next=d_next,
            m=Cube(model.model_cube(ts.state_vars)),
            i=Cube(model.model_cube(ts.input_vars)),
            t_next=Cube(model.model_cube(ts.next_vars)),
        )

    def _generalize_po(self, inst: PogpInstance) -> Cube:
        if self.config.extract_hook is not None:
            self.config.extract_hook(inst)
        started = time.perf_counter()
        result: GenResult = self.strategy.generalize(inst)
        self.stats.gen_time += time.perf_counter() - started
        self.stats.pos_generated += 1
        self.stats.removed_bits += result.removed
        self.stats.removal_opportunities += len(self.ts.state_vars)
        removed_vars = [
            v for v in self.ts.state_vars if result.cube.value(v) is None
        ]
        self.activity.record_removed(removed_vars)
        return result.cube

    def _reconstruct_trace(
        self, state: Cube, chain: "_Obligation | None"
    ) -> list[tuple[Cube, Cube | None]]:
        """Forward SAT chaining from an initial state through obligation cubes.

        Raises SoundnessAlarm when some step does not exist, which means an
        unsound generalization produced the obligation chain.
        """
        ts = self.ts
        solver = Solver(self._alloc)
        solver.add_cnf(ts.trans)
        if ts.constraint is not None:
            solver.add_cnf(ts.constraint)
        trace: list[tuple[Cube, Cube | None]] = []
        current = state
        node = chain
        while node is not None:
            self.stats.sat_calls += 1
            res = solver.solve(list(current) + self._prime(node.cube))
            if not res.sat:
                raise SoundnessAlarm(
                    f"strategy {self.config.strategy!r} produced an unsound "
                    f"obligation: state {list(current.literals)} has no "
                    f"transition into the claimed successor cube"
                )
            trace.append((current, Cube(res.model_cube(ts.input_vars))))
            nxt = res.model_cube(ts.next_vars)
            current = Cube(
                v if (nv > 0) else -v
                for v, nv in zip(ts.state_vars, nxt)
            )
            node = node.successor
        # Final step into a bad state.
        bad_step = Solver(self._alloc)
        bad_step.add_cnf(ts.trans)
        if ts.constraint is not None:
            bad_step.add_cnf(ts.constraint)
        bad_step.add_cnf(self._bad_next)
        self.stats.sat_calls += 1
        res = bad_step.solve(list(current))
        if not res.sat:
            raise SoundnessAlarm(
                f"strategy {self.config.strategy!r} produced an unsound "
                "obligation: the chain head does not reach the bad states"
            )
        trace.append((current, Cube(res.model_cube(ts.input_vars))))
        nxt = res.model_cube(ts.next_vars)
        final = Cube(
            v if nv > 0 else -v for v, nv in zip(ts.state_vars, nxt)
        )
        trace.append((final, None))
        return trace

    def _counterexample(self, state: Cube, chain: "_Obligation | None") -> Unsafe:
        trace = self._reconstruct_trace(state, chain)
        self._validate_trace(trace)
        if self.config.reverse:
            trace = self._unreverse_trace(trace)
        return Unsafe(trace=trace, stats=self.stats)

    def _unreverse_trace(self, trace):
        states = [s for s, _ in trace][::-1]
        inputs = [i for _, i in trace if i is not None][::-1]
        out = []
        for idx, s in enumerate(states):
            out.append((s, inputs[idx] if idx < len(inputs) else None))
        return out

    def _validate_trace(self, trace) -> None:
        ts = self.ts
        init_check = Solver(ts.num_vars)
        init_check.add_cnf(ts.init)
        if not init_check.solve(list(trace[0][0])).sat:
            raise SoundnessAlarm("trace does not start in the initial states")
        bad_check = Solver(ts.num_vars)
        bad_check.add_cnf(ts.bad)
        if not bad_check.solve(list(trace[-1][0])).sat:
            raise SoundnessAlarm("trace does not end in a bad state")
        step = Solver(ts.num_vars)
        step.add_cnf(ts.trans)
        if ts.constraint is not None:
            step.add_cnf(ts.constraint)
        for (s, i), (s2, _) in zip(trace, trace[1:]):
            assum = list(s) + list(i or ()) + self._prime(s2)
            if not step.solve(assum).sat:
                raise SoundnessAlarm("trace step does not satisfy the transition relation")

    # -- main loop ----------------------------------------------------------------

    def check(self) -> Verdict:
        start = time.perf_counter()
        try:
            verdict = self._run()
        finally:
            self.stats.wall_time = time.perf_counter() - start
        return verdict

    def _cancelled(self) -> bool:
        cc = self.config.cancel_check
        return bool(cc and cc())

    def _run(self) -> Verdict:
        ts = self.ts
        # 0-step counterexample: an initial bad state.
        probe = Solver(ts.num_vars)
        probe.add_cnf(ts.init)
        probe.add_cnf(ts.bad)
        self.stats.sat_calls += 1
        res = probe.solve()
        if res.sat:
            state = Cube(res.model_cube(ts.state_vars))
            trace = [(state, None)]
            if self.config.reverse:
                trace = self._unreverse_trace(trace)
            return Unsafe(trace=trace, stats=self.stats)

        while True:
            if self._cancelled():
                return Unknown("cancelled", self._top, self.stats)
            # Strengthen the frontier: block every bad predecessor in R_N.
            while True:
                res = self._query_bad_predecessor(self._top)
                if not res.sat:
                    break
                d_next = Cube(res.model_cube(ts.next_vars))
                inst = self._make_instance(self._top, None, d_next, res)
                cube = self._generalize_po(inst)
                verdict = self._handle_obligation_cube(cube, self._top, None, inst)
                if verdict is not None:
                    return verdict
            if self.config.max_frames is not None and self._top >= self.config.max_frames:
                return Unknown("frame limit reached", self._top, self.stats)
            self._push_frame()
            fixpoint = self.propagate()
            if fixpoint is not None:
                return Safe(invariant=fixpoint, stats=self.stats)

    def _init_state_in(self, cube: Cube) -> Cube:
        """A full initial-state minterm inside the given cube."""
        self.stats.sat_calls += 1
        model = self._init_solver.solve(list(cube))
        if not model.sat:
            raise EngineError("inconsistent initial intersection")
        return Cube(model.model_cube(self.ts.state_vars))

    def _handle_obligation_cube(
        self,
        cube: Cube,
        level: int,
        successor: "_Obligation | None",
        inst: PogpInstance,
    ) -> Verdict | None:
        """Enqueue a generalized obligation, detecting initial intersection."""
        if self._intersects_init(cube):
            return self._counterexample(self._init_state_in(cube), successor)
        ob = _Obligation(
            level=level,
            depth=0 if successor is None else successor.depth + 1,
            seq=self._bump_seq(),
            cube=cube,
            minterm=inst.m,
            inputs=inst.i,
            successor=successor,
        )
        return self._drain([ob])

    def _bump_seq(self) -> int:
        self._seq += 1
        return self._seq

    def _drain(self, obligations: list[_Obligation]) -> Verdict | None:
        heap: list[_Obligation] = list(obligations)
        heapq.heapify(heap)
        handled = 0
        while heap:
            if self._cancelled():
                return Unknown("cancelled", self._top, self.stats)
            handled += 1
            if (
                self.config.max_obligations is not None
                and handled > self.config.max_obligations
            ):
                return Unknown("obligation limit reached", self._top, self.stats)
            ob = heapq.heappop(heap)
            if ob.level == 0:
                # The obligation minterm lies in the initial states.
                return self._counterexample(ob.minterm, ob.successor)
            res = self._query_blocked(ob.cube, ob.level)
            if res.sat:
                d_next = Cube(self._prime(ob.cube))
                inst = self._make_instance(ob.level - 1, ob.cube, d_next, res)
                cube = self._generalize_po(inst)
                if self._intersects_init(cube):
                    return self._counterexample(self._init_state_in(cube), ob)
                child = _Obligation(
                    level=ob.level - 1,
                    depth=ob.depth + 1,
                    seq=self._bump_seq(),
                    cube=cube,
                    minterm=inst.m,
                    inputs=inst.i,
                    successor=ob,
                )
                heapq.heappush(heap, child)
                heapq.heappush(heap, ob)
                continue
            # Blocked: shrink along the unsat core, generalize, push forward.
            core = set(res.assumption_core or ())
            shrunk = [l for l in ob.cube if (self._prime([l])[0]) in core]
            cube = Cube(shrunk) if shrunk else ob.cube
            if (
                not shrunk
                or self._intersects_init(cube)
                or not self._relative_inductive(list(cube.literals), ob.level - 1)
            ):
                cube = ob.cube
            cube = self._generalize_clause(cube, ob.level)
            level = ob.level
            while level < self._top and self._relative_inductive(
                list(cube.literals), level
            ):
                level += 1
            self._add_blocked(cube, level)
            if self.config.po_push and level < self._top:
                heapq.heappush(
                    heap,
                    _Obligation(
                        level=level + 1,
                        depth=ob.depth,
                        seq=self._bump_seq(),
                        cube=ob.cube,
                        minterm=ob.minterm,
                        inputs=ob.inputs,
                        successor=ob.successor,
                    ),
                )
        return None

    # -- propagation ----------------------------------------------------------------

    def propagate(self) -> Cnf | None:
        """Push clauses forward; returns the invariant CNF at a fixpoint."""
        for level in range(1, self._top):
            stay: list[Cube] = []
            for cube in self._frames[level]:
                if self._relative_inductive(list(cube.literals), level):
                    self._frames[level + 1].append(cube)
                    clause = [-l for l in cube]
                    for solver in (self._cons, self._root):
                        solver.add_clause([-self._acts[level + 1]] + clause)
                else:
                    stay.append(cube)
            self._frames[level] = stay
            if not stay:
                return self._certified_invariant(level + 1)
        return None

    # -- certificates -----------------------------------------------------------------

    def _certified_invariant(self, level: int) -> Cnf:
        """Invariant from the fixpoint frame, re-verified independently.

        The invariant predicate is Frame(s) and not bad(s), where Frame is
        the pure state-variable clause set of the fixpoint frame.  Four SAT
        checks certify it: the initial states are safe and inside Frame,
        Frame is closed under the transition relation, and no Frame state
        steps into a bad state.  Together these rule out any reachable bad
        state.
        """
        ts = self.ts
        frame_clauses: list[list[int]] = []
        for j in range(level, self._top + 1):
            frame_clauses += [list(c.negate().literals) for c in self._frames[j]]
        frame = Cnf(frame_clauses, ts.num_vars)

        s1 = Solver(ts.num_vars)
        s1.add_cnf(ts.init)
        s1.add_cnf(ts.bad)
        self.stats.sat_calls += 1
        if s1.solve().sat:
            raise EngineError("certificate failure: an initial state is bad")

        neg_frame, nv2 = negate_cnf(frame, ts.num_vars)
        s2 = Solver(nv2)
        s2.add_cnf(ts.init)
        for cl in neg_frame:
            s2.add_clause(cl)
        self.stats.sat_calls += 1
        if s2.solve().sat:
            raise EngineError(
                "certificate failure: an initial state escapes the invariant"
            )

        frame_primed = frame.rename(self._next)
        neg_primed, nv3 = negate_cnf(frame_primed, self._alloc)
        s3 = Solver(nv3)
        s3.add_cnf(frame)
        s3.add_cnf(ts.trans)
        if ts.constraint is not None:
            s3.add_cnf(ts.constraint)
        for cl in neg_primed:
            s3.add_clause(cl)
        self.stats.sat_calls += 1
        if s3.solve().sat:
            raise EngineError("certificate failure: invariant is not closed under T")

        s4 = Solver(self._alloc)
        s4.add_cnf(frame)
        s4.add_cnf(ts.trans)
        if ts.constraint is not None:
            s4.add_cnf(ts.constraint)
        s4.add_cnf(self._bad_next)
        self.stats.sat_calls += 1
        if s4.solve().sat:
            raise EngineError(
                "certificate failure: an invariant state reaches a bad state"
            )

        neg_bad, nv = negate_cnf(ts.bad, max(self._alloc, ts.bad.num_vars))
        return Cnf([list(c.literals) for c in frame] + neg_bad, nv)


def check(ts: TransitionSystem, config: EngineConfig | None = None) -> Verdict:
    return Engine(ts, config).check()


# ---------------------------------------------------------------------------
# Witness formatting.


def aiger_witness(ts: TransitionSystem, trace) -> str:
    """Unsafe trace in the stimulus-per-frame witness format."""
    lines = ["1", "b0"]
    state0, _ = trace[0]
    lines.append(
        "".join("1" if state0.value(v) else "0" for v in ts.state_vars)
    )
    for state, inputs in trace:
        if inputs is None:
            continue
        lines.append(
            "".join("1" if inputs.value(v) else "0" for v in ts.input_vars)
        )
    lines.append(".")
    return "\n".join(lines) + "\n"


def invariant_dimacs(invariant: Cnf) -> str:
    return invariant.to_dimacs()


# ---------------------------------------------------------------------------
# Portfolio execution.


def _portfolio_worker(args):
    ts, cfg_dict, index, stop = args
    cfg = EngineConfig(**cfg_dict)
    if stop is not None:
        cfg.cancel_check = stop.is_set
    try:
        verdict = Engine(ts, cfg).check()
        return index, verdict
    except EngineError as exc:
        raise RuntimeError(f"portfolio member {index}: {exc}") from exc


def _strip_config(cfg: EngineConfig) -> dict:
    skip = ("extract_hook", "cancel_check")
    return {k: v for k, v in vars(cfg).items() if k not in skip}


def check_portfolio(
    ts: TransitionSystem, configs: list[EngineConfig], jobs: int | None = None
) -> tuple[int, Verdict]:
    """Run independent engines concurrently; the first verdict wins.

    Workers share the immutable transition system and a one-shot stop
    signal polled at query boundaries; losers cancel cooperatively.  Falls
    back to sequential execution when process pools are unavailable.
    Returns (winning config index, verdict).
    """
    if len(configs) == 1:
        return _portfolio_worker((ts, _strip_config(configs[0]), 0, None))
    try:
        import multiprocessing as mp

        ctx = mp.get_context("fork")
        with ctx.Manager() as manager:
            stop = manager.Event()
            payload = [
                (ts, _strip_config(cfg), i, stop) for i, cfg in enumerate(configs)
            ]
            with ctx.Pool(processes=jobs or min(len(configs), mp.cpu_count())) as pool:
                winner: tuple[int, Verdict] | None = None
                for index, verdict in pool.imap_unordered(_portfolio_worker, payload):
                    if winner is None and not isinstance(verdict, Unknown):
                        winner = (index, verdict)
                        stop.set()
                if winner is not None:
                    return winner
                return 0, Unknown(
                    "all portfolio members inconclusive", 0, EngineStats()
                )
    except (ImportError, OSError):
        for i, cfg in enumerate(configs):
            index, verdict = _portfolio_worker((ts, _strip_config(cfg), i, None))
            if not isinstance(verdict, Unknown):
                return index, verdict
        return 0, Unknown("all portfolio members inconclusive", 0, EngineStats())
