"""Generalization problem instances, the soundness checker, the exhaustive
oracle, metrics, and the on-disk instance format.

One instance bundles everything a generalization strategy consumes: the
transition system, the frame CNF the witness state lives in, the blocked
cube and its primed target, and the satisfying minterms (state, input,
next state) the SAT solver produced.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

from .circuit import parse_aiger, unparse_aiger
from .formats import Caps, TransitionSystem, ORIGIN_DIMSPEC
from .logic import Cnf, Cube
from .optsolvers import Qbf2Problem, qbf2_solve
from .sat import Solver


class InstanceError(ValueError):
    pass


class OracleBoundExceededError(ValueError):
    pass


@dataclass(frozen=True)
class PogpInstance:
    ts: TransitionSystem
    frame: Cnf  # over state vars; empty means unconstrained
    d: Cube | None  # blocked cube over state vars; None for outermost queries
    d_next: Cube  # target cube over next-state vars
    m: Cube  # full witness minterm over state vars
    i: Cube  # full witness minterm over input vars
    t_next: Cube  # full witness minterm over next-state vars

    def validate(self) -> None:
        """Check the instance invariants; raises InstanceError."""
        ts = self.ts
        svars = set(ts.state_vars)
        if {abs(l) for l in self.m} != svars:
            raise InstanceError("m must assign every state variable")
        if {abs(l) for l in self.i} != set(ts.input_vars):
            raise InstanceError("i must assign every input variable")
        if {abs(l) for l in self.t_next} != set(ts.next_vars):
            raise InstanceError("t' must assign every next-state variable")
        if not self.d_next.subsumes(self.t_next):
            raise InstanceError("t' must lie inside the target cube d'")
        if self.d is not None and all(l in self.m for l in self.d):
            raise InstanceError("m must satisfy the negation of the blocked cube")
        assign = {abs(l): l > 0 for l in self.m}
        try:
            frame_ok = self.frame.eval(_FrameView(assign))
        except KeyError as exc:
            raise InstanceError(
                f"frame clause references non-state variable {exc.args[0]}"
            ) from None
        if not frame_ok:
            raise InstanceError("m must satisfy the frame CNF")
        s = Solver(ts.num_vars)
        s.add_cnf(ts.trans)
        if ts.constraint is not None:
            s.add_cnf(ts.constraint)
        res = s.solve(list(self.m) + list(self.i) + list(self.t_next))
        if not res.sat:
            raise InstanceError("m, i, t' do not form a transition")

    def state_count(self) -> int:
        return len(self.ts.state_vars)


class _FrameView:
    """Adapter so Cnf.eval can read a var->bool dict."""

    def __init__(self, assign: dict[int, bool]):
        self._assign = assign

    def __getitem__(self, var: int) -> bool:
        return self._assign[var]


@dataclass
class GenResult:
    cube: Cube
    removed: int
    strategy: str
    time: float
    solver_stats: dict = field(default_factory=dict)


def complete_model(ts: TransitionSystem, inst: PogpInstance) -> list[int]:
    """A full model of T (with constraint) extending m, i, t'."""
    s = Solver(ts.num_vars)
    s.add_cnf(ts.trans)
    if ts.constraint is not None:
        s.add_cnf(ts.constraint)
    res = s.solve(list(inst.m) + list(inst.i) + list(inst.t_next))
    if not res.sat:
        raise InstanceError("instance minterms do not satisfy the transition CNF")
    return res.model


# ---------------------------------------------------------------------------
# Soundness checking.


@dataclass(frozen=True)
class PoVerdict:
    sound: bool
    witness: Cube | None = None  # a cube state with no admissible target step


def verify_po(
    ts: TransitionSystem,
    cube: Cube,
    d_next: Cube,
    with_frame: Cnf | None = None,
    method: str = "qbf",
    enum_bound: int = 12,
) -> PoVerdict:
    """Check that every state of ``cube`` steps into ``d_next``.

    With a frame CNF, membership in the frame is required of every cube
    state as well (the contract the free variants generalize under).  The
    default decision procedure is one 2-QBF validity call; ``enumerate``
    cross-checks by explicit expansion of the free state bits.
    """
    free = [v for v in ts.state_vars if cube.value(v) is None]
    bound_vars = set(ts.state_vars) - set(free)
    matrix = ts.trans
    if ts.constraint is not None:
        matrix = matrix.conjoin(ts.constraint)
    extra = [[l] for l in cube]
    extra += [[l] for l in d_next]
    if with_frame is not None:
        matrix = matrix.conjoin(with_frame)
    matrix = matrix.conjoin(Cnf([c for c in extra if c], ts.num_vars))

    if method == "enumerate":
        if len(free) > enum_bound:
            raise OracleBoundExceededError(
                f"{len(free)} free bits exceed the enumeration bound {enum_bound}"
            )
        s = Solver(matrix.num_vars)
        s.add_cnf(matrix)
        base = list(cube)
        for bits in itertools.product((False, True), repeat=len(free)):
            assum = base + [v if b else -v for v, b in zip(free, bits)]
            if not s.solve(assum).sat:
                witness = Cube(assum)
                return PoVerdict(False, witness=witness)
        return PoVerdict(True)

    inner = [v for v in range(1, matrix.num_vars + 1) if v not in set(free)]
    problem = Qbf2Problem(
        exists_outer=(),
        forall=tuple(free),
        exists_inner=tuple(inner),
        matrix=matrix,
    )
    res = qbf2_solve(problem)
    if res.valid:
        return PoVerdict(True)
    witness = None
    if res.counterexample is not None:
        lits = list(cube) + [
            v if b else -v for v, b in sorted(res.counterexample.items())
        ]
        witness = Cube(lits)
    return PoVerdict(False, witness=witness)


# ---------------------------------------------------------------------------
# Exhaustive oracle.


def brute_force_oracle(
    inst: PogpInstance, mode: str = "fix", bound: int = 12
) -> GenResult:
    """Optimal generalization by subcube enumeration (small instances only).

    fix: scans subcubes of m by decreasing removal count and returns the
    first sound one.  free: scans all cubes over the state variables,
    requiring soundness with respect to frame-and-transition and at least
    one state inside the frame.
    """
    ts = inst.ts
    n = len(ts.state_vars)
    if n > bound:
        raise OracleBoundExceededError(f"{n} state bits exceed the oracle bound {bound}")
    start = time.perf_counter()
    svars = list(ts.state_vars)

    if mode == "fix":
        for keep in range(0, n + 1):
            for kept_vars in itertools.combinations(svars, keep):
                cube = Cube(l for l in inst.m if abs(l) in kept_vars)
                verdict = verify_po(ts, cube, inst.d_next, method="enumerate", enum_bound=bound)
                if verdict.sound:
                    return GenResult(
                        cube=cube,
                        removed=n - keep,
                        strategy="oracle",
                        time=time.perf_counter() - start,
                    )
        raise InstanceError("not even the full minterm is sound; invalid instance")

    if mode != "free":
        raise ValueError(f"unknown oracle mode {mode!r}")

    frame_solver = Solver(max(ts.num_vars, inst.frame.num_vars))
    frame_solver.add_cnf(inst.frame)
    for keep in range(0, n + 1):
        for kept_vars in itertools.combinations(svars, keep):
            for signs in itertools.product((1, -1), repeat=keep):
                cube = Cube(s * v for s, v in zip(signs, kept_vars))
                if not frame_solver.solve(list(cube)).sat:
                    continue  # entirely outside the frame
                verdict = verify_po(
                    ts,
                    cube,
                    inst.d_next,
                    with_frame=inst.frame,
                    method="enumerate",
                    enum_bound=bound,
                )
                if verdict.sound:
                    return GenResult(
                        cube=cube,
                        removed=n - keep,
                        strategy="oracle:free",
                        time=time.perf_counter() - start,
                    )
    raise InstanceError("no sound cube exists; invalid instance")


# ---------------------------------------------------------------------------
# Metrics.


def reduction_ratio(removed: int, num_state_vars: int) -> float:
    if num_state_vars == 0:
        return 0.0
    return removed / num_state_vars


def performance(removed: int, removed_reference: int) -> float:
    """Removal relative to the optimal reference; 1.0 when both are zero."""
    if removed_reference == 0:
        return 1.0 if removed == 0 else math.inf
    return removed / removed_reference


# ---------------------------------------------------------------------------
# Text serialization (see docs/pogp-format.md).


def dumps_instance(inst: PogpInstance) -> str:
    ts = inst.ts
    lines = ["pogp 1"]
    lines.append(f"numvars {ts.num_vars}")
    lines.append("state " + " ".join(map(str, ts.state_vars)))
    lines.append("inputs " + " ".join(map(str, ts.input_vars)))
    lines.append("next " + " ".join(map(str, ts.next_vars)))
    lines.append(f"origin {ts.origin}")

    def cap(x: bool | None) -> str:
        return "?" if x is None else ("1" if x else "0")

    lines.append(
        "caps "
        + " ".join(
            cap(x)
            for x in (
                ts.caps.right_unique,
                ts.caps.left_total,
                ts.caps.left_unique,
                ts.caps.right_total,
            )
        )
    )

    def cube_line(tag: str, cube: Cube) -> str:
        return f"cube {tag} " + " ".join(map(str, cube.literals)) + " 0"

    lines.append(cube_line("m", inst.m))
    lines.append(cube_line("i", inst.i))
    if inst.d is not None:
        lines.append(cube_line("d", inst.d))
    lines.append(cube_line("dp", inst.d_next))
    lines.append(cube_line("tp", inst.t_next))

    def cnf_block(tag: str, cnf: Cnf) -> list[str]:
        out = [f"{tag} cnf {len(cnf)}"]
        for clause in cnf:
            out.append(" ".join(map(str, clause.literals)) + " 0")
        return out

    lines += cnf_block("frame", inst.frame)
    lines += cnf_block("trans", ts.trans)
    if ts.constraint is not None:
        lines += cnf_block("constraint", ts.constraint)
    lines += cnf_block("init", ts.init)
    lines += cnf_block("bad", ts.bad)
    if ts.circuit is not None:
        aag = unparse_aiger(ts.circuit)
        body = aag.splitlines()
        lines.append(f"circuit {len(body)}")
        lines += body
    lines.append("end")
    return "\n".join(lines) + "\n"


def loads_instance(text: str) -> PogpInstance:
    lines = text.splitlines()
    pos = 0

    def take() -> str:
        nonlocal pos
        if pos >= len(lines):
            raise InstanceError("unexpected end of instance file")
        line = lines[pos]
        pos += 1
        return line

    header = take().split()
    if header != ["pogp", "1"]:
        raise InstanceError("not a pogp version 1 file")
    fields: dict[str, str] = {}
    cubes: dict[str, Cube] = {}
    cnfs: dict[str, Cnf] = {}
    circuit = None
    while pos < len(lines):
        line = take()
        if not line.strip():
            continue
        toks = line.split()
        if toks[0] == "end":
            break
        if toks[0] == "cube":
            if toks[-1] != "0":
                raise InstanceError(f"cube line missing terminator: {line!r}")
            cubes[toks[1]] = Cube(int(t) for t in toks[2:-1])
        elif toks[0] in ("frame", "trans", "constraint", "init", "bad") and toks[1:2] == ["cnf"]:
            count = int(toks[2])
            clauses = []
            for _ in range(count):
                cl = take().split()
                if cl[-1] != "0":
                    raise InstanceError("clause missing terminator")
                clauses.append([int(t) for t in cl[:-1]])
            cnfs[toks[0]] = Cnf(clauses)
        elif toks[0] == "circuit":
            count = int(toks[1])
            circuit = parse_aiger("\n".join(take() for _ in range(count)) + "\n")
        else:
            fields[toks[0]] = " ".join(toks[1:])

    def ids(key: str) -> tuple[int, ...]:
        raw = fields.get(key, "").split()
        return tuple(int(t) for t in raw)

    def cap(tok: str) -> bool | None:
        return None if tok == "?" else tok == "1"

    caps_toks = fields.get("caps", "? ? ? ?").split()
    caps = Caps(*(cap(t) for t in caps_toks))
    num_vars = int(fields.get("numvars", "0"))
    ts = TransitionSystem(
        state_vars=ids("state"),
        input_vars=ids("inputs"),
        next_vars=ids("next"),
        init=cnfs.get("init", Cnf()),
        bad=cnfs.get("bad", Cnf()),
        trans=cnfs.get("trans", Cnf()),
        constraint=cnfs.get("constraint"),
        caps=caps,
        origin=fields.get("origin", ORIGIN_DIMSPEC),
        circuit=circuit,
        num_vars=max(num_vars, cnfs.get("trans", Cnf()).num_vars),
    )
    for tag in ("m", "i", "dp", "tp"):
        if tag not in cubes:
            raise InstanceError(f"missing cube {tag!r}")
    return PogpInstance(
        ts=ts,
        frame=cnfs.get("frame", Cnf()),
        d=cubes.get("d"),
        d_next=cubes["dp"],
        m=cubes["m"],
        i=cubes["i"],
        t_next=cubes["tp"],
    )
