"""DFA specifications and their sequential reachability decomposition.

The specification automaton is complemented, its accepting state runs
(without consecutive repeats) are enumerated to a bounded length, and
each run is split into (source, via, target) reachability elements with
a horizon.  Elements sharing a source edge are grouped into partition
sets, which drive a switching automaton selecting one controller per
partition.

All functions are pure and return canonically sorted containers, so
results are independent of enumeration order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


@dataclass(frozen=True)
class Dfa:
    """Deterministic finite automaton over atomic propositions.

    The transition function must be total on states x propositions.
    """

    states: tuple
    initial: str
    props: tuple
    transitions: Mapping[tuple, str]
    accepting: frozenset

    def __post_init__(self):
        state_set = set(self.states)
        if self.initial not in state_set:
            raise ValueError(f"initial state {self.initial!r} not in states")
        if not set(self.accepting) <= state_set:
            raise ValueError("accepting states not a subset of states")
        for q in self.states:
            for p in self.props:
                tgt = self.transitions.get((q, p))
                if tgt is None:
                    raise ValueError(f"transition function not total: missing ({q!r}, {p!r})")
                if tgt not in state_set:
                    raise ValueError(f"transition ({q!r}, {p!r}) -> unknown state {tgt!r}")

    def delta(self, q: str, p: str) -> str:
        return self.transitions[(q, p)]

    def run_word(self, word: Iterable[str]) -> str:
        q = self.initial
        for p in word:
            q = self.transitions[(q, p)]
        return q

    def accepts(self, word: Iterable[str]) -> bool:
        return self.run_word(word) in self.accepting

    def complement(self) -> "Dfa":
        """Interchange accepting and non-accepting states."""
        return Dfa(
            states=self.states,
            initial=self.initial,
            props=self.props,
            transitions=self.transitions,
            accepting=frozenset(self.states) - self.accepting,
        )

    def self_loop_states(self) -> frozenset:
        """States q with delta(q, p) = q for some proposition p."""
        return frozenset(q for q in self.states if any(self.delta(q, p) == q for p in self.props))

    def successors(self, q: str) -> frozenset:
        """One-transition successor set (self included when q loops)."""
        return frozenset(self.delta(q, p) for p in self.props)

    def edge_symbols(self, q: str, q2: str) -> frozenset:
        """Propositions labelling the edge q -> q2."""
        return frozenset(p for p in self.props if self.delta(q, p) == q2)

    def edges(self) -> tuple:
        """Self-loop-free edge relation used for run enumeration."""
        out = set()
        for q in self.states:
            for p in self.props:
                q2 = self.delta(q, p)
                if q2 != q:
                    out.add((q, q2))
        return tuple(sorted(out))

    def to_dict(self) -> dict:
        return {
            "states": list(self.states),
            "initial": self.initial,
            "propositions": list(self.props),
            "accepting": sorted(self.accepting),
            "transitions": [[q, p, self.transitions[(q, p)]] for q in self.states for p in self.props],
        }


@dataclass(frozen=True, order=True)
class AcceptingRun:
    """State run ending in an accepting state, without consecutive repeats."""

    states: tuple
    symbols: tuple = field(compare=False)  # per-step proposition frozensets

    def __len__(self):
        return len(self.states)

    def first_edge_symbols(self) -> frozenset:
        return self.symbols[0] if self.symbols else frozenset()


@dataclass(frozen=True, order=True)
class ReachElement:
    """(source, via, target) triple with a reach-avoid horizon.

    entry_symbols label the edge source->via (initial region role);
    exit_symbols label via->target (unsafe region role).
    """

    source: str
    via: str
    target: str
    horizon: int
    entry_symbols: frozenset = field(compare=False)
    exit_symbols: frozenset = field(compare=False)

    def key(self) -> tuple:
        return (self.source, self.via, self.target, self.horizon)


PartitionKey = tuple  # (source, via, frozenset of via's successors)


@dataclass(frozen=True)
class PartitionSet:
    """Reach elements sharing a source edge; they get one certificate
    and one controller."""

    source: str
    via: str
    successors: frozenset
    elements: tuple

    @property
    def key(self) -> PartitionKey:
        return (self.source, self.via, self.successors)

    def entry_symbols(self) -> frozenset:
        return self.elements[0].entry_symbols

    def exit_symbols(self) -> frozenset:
        out = frozenset()
        for el in self.elements:
            out |= el.exit_symbols
        return out


def accepting_runs(dfa: Dfa, max_len: int) -> tuple:
    """All accepting state runs of length at most max_len + 1.

    Depth-first search over the self-loop-free edge graph; runs may
    revisit non-consecutive states, so termination comes from the depth
    bound alone.
    """
    if max_len < 1:
        raise ValueError("horizon must be >= 1")
    adj: dict = {}
    for q, q2 in dfa.edges():
        adj.setdefault(q, []).append(q2)
    runs = []

    def extend(path):
        if path[-1] in dfa.accepting:
            runs.append(tuple(path))
        if len(path) == max_len + 1:
            return
        for nxt in adj.get(path[-1], ()):
            path.append(nxt)
            extend(path)
            path.pop()

    extend([dfa.initial])
    out = []
    for states in sorted(set(runs)):
        symbols = tuple(dfa.edge_symbols(a, b) for a, b in zip(states, states[1:]))
        out.append(AcceptingRun(states=states, symbols=symbols))
    return tuple(out)


def runs_by_prop(runs: Sequence[AcceptingRun], prop: str) -> tuple:
    """Runs whose first-edge symbol set contains the proposition."""
    return tuple(r for r in runs if prop in r.first_edge_symbols())


def reach_elements(dfa: Dfa, run: AcceptingRun, max_len: int) -> tuple:
    """Split a run into reachability elements with horizons.

    The horizon is max_len + 2 - |run| while the via state can
    self-loop, and 1 otherwise.  Runs of length 2 produce no elements:
    they start in a region that already decides the outcome.
    """
    loops = dfa.self_loop_states()
    n = len(run.states)
    out = []
    for idx in range(n - 2):
        q, via, target = run.states[idx], run.states[idx + 1], run.states[idx + 2]
        horizon = max_len + 2 - n if via in loops else 1
        out.append(
            ReachElement(
                source=q,
                via=via,
                target=target,
                horizon=horizon,
                entry_symbols=run.symbols[idx],
                exit_symbols=run.symbols[idx + 1],
            )
        )
    return tuple(out)


def all_reach_elements(dfa: Dfa, runs: Sequence[AcceptingRun], max_len: int) -> tuple:
    """Union of elements over all runs, deduplicated by key."""
    seen = {}
    for run in runs:
        for el in reach_elements(dfa, run, max_len):
            seen.setdefault(el.key(), el)
    return tuple(seen[k] for k in sorted(seen))


def partition(dfa: Dfa, elements: Sequence[ReachElement]) -> tuple:
    """Group elements by (source, via, successors(via)).

    Every element lands in exactly one partition set.
    """
    groups: dict = {}
    for el in elements:
        key = (el.source, el.via, dfa.successors(el.via))
        groups.setdefault(key, []).append(el)
    out = []
    for (source, via, succ) in sorted(groups, key=lambda k: (k[0], k[1], sorted(k[2]))):
        members = tuple(sorted(groups[(source, via, succ)]))
        out.append(PartitionSet(source=source, via=via, successors=succ, elements=members))
    return tuple(out)


# ---------------------------------------------------------------------
# switching automaton

INITIAL = "initial"
ACTIVE = "active"
FINAL = "final"


@dataclass(frozen=True)
class SwitchState:
    """State of the switching automaton.

    kind 'initial' carries (source,) = the complement DFA's initial
    state; 'active' carries (source, via); 'final' carries the reached
    accepting state of the complement DFA.
    """

    kind: str
    pair: tuple

    def label(self) -> str:
        if self.kind == INITIAL:
            return f"start[{self.pair[0]}]"
        if self.kind == ACTIVE:
            return f"({self.pair[0]},{self.pair[1]})"
        return f"violated[{self.pair[0]}]"

    def partition_key(self, dfa: Dfa) -> PartitionKey | None:
        if self.kind != ACTIVE:
            return None
        return (self.pair[0], self.pair[1], dfa.successors(self.pair[1]))


@dataclass(frozen=True)
class SwitchingAutomaton:
    """Switching mechanism for per-partition controllers.

    States track the complement DFA edge (source, via) currently being
    traversed; self-loops of the complement DFA keep the switching
    state (and hence the active controller) unchanged; transitions into
    the complement's accepting set go to absorbing final states.
    """

    dfa: Dfa  # the complement DFA
    states: tuple
    initial: SwitchState
    transitions: Mapping[tuple, SwitchState]
    finals: frozenset

    def advance(self, state: SwitchState, prop: str) -> SwitchState:
        if state.kind == FINAL:
            return state
        return self.transitions[(state, prop)]

    def to_dict(self) -> dict:
        return {
            "states": [s.label() for s in self.states],
            "initial": self.initial.label(),
            "accepting": sorted(s.label() for s in self.finals),
            "transitions": sorted(
                [src.label(), p, dst.label()] for (src, p), dst in self.transitions.items()
            ),
        }

    def to_graph_text(self) -> str:
        """Plain digraph description (dot syntax) for visualization."""
        lines = ["digraph switching {"]
        lines.append(f'  init [shape=point]; init -> "{self.initial.label()}";')
        for s in self.states:
            shape = "doublecircle" if s in self.finals else "circle"
            lines.append(f'  "{s.label()}" [shape={shape}];')
        edges: dict = {}
        for (src, p), dst in sorted(
            self.transitions.items(), key=lambda kv: (kv[0][0].label(), kv[0][1])
        ):
            edges.setdefault((src.label(), dst.label()), []).append(p)
        for (src, dst), props in edges.items():
            lines.append(f'  "{src}" -> "{dst}" [label="{",".join(sorted(props))}"];')
        lines.append("}")
        return "\n".join(lines)


def switching_automaton(dfa_c: Dfa) -> SwitchingAutomaton:
    """Build the controller-switching automaton of a complement DFA.

    Reading a proposition p in switching state s tracking edge
    (q, via): if delta(via, p) = via the state is unchanged; if it
    reaches an accepting state of the complement the run is lost and a
    final state absorbs; otherwise the tracked edge advances.  Only
    states reachable from the initial state are kept.
    """
    initial = SwitchState(INITIAL, (dfa_c.initial,))
    transitions = {}
    states = {initial}
    finals = set()
    frontier = [initial]
    while frontier:
        s = frontier.pop()
        if s.kind == FINAL:
            continue
        current = s.pair[0] if s.kind == INITIAL else s.pair[1]
        for p in dfa_c.props:
            nxt = dfa_c.delta(current, p)
            if nxt == current:
                target = s
            elif nxt in dfa_c.accepting:
                target = SwitchState(FINAL, (nxt,))
                finals.add(target)
            else:
                target = SwitchState(ACTIVE, (current, nxt))
            transitions[(s, p)] = target
            if target not in states:
                states.add(target)
                frontier.append(target)
    ordered = sorted(states, key=lambda s: (s.kind != INITIAL, s.label()))
    return SwitchingAutomaton(
        dfa=dfa_c,
        states=tuple(ordered),
        initial=initial,
        transitions=transitions,
        finals=frozenset(finals),
    )


# ---------------------------------------------------------------------
# whole decomposition


@dataclass(frozen=True)
class Decomposition:
    """Everything derived from one specification DFA and horizon."""

    spec: Dfa
    complement: Dfa
    max_len: int
    runs: tuple
    elements: tuple
    partitions: tuple
    switching: SwitchingAutomaton

    def runs_for(self, prop: str) -> tuple:
        return runs_by_prop(self.runs, prop)

    def partition_for(self, element: ReachElement) -> PartitionSet:
        for ps in self.partitions:
            if element.key() in {e.key() for e in ps.elements}:
                return ps
        raise KeyError(element.key())

    def to_dict(self) -> dict:
        by_prop = {}
        for p in self.spec.props:
            runs = self.runs_for(p)
            by_prop[p] = {
                "runs": [list(r.states) for r in runs],
                "elements": [
                    list(el.key()) for r in runs for el in reach_elements(self.complement, r, self.max_len)
                ],
            }
        return {
            "horizon": self.max_len,
            "runs": [list(r.states) for r in self.runs],
            "by_proposition": by_prop,
            "elements": [list(el.key()) for el in self.elements],
            "partitions": [
                {
                    "source": ps.source,
                    "via": ps.via,
                    "successors": sorted(ps.successors),
                    "elements": [list(el.key()) for el in ps.elements],
                }
                for ps in self.partitions
            ],
            "switching": self.switching.to_dict(),
        }


def decompose(spec: Dfa, max_len: int) -> Decomposition:
    """Complement the specification and decompose it into reach tasks."""
    comp = spec.complement()
    runs = accepting_runs(comp, max_len)
    elements = all_reach_elements(comp, runs, max_len)
    parts = partition(comp, elements)
    switching = switching_automaton(comp)
    return Decomposition(
        spec=spec,
        complement=comp,
        max_len=max_len,
        runs=runs,
        elements=elements,
        partitions=parts,
        switching=switching,
    )
