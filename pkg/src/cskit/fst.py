"""Weighted finite-state transducers in the tropical semiring.

Costs are negative natural-log probabilities: path costs add along a path
and alternatives are resolved by taking the minimum. Graphs produced by the
builder functions in this package are never mutated after construction;
every algorithm here returns a fresh graph.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass

from .errors import CskitError, ConfigError, ParseError

EPSILON = "<eps>"
EPSILON_ID = 0


class SymbolTable:
    """Bijection between non-negative integer ids and symbol strings.

    Id 0 is always ``<eps>`` and never labels real input.
    """

    def __init__(self):
        self._by_id: list[str] = [EPSILON]
        self._by_sym: dict[str, int] = {EPSILON: EPSILON_ID}

    @classmethod
    def from_symbols(cls, symbols) -> "SymbolTable":
        table = cls()
        for sym in symbols:
            table.add(sym)
        return table

    def add(self, symbol: str) -> int:
        """Return the id of ``symbol``, adding it if unseen."""
        sym_id = self._by_sym.get(symbol)
        if sym_id is None:
            sym_id = len(self._by_id)
            self._by_id.append(symbol)
            self._by_sym[symbol] = sym_id
        return sym_id

    def id_of(self, symbol: str) -> int:
        try:
            return self._by_sym[symbol]
        except KeyError:
            raise CskitError(f"unknown symbol: {symbol!r}") from None

    def symbol_of(self, sym_id: int) -> str:
        try:
            return self._by_id[sym_id]
        except IndexError:
            raise CskitError(f"unknown symbol id: {sym_id}") from None

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._by_sym

    def __len__(self) -> int:
        return len(self._by_id)

    def __iter__(self):
        return iter(self._by_id)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymbolTable):
            return NotImplemented
        return self._by_id == other._by_id

    def copy(self) -> "SymbolTable":
        return SymbolTable.from_symbols(self._by_id[1:])


@dataclass(frozen=True)
class Arc:
    dst: int
    ilabel: int
    olabel: int
    cost: float

    def __post_init__(self):
        if not math.isfinite(self.cost):
            raise CskitError(f"arc cost must be finite, got {self.cost}")


@dataclass(frozen=True)
class Path:
    """An accepting path: visited states, arcs taken, and label strings."""

    states: tuple[int, ...]
    arcs: tuple[Arc, ...]
    total_cost: float
    isequence: tuple[str, ...]
    osequence: tuple[str, ...]


class Wfst:
    """Transducer with dense state ids, per-state adjacency lists, and a
    final-cost map. ``isyms``/``osyms`` resolve arc labels."""

    def __init__(self, isyms: SymbolTable | None = None, osyms: SymbolTable | None = None):
        self.isyms = isyms if isyms is not None else SymbolTable()
        self.osyms = osyms if osyms is not None else self.isyms
        self.arcs: list[list[Arc]] = []
        self.finals: dict[int, float] = {}
        self.start: int = -1

    def add_state(self) -> int:
        self.arcs.append([])
        return len(self.arcs) - 1

    @property
    def num_states(self) -> int:
        return len(self.arcs)

    def num_arcs(self) -> int:
        return sum(len(a) for a in self.arcs)

    def set_start(self, state: int) -> None:
        self._check_state(state)
        self.start = state

    def set_final(self, state: int, cost: float = 0.0) -> None:
        self._check_state(state)
        if not math.isfinite(cost):
            raise CskitError(f"final cost must be finite, got {cost}")
        self.finals[state] = cost

    def add_arc(self, src: int, arc: Arc) -> None:
        self._check_state(src)
        self._check_state(arc.dst)
        self.arcs[src].append(arc)

    def _check_state(self, state: int) -> None:
        if not 0 <= state < len(self.arcs):
            raise CskitError(f"invalid state id: {state}")

    def is_acceptor(self) -> bool:
        return all(a.ilabel == a.olabel for arcs in self.arcs for a in arcs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Wfst):
            return NotImplemented
        return (
            self.start == other.start
            and self.arcs == other.arcs
            and self.finals == other.finals
            and self.isyms == other.isyms
            and self.osyms == other.osyms
        )

    def path_labels(self, states: tuple[int, ...], arcs: tuple[Arc, ...]) -> Path:
        """Build a Path record for an arc sequence starting at ``states[0]``."""
        cost = sum(a.cost for a in arcs) + self.finals[states[-1]]
        iseq = tuple(self.isyms.symbol_of(a.ilabel) for a in arcs if a.ilabel != EPSILON_ID)
        oseq = tuple(self.osyms.symbol_of(a.olabel) for a in arcs if a.olabel != EPSILON_ID)
        return Path(states, arcs, cost, iseq, oseq)


def accept_sequence(symbols: list[str], table: SymbolTable) -> Wfst:
    """Linear-chain acceptor for ``symbols``, all costs zero.

    Every symbol must already resolve in ``table``; epsilon is rejected.
    """
    ids = []
    for sym in symbols:
        if sym == EPSILON:
            raise CskitError("epsilon is not accepted in an input sequence")
        ids.append(table.id_of(sym))
    fst = Wfst(table, table)
    state = fst.add_state()
    fst.set_start(state)
    for sym_id in ids:
        nxt = fst.add_state()
        fst.add_arc(state, Arc(nxt, sym_id, sym_id, 0.0))
        state = nxt
    fst.set_final(state, 0.0)
    return fst


def closure(f: Wfst) -> Wfst:
    """Kleene star: accept any concatenation of zero or more ``f``-paths.

    A fresh start state is the unique final state; each old final state
    loops back to it through an epsilon arc carrying its final cost, so
    every concatenation corresponds to exactly one path in the result.
    """
    if f.start < 0:
        raise CskitError("closure of a graph with no start state")
    out = Wfst(f.isyms, f.osyms)
    hub = out.add_state()
    out.set_start(hub)
    out.set_final(hub, 0.0)
    offset = 1
    for _ in range(f.num_states):
        out.add_state()
    for src, arcs in enumerate(f.arcs):
        for arc in arcs:
            out.add_arc(src + offset, Arc(arc.dst + offset, arc.ilabel, arc.olabel, arc.cost))
    out.add_arc(hub, Arc(f.start + offset, EPSILON_ID, EPSILON_ID, 0.0))
    for state, cost in sorted(f.finals.items()):
        out.add_arc(state + offset, Arc(hub, EPSILON_ID, EPSILON_ID, cost))
    return out


def _has_epsilon_cycle(f: Wfst, side: str) -> bool:
    """Detect a cycle using only epsilon-``side`` arcs (side: 'i' or 'o')."""
    adj: list[list[int]] = [[] for _ in range(f.num_states)]
    for src, arcs in enumerate(f.arcs):
        for arc in arcs:
            label = arc.ilabel if side == "i" else arc.olabel
            if label == EPSILON_ID:
                adj[src].append(arc.dst)
    color = [0] * f.num_states
    for root in range(f.num_states):
        if color[root]:
            continue
        stack = [(root, iter(adj[root]))]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == 1:
                    return True
                if color[nxt] == 0:
                    color[nxt] = 1
                    stack.append((nxt, iter(adj[nxt])))
                    advanced = True
                    break
            if not advanced:
                color[node] = 2
                stack.pop()
    return False


def compose(a: Wfst, b: Wfst) -> Wfst:
    """Tropical composition with the standard three-state epsilon filter.

    Requires ``a.osyms == b.isyms``. Epsilon cycles on the matched sides are
    rejected; the filter guarantees each pair of compatible paths appears
    exactly once in the result. States that cannot reach a final state are
    pruned, so the result may be smaller than the raw product.
    """
    if a.osyms != b.isyms:
        raise ConfigError("compose: output symbols of the left graph differ from input symbols of the right graph")
    if a.start < 0 or b.start < 0:
        raise CskitError("compose: both graphs need a start state")
    if _has_epsilon_cycle(a, "o") or _has_epsilon_cycle(b, "i"):
        raise ConfigError("compose: epsilon cycle on a matched side")

    out = Wfst(a.isyms, b.osyms)
    state_ids: dict[tuple[int, int, int], int] = {}

    def state_of(key: tuple[int, int, int]) -> int:
        sid = state_ids.get(key)
        if sid is None:
            sid = out.add_state()
            state_ids[key] = sid
        return sid

    start_key = (a.start, b.start, 0)
    out.set_start(state_of(start_key))
    queue = deque([start_key])
    seen = {start_key}
    while queue:
        key = queue.popleft()
        qa, qb, flt = key
        src = state_ids[key]
        fa, fb = a.finals.get(qa), b.finals.get(qb)
        if fa is not None and fb is not None:
            out.set_final(src, fa + fb)

        def emit(dst_key, ilabel, olabel, cost):
            if dst_key not in seen:
                seen.add(dst_key)
                queue.append(dst_key)
            out.add_arc(src, Arc(state_of(dst_key), ilabel, olabel, cost))

        for arc_a in a.arcs[qa]:
            if arc_a.olabel == EPSILON_ID:
                # advance the left graph alone, unless the right just moved
                if flt != 2:
                    emit((arc_a.dst, qb, 1), arc_a.ilabel, EPSILON_ID, arc_a.cost)
                if flt == 0:
                    for arc_b in b.arcs[qb]:
                        if arc_b.ilabel == EPSILON_ID:
                            emit((arc_a.dst, arc_b.dst, 0), arc_a.ilabel, arc_b.olabel, arc_a.cost + arc_b.cost)
            else:
                for arc_b in b.arcs[qb]:
                    if arc_b.ilabel == arc_a.olabel:
                        emit((arc_a.dst, arc_b.dst, 0), arc_a.ilabel, arc_b.olabel, arc_a.cost + arc_b.cost)
        if flt != 1:
            for arc_b in b.arcs[qb]:
                if arc_b.ilabel == EPSILON_ID:
                    emit((qa, arc_b.dst, 2), EPSILON_ID, arc_b.olabel, arc_b.cost)
    return trim(out)


def trim(f: Wfst) -> Wfst:
    """Keep only states on some start-to-final path, renumbering densely.

    Surviving states keep their relative order. A graph with no accepting
    path collapses to a lone start state.
    """
    if f.start < 0:
        raise CskitError("trim: graph has no start state")
    reach = [False] * f.num_states
    stack = [f.start]
    reach[f.start] = True
    while stack:
        s = stack.pop()
        for arc in f.arcs[s]:
            if not reach[arc.dst]:
                reach[arc.dst] = True
                stack.append(arc.dst)
    coreach = [False] * f.num_states
    rev: list[list[int]] = [[] for _ in range(f.num_states)]
    for src, arcs in enumerate(f.arcs):
        for arc in arcs:
            rev[arc.dst].append(src)
    stack = [s for s in f.finals if reach[s]]
    for s in stack:
        coreach[s] = True
    while stack:
        s = stack.pop()
        for prev in rev[s]:
            if not coreach[prev] and reach[prev]:
                coreach[prev] = True
                stack.append(prev)

    keep = [s for s in range(f.num_states) if reach[s] and coreach[s]]
    out = Wfst(f.isyms, f.osyms)
    if not keep:
        out.set_start(out.add_state())
        return out
    remap = {}
    for s in keep:
        remap[s] = out.add_state()
    if f.start not in remap:
        # start cannot reach a final: keep it so the graph stays well formed
        remap[f.start] = out.add_state()
    out.set_start(remap[f.start])
    for s in keep:
        for arc in f.arcs[s]:
            if arc.dst in remap:
                out.add_arc(remap[s], Arc(remap[arc.dst], arc.ilabel, arc.olabel, arc.cost))
        if s in f.finals:
            out.set_final(remap[s], f.finals[s])
    return out


def _min_cost_to_final(f: Wfst) -> list[float]:
    """Cheapest completion cost from each state (including final cost).

    Bellman-Ford over the reversed graph; negative-cost cycles are
    rejected because no cheapest completion would exist.
    """
    INF = math.inf
    dist = [INF] * f.num_states
    for s, c in f.finals.items():
        dist[s] = c
    edges = [
        (src, arc.dst, arc.cost) for src, arcs in enumerate(f.arcs) for arc in arcs
    ]
    for _ in range(f.num_states):
        changed = False
        for src, dst, cost in edges:
            if dist[dst] + cost < dist[src] - 1e-15:
                dist[src] = dist[dst] + cost
                changed = True
        if not changed:
            break
    else:
        for src, dst, cost in edges:
            if dist[dst] + cost < dist[src] - 1e-15:
                raise CskitError("shortest_path: graph contains a negative-cost cycle")
    return dist


def shortest_path(f: Wfst, n: int = 1) -> list[Path]:
    """Up to ``n`` cheapest accepting paths, cheapest first.

    Ties are broken lexicographically by output-label ids, then input-label
    ids, then visited states, so results are deterministic. Returns an empty
    list when no accepting path exists. Expansion is capped per state
    (generously, relative to ``n``), which keeps the search finite even on
    graphs with zero-cost cycles; the toolkit's own graphs never hit the cap.
    """
    if n < 1:
        raise CskitError(f"shortest_path: n must be >= 1, got {n}")
    if f.start < 0:
        raise CskitError("shortest_path: graph has no start state")
    if not f.finals:
        return []
    to_final = _min_cost_to_final(f)
    if math.isinf(to_final[f.start]):
        return []

    cap = 8 * n + 64
    pops = [0] * f.num_states
    results: list[Path] = []
    tick = itertools.count()
    # heap entries: (estimate, olabels, ilabels, states, is_complete, tick, cost, arcs)
    heap = [(to_final[f.start], (), (), (f.start,), False, next(tick), 0.0, ())]
    while heap:
        est, olabs, ilabs, states, complete, _, cost, arcs = heapq.heappop(heap)
        if complete:
            results.append(f.path_labels(states, arcs))
            if len(results) >= n:
                break
            continue
        state = states[-1]
        if pops[state] >= cap:
            continue
        pops[state] += 1
        if state in f.finals:
            total = cost + f.finals[state]
            heapq.heappush(heap, (total, olabs, ilabs, states, True, next(tick), total, arcs))
        for arc in f.arcs[state]:
            if math.isinf(to_final[arc.dst]):
                continue
            g = cost + arc.cost
            heapq.heappush(
                heap,
                (
                    g + to_final[arc.dst],
                    olabs + (arc.olabel,),
                    ilabs + (arc.ilabel,),
                    states + (arc.dst,),
                    False,
                    next(tick),
                    g,
                    arcs + (arc,),
                ),
            )
    return results


def format_cost(cost: float) -> str:
    """Render a cost with 17 significant digits (lossless for doubles)."""
    return "%.17g" % cost


def save_symbols(table: SymbolTable, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sym_id, sym in enumerate(table):
            fh.write(f"{sym}\t{sym_id}\n")


def load_symbols(path: str) -> SymbolTable:
    """Read a symbol table: ``symbol<TAB>id`` lines, or bare symbols one
    per line (ids assigned in order)."""
    table = SymbolTable()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) == 1:
                table.add(fields[0])
                continue
            if len(fields) != 2:
                raise ParseError(f"expected 'symbol<TAB>id', got {line!r}", lineno)
            sym, sym_id = fields[0], int(fields[1])
            if sym_id == 0:
                if sym != EPSILON:
                    raise ParseError(f"id 0 must be {EPSILON}, got {sym!r}", lineno)
                continue
            got = table.add(sym)
            if got != sym_id:
                raise ParseError(f"non-contiguous symbol id {sym_id} for {sym!r}", lineno)
    return table


def serialize_fst(f: Wfst) -> str:
    """AT&T-style text: arc lines ``src dst isym osym cost`` (tab-separated),
    then final lines ``state cost``. The start state's arc block comes first
    so the loader can recover it from the first line."""
    if f.start < 0:
        raise CskitError("serialize: graph has no start state")
    if not f.arcs[f.start] and f.start not in f.finals:
        # the loader recovers the start from the first line, so a dead
        # start state (an empty-language graph) has no text form
        raise CskitError("serialize: empty-language graph has no text form")
    lines = []
    order = [f.start] + [s for s in range(f.num_states) if s != f.start]
    for src in order:
        for arc in f.arcs[src]:
            lines.append(
                f"{src}\t{arc.dst}\t{f.isyms.symbol_of(arc.ilabel)}\t"
                f"{f.osyms.symbol_of(arc.olabel)}\t{format_cost(arc.cost)}"
            )
    if f.start in f.finals and not f.arcs[f.start]:
        # no arc line names the start state, so its final line must lead
        lines.insert(0, f"{f.start}\t{format_cost(f.finals[f.start])}")
        rest = sorted(s for s in f.finals if s != f.start)
    else:
        rest = sorted(f.finals)
    for state in rest:
        lines.append(f"{state}\t{format_cost(f.finals[state])}")
    if not lines:
        raise CskitError("serialize: empty-language graph has no text form")
    return "".join(line + "\n" for line in lines)


def deserialize_fst(text: str, isyms: SymbolTable, osyms: SymbolTable) -> Wfst:
    f = Wfst(isyms, osyms)
    start: int | None = None
    max_state = -1
    arc_rows = []
    final_rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip():
            continue
        fields = raw.split("\t")
        if len(fields) == 5:
            src, dst = int(fields[0]), int(fields[1])
            arc_rows.append((src, dst, fields[2], fields[3], float(fields[4]), lineno))
            max_state = max(max_state, src, dst)
        elif len(fields) == 2:
            state = int(fields[0])
            final_rows.append((state, float(fields[1])))
            max_state = max(max_state, state)
        else:
            raise ParseError(f"expected an arc or final line, got {raw!r}", lineno)
        if start is None:
            start = int(fields[0])
    if start is None:
        raise ParseError("empty transducer text")
    for _ in range(max_state + 1):
        f.add_state()
    for src, dst, isym, osym, cost, lineno in arc_rows:
        try:
            f.add_arc(src, Arc(dst, isyms.id_of(isym), osyms.id_of(osym), cost))
        except CskitError as exc:
            raise ParseError(str(exc), lineno) from None
    for state, cost in final_rows:
        f.set_final(state, cost)
    f.set_start(start)
    return f


def save_fst(f: Wfst, path: str) -> None:
    """Write ``path`` plus ``path.isyms`` / ``path.osyms`` symbol tables."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_fst(f))
    save_symbols(f.isyms, path + ".isyms")
    save_symbols(f.osyms, path + ".osyms")


def load_fst(path: str) -> Wfst:
    isyms = load_symbols(path + ".isyms")
    osyms = load_symbols(path + ".osyms")
    if isyms == osyms:
        osyms = isyms
    with open(path, encoding="utf-8") as fh:
        return deserialize_fst(fh.read(), isyms, osyms)
