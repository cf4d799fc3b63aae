"""Flat seminorm by exact filling optimization.

F_W(A) = min over fillings Q spanned by the next-dimension cells of
M_W(A - boundary(Q)) + M_W(Q). A chain of dimension d is filled by the
(d+1)-cells of its complex, so m-chains use the designated fill cells
and (m-1)-chains (boundaries) use the m-cells themselves.

Solvers, chosen per connected component of the fill incidence graph:
exhaustive enumeration for small components, an exact frontier dynamic
program over open-cell states (reported as branch_and_bound), a planar
min-cut reduction for mod-2 cycles in the plane, and a best-effort
depth-first search when the node budget runs out (exact=False).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .chains import IntChain, Mod2Chain, transfer, _chain_items
from .complexes import common_refinement
from .errors import InvalidInput
from .geometry import WINDOW_ALL, Window, clipped_measure

__all__ = ["SolverBudget", "FlatNormCert", "flat_seminorm", "flat_dist", "embed_chain"]


@dataclass(frozen=True)
class SolverBudget:
    max_nodes: int = 10**6
    max_coeff: int = 4
    exhaustive_limit: int = 20
    method: str | None = None  # force: exhaustive | branch_and_bound | planar_mincut


DEFAULT_BUDGET = SolverBudget()

_METHOD_RANK = {"exhaustive": 0, "planar_mincut": 1, "branch_and_bound": 2, "dfs": 3}


@dataclass(frozen=True)
class FlatNormCert:
    value: float
    residual_mass: float
    fill_mass: float
    filling: tuple  # ((fill cell index, coefficient), ...)
    method: str
    exact: bool


def _zero_cert() -> FlatNormCert:
    return FlatNormCert(0.0, 0.0, 0.0, (), "exhaustive", True)


# ---------------------------------------------------------------------------
# problem assembly


class _Problem:
    def __init__(self, cc, dim, a, mode, window, budget):
        self.cc = cc
        self.dim = dim
        self.a = a  # dict cell -> coeff (mod2: 1)
        self.mode = mode
        self.window = window
        self.budget = budget
        fd = dim + 1
        self.n_fills = cc.n_cells(fd) if fd in cc.cells else 0
        self.inc = [list(cc.faces_of(fd, j)) for j in range(self.n_fills)]
        self.cell_inc: dict[int, list] = {}
        for j, faces in enumerate(self.inc):
            for c, sg in faces:
                self.cell_inc.setdefault(c, []).append((j, sg))
        self._cw: dict[int, float] = {}
        self._fw: dict[int, float] = {}

    def cell_w(self, c: int) -> float:
        w = self._cw.get(c)
        if w is None:
            w = clipped_measure(self.cc.cell_positions(self.dim, c), self.window)
            self._cw[c] = w
        return w

    def fill_w(self, j: int) -> float:
        w = self._fw.get(j)
        if w is None:
            w = clipped_measure(self.cc.cell_positions(self.dim + 1, j), self.window)
            self._fw[j] = w
        return w

    def evaluate(self, assign: dict[int, int]):
        """Residual and fill mass for a full assignment, in a fixed order."""
        cells = sorted(set(self.a) | set(self.cell_inc))
        res_terms = []
        for c in cells:
            s = 0
            for j, sg in self.cell_inc.get(c, ()):
                q = assign.get(j, 0)
                s += q if self.mode == "mod2" else sg * q
            ac = self.a.get(c, 0)
            r = (ac + s) % 2 if self.mode == "mod2" else ac - s
            if r:
                res_terms.append(abs(r) * self.cell_w(c))
        fill_terms = [
            abs(q) * self.fill_w(j) for j, q in sorted(assign.items()) if q
        ]
        residual = math.fsum(res_terms)
        fill = math.fsum(fill_terms)
        return residual, fill


def _components(prob: _Problem):
    """Connected components of fills sharing a cell, as sorted fill lists."""
    parent = list(range(prob.n_fills))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for fills in prob.cell_inc.values():
        base = fills[0][0]
        for j, _ in fills[1:]:
            ra, rb = find(base), find(j)
            if ra != rb:
                parent[rb] = ra
    groups: dict[int, list[int]] = {}
    for j in range(prob.n_fills):
        groups.setdefault(find(j), []).append(j)
    return [sorted(g) for _, g in sorted(groups.items())]


class _Comp:
    """One component in local indexing."""

    def __init__(self, prob: _Problem, fills: list[int]):
        self.prob = prob
        self.fills = fills
        cell_set: set[int] = set()
        for j in fills:
            cell_set.update(c for c, _ in prob.inc[j])
        self.cells = sorted(cell_set)
        cpos = {c: i for i, c in enumerate(self.cells)}
        fpos = {j: i for i, j in enumerate(fills)}
        self.inc = [
            [(cpos[c], sg) for c, sg in prob.inc[j]] for j in fills
        ]
        self.a = [prob.a.get(c, 0) for c in self.cells]
        self.cw = [prob.cell_w(c) for c in self.cells]
        self.fw = [prob.fill_w(j) for j in fills]
        self.cell_fills = [[] for _ in self.cells]
        for lj, faces in enumerate(self.inc):
            for lc, sg in faces:
                self.cell_fills[lc].append((lj, sg))
        self._fpos = fpos

    def order_bfs(self):
        """Process order over local fills keeping the frontier narrow."""
        k = len(self.fills)
        adj = [set() for _ in range(k)]
        for lc in range(len(self.cells)):
            touch = [lj for lj, _ in self.cell_fills[lc]]
            for x in touch:
                for y in touch:
                    if x != y:
                        adj[x].add(y)
        deg = [len(s) for s in adj]
        start = min(range(k), key=lambda j: (deg[j], j))
        order, seen = [], [False] * k
        queue = [start]
        seen[start] = True
        while queue:
            j = queue.pop(0)
            order.append(j)
            for nb in sorted(adj[j]):
                if not seen[nb]:
                    seen[nb] = True
                    queue.append(nb)
        for j in range(k):  # disconnected within component cannot happen, but be safe
            if not seen[j]:
                order.append(j)
        return order


# ---------------------------------------------------------------------------
# component solvers: each returns (assignment: list of q per local fill,
# complete: bool, nodes used)


def _comp_exhaustive_mod2(comp: _Comp):
    k = len(comp.fills)
    parity = [a % 2 for a in comp.a]
    res = math.fsum(w for p, w in zip(parity, comp.cw) if p)
    fill = 0.0
    cur = 0
    best_val = res + fill
    best = 0
    val = best_val
    for i in range(1, 1 << k):
        bit = (i & -i).bit_length() - 1
        was = (cur >> bit) & 1
        cur ^= 1 << bit
        val += -comp.fw[bit] if was else comp.fw[bit]
        for lc, _ in comp.inc[bit]:
            if parity[lc]:
                val -= comp.cw[lc]
                parity[lc] = 0
            else:
                val += comp.cw[lc]
                parity[lc] = 1
        if val < best_val:
            best_val = val
            best = cur
    return [(best >> j) & 1 for j in range(k)], True, 1 << k


def _comp_exhaustive_int(comp: _Comp, K: int):
    import itertools

    k = len(comp.fills)
    best, best_val = None, None
    for q in itertools.product(range(-K, K + 1), repeat=k):
        sums = [0] * len(comp.cells)
        for lj, qq in enumerate(q):
            if qq:
                for lc, sg in comp.inc[lj]:
                    sums[lc] += sg * qq
        val = math.fsum(
            abs(a - s) * w for a, s, w in zip(comp.a, sums, comp.cw)
        ) + math.fsum(abs(qq) * w for qq, w in zip(q, comp.fw))
        if best_val is None or val < best_val:
            best_val, best = val, list(q)
    return best, True, (2 * K + 1) ** k


def _comp_dp(comp: _Comp, K: int, max_nodes: int, mode: str):
    """Exact frontier DP: process fills in a narrow order, keeping partial
    sums only for cells still touched by undecided fills.

    States are tuples of partial sums aligned to a fixed open-cell layout
    per step, so transitions never sort or rebuild keyed dicts.
    """
    order = comp.order_bfs()
    k = len(order)
    last = {}
    for pos, lj in enumerate(order):
        for lc, _ in comp.inc[lj]:
            last[lc] = pos
    domain = (0, 1) if mode == "mod2" else tuple(range(-K, K + 1))
    # per-step layout: which cells the state tuple tracks, where this
    # fill's faces sit in it, and which slots close after the step
    steps = []
    open_list: list[int] = []
    for pos in range(k):
        lj = order[pos]
        faces = comp.inc[lj]
        cur = list(open_list)
        for lc, _ in sorted(faces):
            if lc not in cur:
                cur.append(lc)
        n_new = len(cur) - len(open_list)
        face_slots = [(cur.index(lc), sg) for lc, sg in faces]
        closing = sorted(
            ((i, cur[i]) for i in range(len(cur)) if last[cur[i]] == pos),
            reverse=True,
        )
        steps.append((lj, n_new, face_slots, closing))
        open_list = [lc for lc in cur if last[lc] > pos]
    layer = {(): (0.0, None, None)}
    trace = []
    nodes = 0
    for pos in range(k):
        lj, n_new, face_slots, closing = steps[pos]
        fw = comp.fw[lj]
        nxt: dict[tuple, tuple] = {}
        for state, (cost, _, _) in layer.items():
            base = list(state) + [0] * n_new
            for q in domain:
                nodes += 1
                if nodes > max_nodes:
                    return None, False, nodes
                new_cost = cost + abs(q) * fw
                ns = list(base)
                if q:
                    for slot, sg in face_slots:
                        if mode == "mod2":
                            ns[slot] = (ns[slot] + q) % 2
                        else:
                            ns[slot] += sg * q
                for slot, lc in closing:
                    s = ns.pop(slot)
                    a = comp.a[lc]
                    r = (a + s) % 2 if mode == "mod2" else a - s
                    if r:
                        new_cost += abs(r) * comp.cw[lc]
                key = tuple(ns)
                old = nxt.get(key)
                if old is None or new_cost < old[0]:
                    nxt[key] = (new_cost, state, q)
        trace.append(layer)
        layer = nxt
    assert list(layer.keys()) == [()]
    # walk backpointers
    assign = [0] * len(comp.fills)
    state = ()
    for pos in range(k - 1, -1, -1):
        cost, prev, q = layer[state]
        assign[order[pos]] = q
        layer = trace[pos]
        state = prev
    return assign, True, nodes


def _comp_dfs(comp: _Comp, K: int, max_nodes: int, mode: str):
    """Best-effort depth-first search under a node budget."""
    order = comp.order_bfs()
    k = len(order)
    last = {}
    for pos, lj in enumerate(order):
        for lc, _ in comp.inc[lj]:
            last[lc] = pos
    if mode == "mod2":
        domain = (0, 1)
    else:
        domain = tuple(sorted(range(-K, K + 1), key=abs))
    best = [0] * len(comp.fills)
    sums0 = [0] * len(comp.cells)
    best_val = math.fsum(
        abs((a % 2) if mode == "mod2" else a) * w for a, w in zip(comp.a, comp.cw)
    )
    nodes = 0
    exhausted = False
    assign = [0] * len(comp.fills)
    sums = sums0[:]

    def rec(pos, cost):
        nonlocal nodes, best_val, best, exhausted
        if exhausted:
            return
        if cost >= best_val:
            return
        if pos == k:
            best_val = cost
            best = assign[:]
            return
        lj = order[pos]
        for q in domain:
            nodes += 1
            if nodes > max_nodes:
                exhausted = True
                return
            c2 = cost + abs(q) * comp.fw[lj]
            touched = []
            for lc, sg in comp.inc[lj]:
                touched.append((lc, sums[lc]))
                sums[lc] = (sums[lc] + q) % 2 if mode == "mod2" else sums[lc] + sg * q
            for lc, _ in comp.inc[lj]:
                if last[lc] == pos:
                    a = comp.a[lc]
                    r = (a + sums[lc]) % 2 if mode == "mod2" else a - sums[lc]
                    if r:
                        c2 += abs(r) * comp.cw[lc]
            assign[lj] = q
            rec(pos + 1, c2)
            assign[lj] = 0
            for lc, old in reversed(touched):
                sums[lc] = old
    rec(0, 0.0)
    return best, not exhausted, nodes


def _comp_mincut(comp: _Comp):
    """Planar mod-2 fast path. Returns an assignment or None when the
    component chain is not a relative boundary of the fills."""
    for lc in range(len(comp.cells)):
        if len(comp.cell_fills[lc]) > 2:
            return None
    k = len(comp.fills)
    OUTER = k
    # parity labels via BFS: crossing a cell flips the label iff a_c is odd
    r = [None] * (k + 1)
    r[OUTER] = 0
    adjacency = [[] for _ in range(k + 1)]
    for lc in range(len(comp.cells)):
        touch = [lj for lj, _ in comp.cell_fills[lc]]
        a = comp.a[lc] % 2
        if len(touch) == 1:
            adjacency[touch[0]].append((OUTER, a, lc))
            adjacency[OUTER].append((touch[0], a, lc))
        else:
            adjacency[touch[0]].append((touch[1], a, lc))
            adjacency[touch[1]].append((touch[0], a, lc))
    queue = [OUTER]
    while queue:
        u = queue.pop(0)
        for v, a, _ in adjacency[u]:
            want = r[u] ^ a
            if r[v] is None:
                r[v] = want
                queue.append(v)
            elif r[v] != want:
                return None
    if any(x is None for x in r[:k]):
        # isolated fill subgraph never touching a cell: cannot happen, but
        # label it 0 so the reduction stays sound
        r = [0 if x is None else x for x in r]

    import networkx as nx

    g = nx.DiGraph()
    inf = float("inf")

    def add(u, v, cap):
        if g.has_edge(u, v):
            g[u][v]["capacity"] += cap
        else:
            g.add_edge(u, v, capacity=cap)

    for lj in range(k):
        if r[lj] == 1:
            add("s", ("f", lj), comp.fw[lj])  # cost of y=0 (q = r = 1)
        else:
            add(("f", lj), "t", comp.fw[lj])  # cost of y=1
    add(("f", OUTER), "t", inf)
    for lc in range(len(comp.cells)):
        touch = [lj for lj, _ in comp.cell_fills[lc]]
        u = ("f", touch[0])
        v = ("f", touch[1]) if len(touch) == 2 else ("f", OUTER)
        w = comp.cw[lc]
        add(u, v, w)
        add(v, u, w)
    if "s" not in g:
        g.add_node("s")
    if "t" not in g:
        g.add_node("t")
    _, (src_side, _) = nx.minimum_cut(g, "s", "t")
    assign = []
    for lj in range(k):
        y = 1 if ("f", lj) in src_side else 0
        assign.append(y ^ r[lj])
    return assign


# ---------------------------------------------------------------------------
# top-level solve


def _solve(prob: _Problem) -> FlatNormCert:
    b = prob.budget
    assign: dict[int, int] = {}
    methods = []
    complete = True
    if prob.n_fills:
        for fills in _components(prob):
            comp = _Comp(prob, fills)
            k = len(fills)
            forced = b.method
            planar_ok = (
                prob.mode == "mod2"
                and prob.dim == 1
                and prob.cc.ambient_dim == 2
            )
            if forced == "exhaustive":
                if prob.mode == "mod2":
                    if k > b.exhaustive_limit:
                        raise InvalidInput("component too large for exhaustive search")
                    q, ok, _ = _comp_exhaustive_mod2(comp)
                else:
                    q, ok, _ = _comp_exhaustive_int(comp, b.max_coeff)
                m = "exhaustive"
            elif forced == "planar_mincut":
                if not planar_ok:
                    raise InvalidInput("planar min-cut needs a planar mod-2 1-chain")
                q = _comp_mincut(comp)
                if q is None:
                    raise InvalidInput(
                        "chain is not a relative boundary of the fill cells"
                    )
                ok, m = True, "planar_mincut"
            elif forced == "branch_and_bound":
                q, ok, _ = _comp_dp(comp, b.max_coeff, b.max_nodes, prob.mode)
                m = "branch_and_bound"
                if q is None:
                    q, ok, _ = _comp_dfs(comp, b.max_coeff, b.max_nodes, prob.mode)
                    m = "dfs"
            else:
                q = None
                m = None
                if prob.mode == "mod2" and k <= b.exhaustive_limit:
                    q, ok, _ = _comp_exhaustive_mod2(comp)
                    m = "exhaustive"
                elif prob.mode == "int" and (2 * b.max_coeff + 1) ** k <= 4096:
                    q, ok, _ = _comp_exhaustive_int(comp, b.max_coeff)
                    m = "exhaustive"
                else:
                    if planar_ok:
                        q = _comp_mincut(comp)
                        if q is not None:
                            ok, m = True, "planar_mincut"
                    if q is None:
                        q, ok, _ = _comp_dp(comp, b.max_coeff, b.max_nodes, prob.mode)
                        m = "branch_and_bound"
                        if q is None:
                            q, ok, _ = _comp_dfs(
                                comp, b.max_coeff, b.max_nodes, prob.mode
                            )
                            m = "dfs"
            complete = complete and ok
            methods.append(m)
            for lj, j in enumerate(fills):
                if q[lj]:
                    assign[j] = q[lj]
    residual, fill = prob.evaluate(assign)
    method = (
        max(methods, key=lambda m: _METHOD_RANK[m]) if methods else "exhaustive"
    )
    if method == "dfs":
        method = "branch_and_bound"
    exact = complete
    if prob.mode == "int" and any(abs(q) >= prob.budget.max_coeff for q in assign.values()):
        exact = False  # the coefficient cap binds; a larger filling might win
    filling = tuple(sorted(assign.items()))
    return FlatNormCert(residual + fill, residual, fill, filling, method, exact)


# ---------------------------------------------------------------------------
# public entry points


def _coeff_dict(chain) -> dict[int, int]:
    return {c: v for c, v in _chain_items(chain)}


def embed_chain(chain, target):
    """Express a chain on another complex containing the same geometry.

    Cells are matched by vertex positions; orientation carries over for
    integer coefficients. Falls back to a common refinement (which keeps
    the target's fill cells when they survive) if keys do not match.
    """
    if chain.complex is None:
        if isinstance(chain, Mod2Chain):
            return Mod2Chain(target, chain.dim, frozenset())
        return IntChain(target, chain.dim, ())
    if chain.complex is target:
        return chain
    d = chain.dim
    key_of = {
        target.geometric_key(d, i): i for i in range(target.n_cells(d))
    }
    items = _chain_items(chain)
    found = {}
    ok = True
    for c, v in items:
        k = chain.complex.geometric_key(d, c)
        t = key_of.get(k)
        if t is None:
            ok = False
            break
        found[c] = t
    if ok:
        if isinstance(chain, Mod2Chain):
            return Mod2Chain(target, d, frozenset(found[c] for c, _ in items))
        from .chains import _orient_sign

        out = []
        for c, v in items:
            sg = _orient_sign(
                chain.complex.cell_positions(d, c),
                target.cell_positions(d, found[c]),
            )
            out.append((found[c], v * sg))
        return IntChain(target, d, tuple(sorted(out)))
    merged, ra, rb = common_refinement(chain.complex, target)
    return transfer(chain, ra)


def flat_seminorm(
    chain,
    window: Window = WINDOW_ALL,
    budget: SolverBudget | None = None,
    fill_complex=None,
) -> FlatNormCert:
    """Certified flat seminorm of a chain relative to its fill cells."""
    budget = budget or DEFAULT_BUDGET
    if fill_complex is not None:
        chain = embed_chain(chain, fill_complex)
    if chain.complex is None or not _chain_items(chain):
        return _zero_cert()
    mode = "mod2" if isinstance(chain, Mod2Chain) else "int"
    prob = _Problem(
        chain.complex, chain.dim, _coeff_dict(chain), mode, window, budget
    )
    return _solve(prob)


def flat_dist(
    a,
    b,
    window: Window = WINDOW_ALL,
    budget: SolverBudget | None = None,
    fill_complex=None,
) -> FlatNormCert:
    """Certified flat distance F_W(a - b)."""
    if a.is_zero and b.is_zero:
        return _zero_cert()
    if not a.is_zero and not b.is_zero and type(a) is not type(b):
        raise InvalidInput("flat distance needs matching coefficient rings")
    if a.is_zero:
        return flat_seminorm(b, window, budget, fill_complex)
    if b.is_zero:
        return flat_seminorm(a, window, budget, fill_complex)
    if a.dim != b.dim:
        raise InvalidInput("flat distance needs chains of equal dimension")
    if a.complex is not b.complex:
        if fill_complex is not None:
            a = embed_chain(a, fill_complex)
            b = embed_chain(b, fill_complex)
        else:
            merged, ra, rb = common_refinement(a.complex, b.complex)
            a, b = transfer(a, ra), transfer(b, rb)
    if a.complex is not b.complex:
        # embed_chain may have taken the refinement fallback for one side
        merged, ra, rb = common_refinement(a.complex, b.complex)
        a, b = transfer(a, ra), transfer(b, rb)
    if isinstance(a, Mod2Chain):
        diff = Mod2Chain(a.complex, a.dim, a.cells ^ b.cells)
    else:
        acc = dict(a.coeffs)
        for c, v in b.coeffs:
            acc[c] = acc.get(c, 0) - v
        diff = IntChain(a.complex, a.dim, tuple(sorted((c, v) for c, v in acc.items() if v)))
    return flat_seminorm(diff, window, budget)
