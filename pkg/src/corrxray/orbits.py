"""X-ray orbit graphs, their attractors and contraction diagnostics.

Exploration is a breadth-first closure of :func:`corrxray.biset.xray_step`
memoized on reduced words.  Node numbering depends only on the seed order:
seeds first, then new nodes in order of discovery level by level, each
level scanned in node order and each node's branches in connector order.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Optional, Sequence

import numpy as np

from .biset import ConnectorSet, WreathRecursion, xray_step
from .groups import Word, multiply, shortlex_key, word_str

WORKERS_ENV = "CORRXRAY_WORKERS"
PARALLEL_THRESHOLD = 4096


class BudgetExceeded(RuntimeError):
    """Exploration hit a node or depth limit; ``graph`` is the partial graph."""

    def __init__(self, message: str, graph: "OrbitGraph"):
        super().__init__(message)
        self.graph = graph


class GraphNotClosed(ValueError):
    pass


@dataclass
class OrbitGraph:
    """Transition graph with edges stored in CSR form.

    Successors of node ``i`` are ``dst[ptr[i]:ptr[i+1]]`` with labels
    ``label[ptr[i]:ptr[i+1]]``.  Nodes in ``frontier`` have not been
    expanded (their rows are empty); a graph is closed iff it has none.
    """

    nodes: list
    ptr: np.ndarray
    dst: np.ndarray
    label: np.ndarray
    depth: np.ndarray
    n_seeds: int
    frontier: tuple = ()
    index: dict = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.index is None:
            self.index = {w: i for i, w in enumerate(self.nodes)}

    @property
    def closed(self) -> bool:
        return not self.frontier

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return int(self.ptr[-1])

    def successors(self, i: int) -> np.ndarray:
        return self.dst[self.ptr[i]:self.ptr[i + 1]]

    def edges(self, i: int) -> list:
        a, b = self.ptr[i], self.ptr[i + 1]
        return list(zip(self.label[a:b].tolist(), self.dst[a:b].tolist()))


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


_STEP: Optional[Callable] = None


def _init_worker(step: Callable) -> None:
    global _STEP
    _STEP = step


def _expand_chunk(words: list) -> list:
    return [_STEP(w) for w in words]


class XrayStep:
    """Picklable ``g -> [(g', connector id), ...]``."""

    def __init__(self, X: ConnectorSet, rec: WreathRecursion):
        self.X = X
        self.rec = rec

    def __call__(self, g: Word) -> list:
        return xray_step(g, self.X, self.rec)


def explore_relation(seeds: Iterable[Hashable], step: Callable, *, max_nodes: int = 1_000_000,
                     max_depth: Optional[int] = None, workers: Optional[int] = None,
                     chunk: int = 2048) -> OrbitGraph:
    """Breadth-first closure of a multivalued map given as ``step(node) ->
    [(node', label), ...]``.

    Nodes must be hashable; ``step`` must be picklable when ``workers > 1``.
    Raises :class:`BudgetExceeded` with the partial graph when a limit is hit.
    """
    workers = _default_workers() if workers is None else max(1, int(workers))
    nodes, index, depth = [], {}, []
    for s in seeds:
        if s not in index:
            index[s] = len(nodes)
            nodes.append(s)
            depth.append(0)
    n_seeds = len(nodes)
    rows: list = []  # rows[i] = list of (label, dst), filled level by level
    level = list(range(n_seeds))
    d = 0
    pool = None

    def finish(frontier) -> OrbitGraph:
        n = len(nodes)
        ptr = np.zeros(n + 1, dtype=np.int64)
        lens = [len(r) for r in rows] + [0] * (n - len(rows))
        ptr[1:] = np.cumsum(lens)
        dst = np.empty(int(ptr[-1]), dtype=np.int64)
        lab = np.empty(int(ptr[-1]), dtype=np.int64)
        k = 0
        for r in rows:
            for lb, j in r:
                lab[k] = lb
                dst[k] = j
                k += 1
        return OrbitGraph(nodes, ptr, dst, lab, np.array(depth, dtype=np.int64), n_seeds,
                          tuple(frontier), index)

    try:
        if len(nodes) > max_nodes:
            raise BudgetExceeded(f"{len(nodes)} seeds exceed the node budget {max_nodes}",
                                 finish(range(len(nodes))))
        while level:
            if max_depth is not None and d >= max_depth:
                raise BudgetExceeded(f"depth limit {max_depth} reached with {len(level)} open nodes",
                                     finish(level))
            words = [nodes[i] for i in level]
            if workers > 1 and len(words) >= PARALLEL_THRESHOLD:
                if pool is None:
                    pool = ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(step,))
                parts = [words[k:k + chunk] for k in range(0, len(words), chunk)]
                results = [r for part in pool.map(_expand_chunk, parts) for r in part]
            else:
                results = [step(w) for w in words]
            nxt = []
            for pos, (i, res) in enumerate(zip(level, results)):
                row = []
                for w2, lb in res:
                    j = index.get(w2)
                    if j is None:
                        j = len(nodes)
                        index[w2] = j
                        nodes.append(w2)
                        depth.append(d + 1)
                        nxt.append(j)
                    row.append((lb, j))
                if not row:
                    raise ValueError(f"node {i} has no outgoing edge")
                rows.append(row)  # levels are scanned in id order
                if len(nodes) > max_nodes:
                    raise BudgetExceeded(f"node budget {max_nodes} exceeded",
                                         finish(level[pos + 1:] + nxt))
            level = nxt
            d += 1
    finally:
        if pool is not None:
            pool.shutdown()
    return finish(())


def explore(seeds: Iterable[Word], X: ConnectorSet, rec: WreathRecursion, *,
            max_nodes: int = 1_000_000, max_depth: Optional[int] = None,
            workers: Optional[int] = None) -> OrbitGraph:
    """Closure of the X-ray relation from ``seeds``."""
    return explore_relation((tuple(s) for s in seeds), XrayStep(X, rec), max_nodes=max_nodes,
                            max_depth=max_depth, workers=workers)


# --------------------------------------------------------------------------
# strongly connected components
# --------------------------------------------------------------------------


def tarjan(ptr: np.ndarray, dst: np.ndarray) -> tuple:
    """Iterative Tarjan.  Returns ``(comp, n_comp)``; components are
    numbered in reverse topological order (sinks first)."""
    n = len(ptr) - 1
    ptr_l = ptr.tolist()
    dst_l = dst.tolist()
    idx = [-1] * n
    low = [0] * n
    on = [False] * n
    comp = [-1] * n
    stack: list = []
    counter = 0
    nc = 0
    for root in range(n):
        if idx[root] != -1:
            continue
        work = [(root, ptr_l[root])]
        idx[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on[root] = True
        while work:
            v, e = work[-1]
            if e < ptr_l[v + 1]:
                work[-1] = (v, e + 1)
                w = dst_l[e]
                if idx[w] == -1:
                    idx[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on[w] = True
                    work.append((w, ptr_l[w]))
                elif on[w] and idx[w] < low[v]:
                    low[v] = idx[w]
            else:
                work.pop()
                if work:
                    u = work[-1][0]
                    if low[v] < low[u]:
                        low[u] = low[v]
                if low[v] == idx[v]:
                    while True:
                        w = stack.pop()
                        on[w] = False
                        comp[w] = nc
                        if w == v:
                            break
                    nc += 1
    return np.array(comp, dtype=np.int64), nc


@dataclass
class AttractorReport:
    members: np.ndarray  # sorted node ids
    words: list  # attractor nodes, shortlex-sorted
    forward_closed: bool
    entry_bound: int  # longest path from any node to its first attractor node
    entry: np.ndarray  # per-node longest path to the attractor
    n_components: int


def _cyclic_mask(g: OrbitGraph, comp: np.ndarray, nc: int) -> np.ndarray:
    sizes = np.bincount(comp, minlength=nc)
    cyc = sizes > 1
    src = np.repeat(np.arange(len(g)), np.diff(g.ptr))
    loops = src[g.dst == src]
    cyc[comp[loops]] = True
    return cyc[comp]


def attractor(g: OrbitGraph, key: Callable = None) -> AttractorReport:
    """Union of the strongly connected components that carry a cycle."""
    if not g.closed:
        raise GraphNotClosed(f"graph has {len(g.frontier)} unexpanded nodes")
    comp, nc = tarjan(g.ptr, g.dst)
    in_a = _cyclic_mask(g, comp, nc)
    members = np.nonzero(in_a)[0]
    src = np.repeat(np.arange(len(g)), np.diff(g.ptr))
    closed = bool(np.all(in_a[g.dst[in_a[src]]]))
    # components come sinks first, so successors are settled before a node
    order = np.argsort(comp, kind="stable")
    entry = np.zeros(len(g), dtype=np.int64)
    ptr, dst = g.ptr, g.dst
    for v in order.tolist():
        if in_a[v]:
            continue
        succ = dst[ptr[v]:ptr[v + 1]]
        entry[v] = 1 + int(entry[succ].max())

    kf = key or shortlex_key
    words = sorted((g.nodes[i] for i in members.tolist()), key=kf)
    return AttractorReport(members, words, closed, int(entry.max()) if len(g) else 0, entry, nc)


# --------------------------------------------------------------------------
# norms and contraction
# --------------------------------------------------------------------------


def successor_reduce(g: OrbitGraph, values: np.ndarray) -> np.ndarray:
    """Per node, the maximum of ``values`` over its successors."""
    return np.maximum.reduceat(values[g.dst], g.ptr[:-1]) if g.n_edges else values.copy()


@dataclass
class ContractionReport:
    xi: float
    N: int
    epsilon: float
    kappa: float
    radius: float  # kappa + N xi
    envelope_ok: bool
    envelope_violations: int
    horizon: int
    tail_max_norm: float
    rays: list  # per-ray norm sequences
    candidates: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "xi": self.xi,
            "N": self.N,
            "epsilon": self.epsilon,
            "kappa": self.kappa,
            "radius": self.radius,
            "envelope_ok": self.envelope_ok,
            "envelope_violations": self.envelope_violations,
            "horizon": self.horizon,
            "tail_max_norm": self.tail_max_norm,
            "rays": self.rays,
        }


def node_norms(g: OrbitGraph, basepoint: complex = 1j) -> np.ndarray:
    from .hyperbolic import norm

    return np.array([norm(w, basepoint) for w in g.nodes], dtype=float)


def drop_profile(g: OrbitGraph, norms: np.ndarray, N: int) -> np.ndarray:
    """Per node, the largest over all rays of ``min_{1<=n<=N} |g^(n)|``."""
    M = successor_reduce(g, norms)
    for _ in range(N - 1):
        M = successor_reduce(g, np.minimum(norms, M))
    return M


def fit_kappa(g: OrbitGraph, norms: np.ndarray, N: int, eps: float) -> float:
    """Least ``kappa`` such that every node of norm above it drops by
    ``eps`` within ``N`` steps along every ray."""
    fail = drop_profile(g, norms, N) > norms - eps
    return float(norms[fail].max()) if np.any(fail) else 0.0


def check_envelope(g: OrbitGraph, norms: np.ndarray, starts: np.ndarray, N: int, eps: float,
                   kappa: float, xi: float, rep: AttractorReport) -> tuple:
    """Verify ``|g^(n)| <= max(|g| - eps floor(n/N), kappa) + N xi`` for every
    ray from every node in ``starts`` and every ``n``.

    Worst-case norms at step ``n`` over all rays are propagated exactly up
    to a horizon past which the right side is constant and every ray has
    entered the forward closure of the attractor; beyond it the largest
    norm on that closure is compared with ``kappa + N xi``.
    Returns ``(ok, violations, horizon, tail_max)``.
    """
    base = norms[starts]
    top = float(base.max()) if len(base) else 0.0
    flat = N * (int(math.ceil(max(top - kappa, 0.0) / eps)) + 1) if eps > 0 else 0
    horizon = max(flat, rep.entry_bound + 1)
    W = norms.copy()
    viol = np.zeros(len(starts), dtype=bool)
    for n in range(horizon + 1):
        bound = np.maximum(base - eps * (n // N), kappa) + N * xi
        viol |= W[starts] > bound + 1e-9
        W = successor_reduce(g, W)
    # forward closure of the attractor
    reach = np.zeros(len(g), dtype=bool)
    reach[rep.members] = True
    todo = list(rep.members.tolist())
    while todo:
        v = todo.pop()
        for w in g.successors(v).tolist():
            if not reach[w]:
                reach[w] = True
                todo.append(w)
    tail = float(norms[reach].max()) if reach.any() else 0.0
    ok_tail = tail <= kappa + N * xi + 1e-9
    nv = int(viol.sum())
    return nv == 0 and ok_tail, nv + (0 if ok_tail else 1), horizon, tail


def first_branch_ray(g: OrbitGraph, start: int, length: int) -> list:
    out = [start]
    v = start
    for _ in range(length):
        v = int(g.dst[g.ptr[v]])
        out.append(v)
    return out


def check_contraction(g: OrbitGraph, norms: np.ndarray, rep: AttractorReport, *,
                      starts: Optional[np.ndarray] = None, N_max: int = 12,
                      eps_grid: Sequence[float] = (0.05, 0.1, 0.25, 0.5, 1.0),
                      n_rays: int = 8) -> ContractionReport:
    """Fit the contraction constants on a closed graph and verify the
    envelope over all rays from ``starts`` (default: the seeds).

    ``xi`` is the largest observed increment (at least 0); ``(N, eps)`` are
    chosen on a grid to minimize ``kappa + N xi``, ties broken towards
    smaller ``N`` and larger ``eps``.
    """
    if starts is None:
        starts = np.arange(g.n_seeds)
    src = np.repeat(np.arange(len(g)), np.diff(g.ptr))
    inc = norms[g.dst] - norms[src]
    xi = max(0.0, float(inc.max())) if len(inc) else 0.0
    best = None
    cands = []
    for N in range(1, N_max + 1):
        for eps in eps_grid:
            kappa = fit_kappa(g, norms, N, eps)
            r = kappa + N * xi
            cands.append({"N": N, "epsilon": eps, "kappa": kappa, "radius": r})
            key = (round(r, 12), N, -eps)
            if best is None or key < best[0]:
                best = (key, N, eps, kappa)
    _, N, eps, kappa = best
    ok, nv, horizon, tail = check_envelope(g, norms, starts, N, eps, kappa, xi, rep)
    # traces of the longest-entry rays among the starts
    ent = rep.entry[starts]
    pick = starts[np.lexsort((starts, -ent))][:n_rays] if len(starts) else []
    rays = []
    for s in list(pick):
        ray = first_branch_ray(g, int(s), int(rep.entry[s]) + 2)
        rays.append({
            "start": word_str(g.nodes[int(s)]),
            "words": [word_str(g.nodes[v]) for v in ray],
            "norms": [float(norms[v]) for v in ray],
        })
    return ContractionReport(xi, N, eps, kappa, kappa + N * xi, ok, nv, horizon, tail, rays, cands)


# --------------------------------------------------------------------------
# export
# --------------------------------------------------------------------------


def _label(w) -> str:
    if isinstance(w, tuple) and all(isinstance(x, int) for x in w):
        return word_str(w) or "e"
    return str(w)


def graph_to_json(g: OrbitGraph, rep: Optional[AttractorReport] = None, label: Callable = _label) -> dict:
    out = {
        "nodes": [label(w) for w in g.nodes],
        "n_seeds": g.n_seeds,
        "closed": g.closed,
        "edges": [[i, int(g.label[k]), int(g.dst[k])] for i in range(len(g))
                  for k in range(int(g.ptr[i]), int(g.ptr[i + 1]))],
    }
    if rep is not None:
        out["attractor"] = [label(w) for w in rep.words]
        out["forward_closed"] = rep.forward_closed
        out["entry_bound"] = rep.entry_bound
    return out


def graph_to_dot(g: OrbitGraph, rep: Optional[AttractorReport] = None, label: Callable = _label,
                 only_attractor: bool = False) -> str:
    """DOT text; attractor nodes are drawn doubled."""
    members = set(rep.members.tolist()) if rep is not None else set()
    keep = sorted(members) if only_attractor else range(len(g))
    keep_set = set(keep)
    lines = ["digraph xray {"]
    for i in keep:
        shape = ' shape="doublecircle"' if i in members else ""
        lines.append(f'  n{i} [label={json.dumps(label(g.nodes[i]))}{shape}];')
    for i in keep:
        for lb, j in g.edges(i):
            if j in keep_set:
                lines.append(f'  n{i} -> n{j} [label="{lb}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def dumps(data) -> str:
    """Canonical JSON text used for every artifact."""
    return json.dumps(data, indent=1, ensure_ascii=True) + "\n"


def translate_attractor(rep: AttractorReport, h: Word) -> set:
    return {multiply(h, w) for w in rep.words}
