"""Communication graphs: random geometric graphs, shortcut-augmented RGGs,
2-d lattices and complete graphs.

Graphs are immutable CSR adjacency structures, safe to share read-only across
simulation workers. Spatial graphs carry node positions and the box side L;
shortcut-augmented graphs record their added long-range edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PERIODIC = "periodic"
FREE = "free"


class TopologyError(RuntimeError):
    """Graph construction cannot satisfy the request (e.g. no room for shortcuts)."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph in CSR form.

    ``indices[indptr[u]:indptr[u+1]]`` is the sorted neighbor list of node u.
    ``positions`` (shape (n, 2)) and ``box_length`` are present iff the graph
    was spatially generated; ``shortcut_edges`` lists added long-range links.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    positions: np.ndarray | None = None
    box_length: float | None = None
    boundary: str | None = None
    shortcut_edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)
        if self.positions is not None:
            self.positions.setflags(write=False)

    @property
    def edge_count(self) -> int:
        return self.indices.size // 2

    def degree(self, u: int) -> int:
        return int(self.indptr[u + 1] - self.indptr[u])

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        i = np.searchsorted(row, v)
        return bool(i < row.size and row[i] == v)

    @property
    def is_spatial(self) -> bool:
        return self.positions is not None


@dataclass(frozen=True)
class RggConfig:
    """Random geometric graph parameters.

    Exactly one of ``radius`` / ``target_avg_degree`` must be given; with a
    target degree the radius is derived from kbar = rho * pi * R^2 using
    rho = n / L^2.
    """

    n: int
    box_length: float
    radius: float | None = None
    target_avg_degree: float | None = None
    boundary: str = PERIODIC

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.box_length <= 0:
            raise ValueError(f"box_length must be positive, got {self.box_length}")
        if (self.radius is None) == (self.target_avg_degree is None):
            raise ValueError("exactly one of radius / target_avg_degree must be set")
        if self.radius is not None and self.radius <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.target_avg_degree is not None and self.target_avg_degree <= 0:
            raise ValueError(f"target_avg_degree must be positive, got {self.target_avg_degree}")
        if self.boundary not in (PERIODIC, FREE):
            raise ValueError(f"boundary must be {PERIODIC!r} or {FREE!r}, got {self.boundary!r}")

    @property
    def density(self) -> float:
        return self.n / self.box_length**2

    def effective_radius(self) -> float:
        if self.radius is not None:
            return self.radius
        return radius_for_degree(self.target_avg_degree, self.density)


@dataclass(frozen=True)
class SwConfig:
    """Shortcut density p: expected number of added long-range links per node."""

    shortcut_density: float = 0.0

    def __post_init__(self):
        if self.shortcut_density < 0:
            raise ValueError(f"shortcut_density must be >= 0, got {self.shortcut_density}")


def radius_for_degree(avg_degree: float, density: float) -> float:
    """Radio range giving average degree kbar = density * pi * R^2."""
    if avg_degree <= 0:
        raise ValueError(f"avg_degree must be positive, got {avg_degree}")
    if density <= 0:
        raise ValueError(f"density must be positive, got {density}")
    return math.sqrt(avg_degree / (math.pi * density))


def _build_csr(n: int, pairs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """CSR arrays from an array of unordered edges (u < v), rows sorted."""
    if pairs.size == 0:
        return np.zeros(n + 1, dtype=np.int64), np.empty(0, dtype=np.int32)
    src = np.concatenate([pairs[:, 0], pairs[:, 1]])
    dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, dst.astype(np.int32)


def _pair_key(pairs: np.ndarray, n: int) -> np.ndarray:
    return pairs[:, 0].astype(np.int64) * n + pairs[:, 1]


def _rgg_edges(positions: np.ndarray, box_length: float, radius: float,
               boundary: str) -> np.ndarray:
    """All pairs (u < v) at distance <= radius, via cell binning.

    Periodic boundary uses the minimum-image torus distance. Falls back to a
    blocked dense scan when the box holds fewer than 3x3 cells.
    """
    n = positions.shape[0]
    periodic = boundary == PERIODIC
    ncell = int(box_length // radius) if radius < box_length else 1
    if ncell < 3 or n < 64:
        return _rgg_edges_dense(positions, box_length, radius, boundary)

    cell_len = box_length / ncell
    cxy = np.minimum((positions / cell_len).astype(np.int64), ncell - 1)
    lin = cxy[:, 0] * ncell + cxy[:, 1]
    order = np.argsort(lin, kind="stable")
    lin_sorted = lin[order]
    occupied, starts = np.unique(lin_sorted, return_index=True)
    bounds = np.append(starts, n)
    members = {int(c): order[bounds[k]:bounds[k + 1]] for k, c in enumerate(occupied)}

    r2 = radius * radius
    us: list[np.ndarray] = []
    vs: list[np.ndarray] = []
    for c, mem in members.items():
        ax, ay = divmod(c, ncell)
        for dxc in (-1, 0, 1):
            for dyc in (-1, 0, 1):
                bx, by = ax + dxc, ay + dyc
                if periodic:
                    b = (bx % ncell) * ncell + (by % ncell)
                elif 0 <= bx < ncell and 0 <= by < ncell:
                    b = bx * ncell + by
                else:
                    continue
                if b < c:
                    continue  # each unordered cell pair handled once
                other = members.get(b)
                if other is None:
                    continue
                if b == c:
                    if mem.size < 2:
                        continue
                    iu, iv = np.triu_indices(mem.size, k=1)
                    a_idx, b_idx = mem[iu], mem[iv]
                else:
                    a_idx = np.repeat(mem, other.size)
                    b_idx = np.tile(other, mem.size)
                dx = np.abs(positions[a_idx, 0] - positions[b_idx, 0])
                dy = np.abs(positions[a_idx, 1] - positions[b_idx, 1])
                if periodic:
                    np.minimum(dx, box_length - dx, out=dx)
                    np.minimum(dy, box_length - dy, out=dy)
                close = dx * dx + dy * dy <= r2
                us.append(np.minimum(a_idx[close], b_idx[close]))
                vs.append(np.maximum(a_idx[close], b_idx[close]))
    if not us:
        return np.empty((0, 2), dtype=np.int64)
    return np.stack([np.concatenate(us), np.concatenate(vs)], axis=1)


def _rgg_edges_dense(positions: np.ndarray, box_length: float, radius: float,
                     boundary: str, block: int = 512) -> np.ndarray:
    n = positions.shape[0]
    r2 = radius * radius
    us: list[np.ndarray] = []
    vs: list[np.ndarray] = []
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        dx = np.abs(positions[i0:i1, 0][:, None] - positions[i0:, 0][None, :])
        dy = np.abs(positions[i0:i1, 1][:, None] - positions[i0:, 1][None, :])
        if boundary == PERIODIC:
            np.minimum(dx, box_length - dx, out=dx)
            np.minimum(dy, box_length - dy, out=dy)
        close = dx * dx + dy * dy <= r2
        rows = np.arange(i0, i1)[:, None]
        cols = np.arange(i0, n)[None, :]
        close &= cols > rows
        r, c = np.nonzero(close)
        us.append(r + i0)
        vs.append(c + i0)
    if not us:
        return np.empty((0, 2), dtype=np.int64)
    return np.stack([np.concatenate(us), np.concatenate(vs)], axis=1).astype(np.int64)


def generate_rgg(config: RggConfig, rng: np.random.Generator) -> Graph:
    """Drop n uniform points in the box and link every pair within range."""
    radius = config.effective_radius()
    positions = rng.uniform(0.0, config.box_length, size=(config.n, 2))
    pairs = _rgg_edges(positions, config.box_length, radius, config.boundary)
    indptr, indices = _build_csr(config.n, pairs)
    return Graph(config.n, indptr, indices, positions=positions,
                 box_length=config.box_length, boundary=config.boundary)


def add_shortcuts(g: Graph, sw: SwConfig, rng: np.random.Generator) -> Graph:
    """Add round(p * n) uniformly random links between non-adjacent node pairs.

    Rejection-samples unordered pairs, skipping self-pairs, existing edges and
    already-drawn shortcuts; aborts with TopologyError after 100 * m
    consecutive rejections.
    """
    m = round(sw.shortcut_density * g.n)
    if m == 0:
        return g
    possible = g.n * (g.n - 1) // 2 - g.edge_count
    if m > possible:
        raise TopologyError(
            f"cannot add {m} shortcuts: only {possible} non-adjacent pairs exist")

    chosen: set[tuple[int, int]] = set()
    rejections = 0
    while len(chosen) < m:
        u = int(rng.integers(0, g.n))
        v = int(rng.integers(0, g.n))
        if u > v:
            u, v = v, u
        if u == v or (u, v) in chosen or g.has_edge(u, v):
            rejections += 1
            if rejections >= 100 * m:
                raise TopologyError(
                    f"shortcut sampling stalled after {rejections} consecutive rejections")
            continue
        rejections = 0
        chosen.add((u, v))

    shortcuts = tuple(sorted(chosen))
    old = np.stack([np.repeat(np.arange(g.n, dtype=np.int64), np.diff(g.indptr)),
                    g.indices.astype(np.int64)], axis=1)
    old = old[old[:, 0] < old[:, 1]]
    pairs = np.concatenate([old, np.array(shortcuts, dtype=np.int64)], axis=0)
    indptr, indices = _build_csr(g.n, pairs)
    return Graph(g.n, indptr, indices, positions=g.positions,
                 box_length=g.box_length, boundary=g.boundary,
                 shortcut_edges=g.shortcut_edges + shortcuts)


def generate_lattice_2d(side: int, periodic: bool = True) -> Graph:
    """side x side square lattice with 4 nearest neighbors per node."""
    if side < 2:
        raise ValueError(f"side must be >= 2, got {side}")
    n = side * side
    edges: set[tuple[int, int]] = set()
    for x in range(side):
        for y in range(side):
            u = x * side + y
            steps = [(x + 1, y), (x, y + 1)]
            for nx, ny in steps:
                if periodic:
                    v = (nx % side) * side + (ny % side)
                elif nx < side and ny < side:
                    v = nx * side + ny
                else:
                    continue
                if u != v:
                    edges.add((min(u, v), max(u, v)))
    pairs = np.array(sorted(edges), dtype=np.int64)
    indptr, indices = _build_csr(n, pairs)
    return Graph(n, indptr, indices)


def generate_complete(n: int) -> Graph:
    """Complete graph on n nodes."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    iu, iv = np.triu_indices(n, k=1)
    pairs = np.stack([iu, iv], axis=1).astype(np.int64)
    indptr, indices = _build_csr(n, pairs)
    return Graph(n, indptr, indices)


def connected_components(g: Graph) -> list[list[int]]:
    """Maximal connected node sets, largest first (ties by smallest node id)."""
    seen = np.zeros(g.n, dtype=bool)
    comps: list[list[int]] = []
    for start in range(g.n):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = []
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in g.neighbors(u):
                if not seen[v]:
                    seen[v] = True
                    stack.append(int(v))
        comp.sort()
        comps.append(comp)
    comps.sort(key=lambda c: (-len(c), c[0]))
    return comps


def is_connected(g: Graph) -> bool:
    return len(connected_components(g)) == 1


def giant_component_subgraph(g: Graph) -> Graph:
    """Subgraph induced on the largest component, nodes relabeled 0..m-1."""
    comp = connected_components(g)[0]
    keep = np.array(comp, dtype=np.int64)
    relabel = -np.ones(g.n, dtype=np.int64)
    relabel[keep] = np.arange(keep.size)
    pairs = []
    for u in comp:
        for v in g.neighbors(u):
            if u < v:
                pairs.append((relabel[u], relabel[v]))
    pairs = np.array(pairs, dtype=np.int64) if pairs else np.empty((0, 2), dtype=np.int64)
    indptr, indices = _build_csr(keep.size, pairs)
    positions = g.positions[keep].copy() if g.positions is not None else None
    shortcuts = tuple(sorted((int(relabel[a]), int(relabel[b]))
                             for a, b in g.shortcut_edges
                             if relabel[a] >= 0 and relabel[b] >= 0))
    return Graph(int(keep.size), indptr, indices, positions=positions,
                 box_length=g.box_length, boundary=g.boundary,
                 shortcut_edges=shortcuts)


def measured_avg_degree(g: Graph) -> float:
    """2K/N from the realized edge count."""
    return 2.0 * g.edge_count / g.n


def generate_connected_rgg(config: RggConfig, rng: np.random.Generator,
                           policy: str = "regenerate",
                           max_attempts: int = 1000) -> tuple[Graph, int]:
    """RGG guaranteed connected, plus the number of position draws used.

    policy "regenerate": redraw all positions until the graph is connected
    (TopologyError after max_attempts). policy "giant_component": keep the
    first draw, restrict to its largest component.
    """
    if policy not in ("regenerate", "giant_component"):
        raise ValueError(f"unknown connectivity policy {policy!r}")
    g = generate_rgg(config, rng)
    attempts = 1
    if policy == "giant_component":
        return (g if is_connected(g) else giant_component_subgraph(g)), attempts
    while not is_connected(g):
        if attempts >= max_attempts:
            raise TopologyError(
                f"no connected RGG in {max_attempts} attempts "
                f"(n={config.n}, kbar~{config.density * math.pi * config.effective_radius()**2:.2f})")
        g = generate_rgg(config, rng)
        attempts += 1
    return g, attempts


def write_edge_list(g: Graph, path) -> None:
    """Edge-list text format; floats printed with shortest round-trip decimals.

    Header ``n=<n> L=<L|-> boundary=<periodic|free|->``, one ``u v [s]`` line
    per edge (s marks shortcuts), then an optional ``# positions`` block of
    ``id x y`` lines.
    """
    lines = []
    lfield = repr(float(g.box_length)) if g.box_length is not None else "-"
    bfield = g.boundary if g.boundary is not None else "-"
    lines.append(f"n={g.n} L={lfield} boundary={bfield}")
    shortcut = set(g.shortcut_edges)
    for u in range(g.n):
        for v in g.neighbors(u):
            if u < v:
                tag = " s" if (u, int(v)) in shortcut else ""
                lines.append(f"{u} {v}{tag}")
    if g.positions is not None:
        lines.append("# positions")
        for i in range(g.n):
            x, y = g.positions[i]
            lines.append(f"{i} {float(x)!r} {float(y)!r}")
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def read_edge_list(path) -> Graph:
    """Parse the format written by write_edge_list."""
    with open(path, encoding="ascii") as f:
        lines = [ln.rstrip("\n") for ln in f]
    header = dict(tok.split("=", 1) for tok in lines[0].split())
    n = int(header["n"])
    box_length = None if header["L"] == "-" else float(header["L"])
    boundary = None if header["boundary"] == "-" else header["boundary"]
    pairs: list[tuple[int, int]] = []
    shortcuts: list[tuple[int, int]] = []
    positions = None
    i = 1
    while i < len(lines) and lines[i] != "# positions":
        if lines[i]:
            parts = lines[i].split()
            u, v = int(parts[0]), int(parts[1])
            pairs.append((u, v))
            if len(parts) > 2 and parts[2] == "s":
                shortcuts.append((u, v))
        i += 1
    if i < len(lines) and lines[i] == "# positions":
        positions = np.zeros((n, 2))
        for ln in lines[i + 1:]:
            if ln:
                idx, x, y = ln.split()
                positions[int(idx)] = (float(x), float(y))
    arr = np.array(pairs, dtype=np.int64) if pairs else np.empty((0, 2), dtype=np.int64)
    indptr, indices = _build_csr(n, arr)
    return Graph(n, indptr, indices, positions=positions, box_length=box_length,
                 boundary=boundary, shortcut_edges=tuple(sorted(shortcuts)))
