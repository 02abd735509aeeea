"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools
from functools import lru_cache

import networkx as nx

from ntl.tree_core import Tree


def to_nx(t: Tree) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(t.vertices)
    g.add_edges_from(t.edges)
    return g


def brute_automorphisms(t: Tree) -> set[tuple[int, ...]]:
    """Every vertex permutation preserving the edge set, by an n! scan."""
    vs = t.vertices
    edges = t.edge_set
    out = set()
    for images in itertools.permutations(vs):
        m = dict(zip(vs, images))
        if all(tuple(sorted((m[u], m[v]))) in edges for u, v in t.edges):
            out.add(images)
    return out


def brute_isomorphic(a: Tree, b: Tree) -> bool:
    if len(a.vertices) != len(b.vertices):
        return False
    for images in itertools.permutations(b.vertices):
        m = dict(zip(a.vertices, images))
        if all(b.has_edge(m[u], m[v]) for u, v in a.edges):
            return True
    return False


@lru_cache(maxsize=None)
def labeled_trees_brute(n: int) -> tuple[Tree, ...]:
    """All labeled trees on ``range(n)`` via Prüfer sequences."""
    if n == 1:
        return (Tree((0,), ()),)
    if n == 2:
        return (Tree((0, 1), ((0, 1),)),)
    out = []
    for seq in itertools.product(range(n), repeat=n - 2):
        g = nx.from_prufer_sequence(list(seq))
        out.append(Tree.from_edges(range(n), g.edges()))
    return tuple(out)
