"""Reference implementations written independently of the package code."""
from collections import Counter


def oracle_kernel(labels_a, edges_a, labels_b, edges_b, h):
    """Brute-force WL subtree kernel using uncompressed nested-tuple labels."""

    def neighbours(n, edges):
        adj = [[] for _ in range(n)]
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def iterate(labels, adj):
        return [(labels[v], tuple(sorted(labels[u] for u in adj[v]))) for v in range(len(labels))]

    adj_a, adj_b = neighbours(len(labels_a), edges_a), neighbours(len(labels_b), edges_b)
    la, lb = list(labels_a), list(labels_b)
    total = 0
    for t in range(h + 1):
        ca, cb = Counter(la), Counter(lb)
        total += sum(c * cb[s] for s, c in ca.items())
        la, lb = iterate(la, adj_a), iterate(lb, adj_b)
    return total


def structure(g):
    return g.wl_labels, [e.endpoints for e in g.edges]


def permuted(g, perm):
    """Copy of ``g`` with node k renamed to perm[k]."""
    from graphlcd.scenegraph import SceneGraph

    labels, edges = structure(g)
    new_labels = [0] * len(labels)
    for old, new in enumerate(perm):
        new_labels[new] = labels[old]
    return SceneGraph.from_structure(new_labels, [(perm[u], perm[v]) for u, v in edges])
