"""Independent reference implementations: dense, loop-based, no package code."""
import math

import numpy as np


def dense_adjacency(n, edges):
    a = [[0.0] * n for _ in range(n)]
    for u, v in edges:
        if u != v:
            a[u][v] = 1.0
            a[v][u] = 1.0
    return a


def dense_laplacian(n, edges):
    a = dense_adjacency(n, edges)
    for i in range(n):
        a[i][i] = 1.0
    deg = [sum(row) for row in a]
    return np.array([[a[i][j] / math.sqrt(deg[i] * deg[j]) for j in range(n)]
                     for i in range(n)])


def loop_matmul(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = x.shape
    k2, m = y.shape
    assert k == k2
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for t in range(k):
                acc += x[i, t] * y[t, j]
            out[i, j] = acc
    return out


def loop_forward(p_dense, x, weights):
    h = np.asarray(x, dtype=float)
    for l, w in enumerate(weights):
        z = loop_matmul(loop_matmul(p_dense, h), w)
        h = z if l == len(weights) - 1 else np.where(z > 0, z, 0.0)
    return h


def closed_union(n, edges, nodes):
    a = dense_adjacency(n, edges)
    out = set()
    for k in nodes:
        out.add(k)
        out.update(i for i in range(n) if a[k][i])
    return sorted(out)


def finite_difference(f, weights, h=1e-6):
    grads = []
    for w in weights:
        g = np.zeros_like(w)
        for idx in np.ndindex(w.shape):
            old = w[idx]
            w[idx] = old + h
            up = f()
            w[idx] = old - h
            down = f()
            w[idx] = old
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def random_edges(n, p, rng):
    return [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
