"""Discrete factors and sum-product variable elimination.

A factor is a numpy array whose axes are labelled by node ids. Everything
here is generic over the meaning of the tables, so the same code evaluates
expected utilities of a diagram and query marginals of a credal network.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Factor:
    scope: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self):
        if self.table.ndim != len(self.scope):
            raise ValueError(f"table has {self.table.ndim} axes for scope {self.scope}")

    def _expand(self, scope):
        # Permute own axes into `scope` order and insert singleton axes for the rest.
        own = [v for v in scope if v in self.scope]
        table = np.transpose(self.table, [self.scope.index(v) for v in own])
        shape = [table.shape[own.index(v)] if v in self.scope else 1 for v in scope]
        return table.reshape(shape)

    def __mul__(self, other: Factor) -> Factor:
        scope = self.scope + tuple(v for v in other.scope if v not in self.scope)
        return Factor(scope, self._expand(scope) * other._expand(scope))

    def sum_out(self, var: int) -> Factor:
        i = self.scope.index(var)
        return Factor(self.scope[:i] + self.scope[i + 1:], self.table.sum(axis=i))


def min_degree_order(scopes, variables) -> list[int]:
    """Greedy min-degree elimination order on the interaction graph.

    Ties are broken by the smallest variable id, so the order is a pure
    function of the factor scopes.
    """
    adj = {v: set() for v in variables}
    for scope in scopes:
        for a in scope:
            for b in scope:
                if a != b:
                    adj[a].add(b)
    order = []
    remaining = set(variables)
    while remaining:
        v = min(remaining, key=lambda u: (len(adj[u]), u))
        nbrs = adj[v]
        for a in nbrs:
            adj[a] |= nbrs - {a}
            adj[a].discard(v)
        order.append(v)
        remaining.discard(v)
        del adj[v]
    return order


def eliminate_all(factors: list[Factor], order: list[int]) -> float:
    """Sum every variable out of the product of ``factors``.

    ``order`` must list each variable appearing in any scope exactly once.
    """
    pool = list(factors)
    for var in order:
        touching = [f for f in pool if var in f.scope]
        if not touching:
            continue
        pool = [f for f in pool if var not in f.scope]
        prod = touching[0]
        for f in touching[1:]:
            prod = prod * f
        pool.append(prod.sum_out(var))
    total = 1.0
    for f in pool:
        total *= float(f.table)
    return total
