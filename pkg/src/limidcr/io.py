"""JSON documents: diagrams in, strategies and solver results out.

A diagram document looks like::

    {"nodes": [{"name": "D", "kind": "decision", "parents": [], "domain": 2},
               {"name": "U", "kind": "utility", "parents": ["D"]}],
     "cpts": {},
     "utilities": {"U": [2, 5]}}

Tables are flat and row-major over parent configurations (the last parent
varies fastest), with the node's own category last for CPTs.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping

import numpy as np

from .errors import DocumentError, InvalidDiagramError
from .model import InfluenceDiagram, Node, NodeKind, Strategy, require_valid

DOCUMENT_KEYS = ("nodes", "cpts", "utilities")
NODE_KEYS = ("name", "kind", "parents", "domain")


def _expect(cond, key, message):
    if not cond:
        raise DocumentError(key, message)


def _numbers(values, key):
    _expect(isinstance(values, list), key, "expected a list of numbers")
    for i, v in enumerate(values):
        _expect(isinstance(v, (int, float)) and not isinstance(v, bool), f"{key}[{i}]", "expected a number")
    return np.asarray(values, dtype=float)


def diagram_from_dict(doc) -> InfluenceDiagram:
    """Parse a diagram document; every schema problem names the offending key."""
    _expect(isinstance(doc, dict), "<root>", "expected a JSON object")
    for key in doc:
        _expect(key in DOCUMENT_KEYS, key, "unknown key")
    _expect("nodes" in doc, "nodes", "missing key")
    _expect(isinstance(doc["nodes"], list), "nodes", "expected a list")
    ids: dict[str, int] = {}
    raw = []
    for i, entry in enumerate(doc["nodes"]):
        where = f"nodes[{i}]"
        _expect(isinstance(entry, dict), where, "expected an object")
        for key in entry:
            _expect(key in NODE_KEYS, f"{where}.{key}", "unknown key")
        for key in ("name", "kind"):
            _expect(key in entry, f"{where}.{key}", "missing key")
        name = entry["name"]
        _expect(isinstance(name, str) and name, f"{where}.name", "expected a non-empty string")
        _expect(name not in ids, f"{where}.name", f"duplicate node name {name!r}")
        try:
            kind = NodeKind(entry["kind"])
        except ValueError:
            raise DocumentError(f"{where}.kind", f"expected chance, decision or utility, got {entry['kind']!r}") from None
        parents = entry.get("parents", [])
        _expect(isinstance(parents, list) and all(isinstance(p, str) for p in parents), f"{where}.parents", "expected a list of names")
        if kind is NodeKind.UTILITY:
            _expect("domain" not in entry, f"{where}.domain", "utility nodes have no domain")
            domain = None
        else:
            domain = entry.get("domain", 2)
            _expect(isinstance(domain, int) and not isinstance(domain, bool), f"{where}.domain", "expected an integer")
        ids[name] = i
        raw.append((name, kind, parents, domain))

    nodes = []
    for i, (name, kind, parents, domain) in enumerate(raw):
        for p in parents:
            _expect(p in ids, f"nodes[{i}].parents", f"unknown parent {p!r}")
        nodes.append(Node(i, name, kind, tuple(ids[p] for p in parents), domain))

    tables = {}
    for section in ("cpts", "utilities"):
        block = doc.get(section, {})
        _expect(isinstance(block, dict), section, "expected an object")
        tables[section] = {}
        for name, values in block.items():
            _expect(name in ids, f"{section}.{name}", "unknown node")
            tables[section][ids[name]] = _numbers(values, f"{section}.{name}")
    diagram = InfluenceDiagram(nodes, tables["cpts"], tables["utilities"])
    require_valid(diagram)
    return diagram


def diagram_to_dict(diagram: InfluenceDiagram) -> dict:
    nodes = []
    for n in diagram.nodes:
        entry = {"name": n.name, "kind": n.kind.value, "parents": [diagram.nodes[p].name for p in n.parents]}
        if n.kind is not NodeKind.UTILITY:
            entry["domain"] = n.domain_size
        nodes.append(entry)
    name = lambda i: diagram.nodes[i].name  # noqa: E731
    return {
        "nodes": nodes,
        "cpts": {name(i): t.tolist() for i, t in sorted(diagram.cpts.items())},
        "utilities": {name(i): t.tolist() for i, t in sorted(diagram.utilities.items())},
    }


def dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def load_diagram(path) -> InfluenceDiagram:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DocumentError("<root>", f"not valid JSON ({exc})") from None
    return diagram_from_dict(doc)


def save_diagram(diagram: InfluenceDiagram, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(diagram_to_dict(diagram)))


# -- strategies ---------------------------------------------------------------


def config_label(diagram: InfluenceDiagram, node_id: int, index: int) -> str:
    """``"p=v,q=w"`` in declared parent order; empty for parentless nodes."""
    values = diagram.parent_config(node_id, index)
    return ",".join(f"{diagram.nodes[p].name}={v}" for p, v in zip(diagram.nodes[node_id].parents, values))


def strategy_to_dict(diagram: InfluenceDiagram, strategy: Strategy) -> dict:
    out = {}
    for d in diagram.decisions:
        policy = strategy.policies[d]
        rows = {}
        for j in range(diagram.n_configs(d)):
            row = policy.table[j]
            if policy.is_pure():
                rows[config_label(diagram, d, j)] = int(np.argmax(row))
            else:
                rows[config_label(diagram, d, j)] = [float(x) for x in row]
        out[diagram.nodes[d].name] = rows
    return out


def strategy_from_dict(diagram: InfluenceDiagram, doc) -> Strategy:
    """Accept a result document or a bare ``{decision: {config: alternative}}`` map.

    An alternative is either an index or a probability list (a mixed policy).
    """
    _expect(isinstance(doc, dict), "<root>", "expected a JSON object")
    mapping = doc["strategy"] if "strategy" in doc else doc
    _expect(isinstance(mapping, dict), "strategy", "expected an object")
    tables = {}
    names = {diagram.nodes[d].name: d for d in diagram.decisions}
    for name in mapping:
        _expect(name in names, f"strategy.{name}", "not a decision node of the diagram")
    for name, d in names.items():
        _expect(name in mapping, f"strategy.{name}", "missing policy")
        rows = mapping[name]
        _expect(isinstance(rows, dict), f"strategy.{name}", "expected an object")
        k = diagram.nodes[d].domain_size
        labels = [config_label(diagram, d, j) for j in range(diagram.n_configs(d))]
        for label in rows:
            _expect(label in labels, f"strategy.{name}.{label}", "unknown parent configuration")
        table = np.zeros((len(labels), k))
        for j, label in enumerate(labels):
            key = f"strategy.{name}.{label}"
            _expect(label in rows, key, "missing parent configuration")
            value = rows[label]
            if isinstance(value, list):
                row = _numbers(value, key)
                _expect(row.size == k and np.all(row >= 0) and math.isclose(row.sum(), 1.0, abs_tol=1e-9), key, "expected a distribution")
                table[j] = row
            else:
                _expect(isinstance(value, int) and not isinstance(value, bool) and 0 <= value < k, key, f"expected an alternative in 0..{k - 1}")
                table[j, value] = 1.0
        tables[d] = table
    return Strategy.from_tables(tables)


def result_to_dict(diagram: InfluenceDiagram, strategy: Strategy, eu: float, *, upper_bound=None,
                   gap_percent=None, nodes_evaluated=None, status=None) -> dict:
    doc: dict = {"strategy": strategy_to_dict(diagram, strategy), "eu": float(eu)}
    if upper_bound is not None:
        doc["upper_bound"] = float(upper_bound)
    if gap_percent is not None:
        doc["gap_percent"] = float(gap_percent)
    if nodes_evaluated is not None:
        doc["nodes_evaluated"] = int(nodes_evaluated)
    if status is not None:
        doc["status"] = str(getattr(status, "value", status))
    return doc


__all__ = [
    "DocumentError", "InvalidDiagramError", "config_label", "diagram_from_dict", "diagram_to_dict", "dumps",
    "load_diagram", "result_to_dict", "save_diagram", "strategy_from_dict", "strategy_to_dict",
]
