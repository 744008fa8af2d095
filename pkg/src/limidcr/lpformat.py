"""Plain-text LP export (CPLEX LP dialect) and a reader for the same subset.

Grammar of the written documents::

    \\ comment lines start with a backslash
    Maximize
     obj: <terms>
    Subject To
     c<k>: <terms> (= | <= | >=) <number>
    Bounds
     <lo> <= <name> <= <hi>
    Binaries
     <name>
    End

``<terms>`` is a sequence of ``+ <coef> <name>`` or ``- <coef> <name>``;
names use only ``[A-Za-z0-9_]``; one constraint per line; coefficients are
printed with 17 significant digits so the text round-trips exactly.
"""

from __future__ import annotations

import re

from .reform import MilpProblem

SECTIONS = ("Maximize", "Subject To", "Bounds", "Binaries", "End")


def _num(v: float) -> str:
    return f"{v:.17g}"


def _terms(coefs, names) -> str:
    parts = []
    for i, c in sorted(coefs.items()):
        if c == 0.0:
            continue
        parts.append(f"{'-' if c < 0 else '+'} {_num(abs(c))} {names[i]}")
    return " ".join(parts)


def export_lp(milp: MilpProblem) -> str:
    names = [v.name for v in milp.variables]
    lines = ["\\ LIMID strategy selection, linearized", "Maximize"]
    obj = _terms(milp.objective, names)
    lines.append(f" obj: {obj}" if obj else " obj:")
    lines.append("Subject To")
    for k, con in enumerate(milp.constraints):
        lines.append(f" c{k}: {_terms(con.coefficients, names)} {con.relation} {_num(con.rhs)}")
    lines.append("Bounds")
    for v in milp.variables:
        if not v.binary:
            lines.append(f" 0 <= {v.name} <= 1")
    lines.append("Binaries")
    for v in milp.variables:
        if v.binary:
            lines.append(f" {v.name}")
    lines.append("End")
    return "\n".join(lines) + "\n"


_TERM = re.compile(r"([+-])\s*([0-9.eE+-]+)\s+([A-Za-z0-9_]+)")


def _parse_terms(text: str) -> dict[str, float]:
    out: dict[str, float] = {}
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m:
            raise ValueError(f"cannot parse terms near {text[pos:pos + 30]!r}")
        sign, coef, name = m.groups()
        out[name] = out.get(name, 0.0) + (-1.0 if sign == "-" else 1.0) * float(coef)
        pos = m.end()
        while pos < len(text) and text[pos] == " ":
            pos += 1
    return out


def parse_lp(text: str) -> dict:
    """Read a document written by ``export_lp``."""
    doc = {"objective": {}, "constraints": [], "bounds": {}, "binaries": []}
    section = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        if line in SECTIONS:
            section = line
            if line == "End":
                break
            continue
        if section == "Maximize":
            _, _, rest = line.partition(":")
            doc["objective"] = _parse_terms(rest)
        elif section == "Subject To":
            name, _, rest = line.partition(":")
            m = re.match(r"(.*?)\s(=|<=|>=)\s(\S+)$", rest)
            if not m:
                raise ValueError(f"bad constraint line {line!r}")
            doc["constraints"].append((name.strip(), _parse_terms(m.group(1)), m.group(2), float(m.group(3))))
        elif section == "Bounds":
            lo, name, hi = re.match(r"(\S+)\s*<=\s*(\S+)\s*<=\s*(\S+)$", line).groups()
            doc["bounds"][name] = (float(lo), float(hi))
        elif section == "Binaries":
            doc["binaries"].extend(line.split())
        else:
            raise ValueError(f"content outside a section: {line!r}")
    if section != "End":
        raise ValueError("missing End")
    return doc
