#!/usr/bin/env python3
"""Brute-force classification of a rulebase over its question space.

Shares no code with the Rust engine: its own formula parser, plain
itertools.product enumeration and a direct double loop over questions and
rules. Writes the coverage report (JSON) and the gap text that the engine
must reproduce byte for byte.

usage: baseline.py SPACE RULES OUT_JSON OUT_GAP
"""

import itertools
import json
import re
import sys

SAMPLE_LIMIT = 10
ELEMENTS = ["subject", "tool", "reason", "method"]
TOKEN = re.compile(r"\s*(<->|->|inverse\b|[~&|()]|[A-Za-z_][A-Za-z0-9_=]*)")


def tokenize(text):
    text = re.sub(r"#.*", "", text)
    pos, out = 0, []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"bad input at {pos}: {text!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


class Parser:
    """Precedence climbing: ~ > & > | > -> > <->, the last two right-associative."""

    BINARY = [("<->", "iff"), ("->", "imp"), ("|", "or"), ("&", "and")]

    def __init__(self, tokens):
        self.toks, self.i = tokens, 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expected=None):
        tok = self.peek()
        if expected is not None and tok != expected:
            raise ValueError(f"expected {expected}, got {tok}")
        self.i += 1
        return tok

    def level(self, n):
        if n == len(self.BINARY):
            return self.unary()
        sym, op = self.BINARY[n]
        left = self.level(n + 1)
        if self.peek() == sym:
            self.take()
            return (op, left, self.level(n))
        return left

    def unary(self):
        tok = self.take()
        if tok == "inverse":
            self.take("(")
            inner = self.level(0)
            self.take(")")
            return ("not", inner)
        if tok == "~":
            return ("not", self.unary())
        if tok == "(":
            inner = self.level(0)
            self.take(")")
            return inner
        return ("atom", tok)


def parse(text):
    p = Parser(tokenize(text))
    f = p.level(0)
    if p.peek() is not None:
        raise ValueError(f"trailing input in {text!r}")
    return f


def holds(f, true_atoms):
    op = f[0]
    if op == "atom":
        return f[1] in true_atoms
    if op == "not":
        return not holds(f[1], true_atoms)
    a, b = holds(f[1], true_atoms), holds(f[2], true_atoms)
    return {"and": a and b, "or": a or b, "imp": (not a) or b, "iff": a == b}[op]


def classify(space, rules, rulebase_id):
    attributes = [a for element in ELEMENTS for a in space[element]]
    names = [a["attribute"] for a in attributes]
    value_lists = [[v["id"] for v in a["values"]] for a in attributes]
    parsed = [(r, parse(r["condition"])) for r in rules]

    counts = {"ruled": 0, "excluded": 0, "uncovered": 0, "conflicting": 0}
    uncovered, conflicting, unsupported = [], [], set()
    total = 0
    for combo in itertools.product(*value_lists):
        total += 1
        atoms = [f"{n}={v}" for n, v in zip(names, combo)]
        true_atoms = set(atoms)
        fired = [r for r, f in parsed if holds(f, true_atoms)]
        negative = [r for r in fired if r["polarity"] == "negative"]
        if negative:
            status, deciding = "excluded", negative
        else:
            distinct = {r["verdict"] for r in fired}
            status = {0: "uncovered", 1: "ruled"}.get(len(distinct), "conflicting")
            deciding = fired
        counts[status] += 1
        for r in deciding:
            if not r.get("primary_rule"):
                unsupported.add(r["id"])
        if status == "uncovered" and len(uncovered) < SAMPLE_LIMIT:
            uncovered.append({"question": atoms, "rules": []})
        if status == "conflicting" and len(conflicting) < SAMPLE_LIMIT:
            conflicting.append({"question": atoms, "rules": [r["id"] for r in deciding]})

    order = [r["id"] for r in rules]
    return {
        "space": space.get("id", "space"),
        "rulebase": rulebase_id,
        "total": total,
        "examined": total,
        "decided": True,
        "counts": counts,
        "complete": counts["uncovered"] == 0,
        "consistent": counts["conflicting"] == 0,
        "require_primary_rule": False,
        "rules_without_primary_rule": [i for i in order if i in unsupported],
        "uncovered_sample": uncovered,
        "conflicting_sample": conflicting,
    }


def section(lines, title, count, samples):
    if count == 0:
        return
    lines.append("")
    lines.append(f"{title} questions (showing {len(samples)} of {count}):")
    for i, s in enumerate(samples, 1):
        line = f"  {i}. " + ", ".join(s["question"])
        if s["rules"]:
            line += " [rules: " + ", ".join(s["rules"]) + "]"
        lines.append(line)
    if len(samples) > 1:
        shared, varying = [], []
        for i, atom in enumerate(samples[0]["question"]):
            if all(s["question"][i] == atom for s in samples):
                shared.append(atom)
            else:
                varying.append(atom.split("=")[0])
        lines.append("  common to all shown: " + (", ".join(shared) or "(none)"))
        lines.append("  differing among shown: " + (", ".join(varying) or "(none)"))


def gap_text(report):
    yes = {True: "yes", False: "no"}
    lines = [
        f"rulebase {report['rulebase']} over space {report['space']}",
        f"questions: {report['total']} (examined {report['examined']})",
    ]
    for status in ["ruled", "excluded", "uncovered", "conflicting"]:
        lines.append(f"{status}: {report['counts'][status]}")
    lines.append(f"complete: {yes[report['complete']]}")
    lines.append(f"consistent: {yes[report['consistent']]}")
    if report["complete"] and report["consistent"]:
        lines.append("no gaps: every question is ruled or excluded and no rules conflict")
    else:
        section(lines, "uncovered", report["counts"]["uncovered"], report["uncovered_sample"])
        section(lines, "conflicting", report["counts"]["conflicting"], report["conflicting_sample"])
    return "\n".join(lines) + "\n"


def main(argv):
    if len(argv) != 5:
        sys.exit(__doc__.strip().splitlines()[-1])
    with open(argv[1], encoding="utf-8") as f:
        space = json.load(f)
    with open(argv[2], encoding="utf-8") as f:
        rulebase = json.load(f)
    report = classify(space, rulebase["rules"], rulebase["id"])
    with open(argv[3], "w", encoding="utf-8") as f:
        f.write(json.dumps(report, indent=2, ensure_ascii=False) + "\n")
    with open(argv[4], "w", encoding="utf-8") as f:
        f.write(gap_text(report))


if __name__ == "__main__":
    main(sys.argv)
