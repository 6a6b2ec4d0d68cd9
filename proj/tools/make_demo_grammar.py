#!/usr/bin/env python3
"""Writes data/grammars/count_evens.json, the demo grammar for a CS1-style
problem: "return how many numbers in `nums` are even".

Variable names are bound per derivation by expanding one nonterminal family
per (counter, element) pair, which keeps the grammar context-free.
"""

import json
import pathlib
import sys

COUNTERS = ["count", "total", "evens", "result", "c", "num_evens"]
ITEMS = ["num", "x", "n", "item", "value", "elem"]
INDEXED = "nums[i]"


def t(text):
    return {"t": text}


def nt(name):
    return {"nt": name}


def prod(weight, body, labels=()):
    return {"weight": weight, "body": body, "labels": sorted(labels)}


def key(*parts):
    return "__".join(p.replace("[", "_").replace("]", "") for p in parts)


def build():
    rules = {}
    elements = ITEMS + [INDEXED]

    rules["S"] = [prod(1.0, [t("def count_evens(nums):\n"), nt("DOC"), nt("BODY")])]
    rules["DOC"] = [
        prod(3.0, [t("")]),
        prod(1.0, [t('    """Return how many numbers in the list are even."""\n')], ["has-docstring"]),
    ]
    rules["COMMENT"] = [
        prod(2.0, [t("")]),
        prod(1.0, [t("    # count the even numbers\n")]),
    ]
    rules["BODY"] = [prod(1.0, [nt(key("LOOPSOL", v))]) for v in COUNTERS]
    rules["BODY"].append(prod(1.5, [nt("COMPSOL")], ["uses-comprehension"]))

    for e in elements:
        rules[key("COND", e)] = [
            prod(6.0, [t(f"{e} % 2 == 0")]),
            prod(1.0, [t(f"{e} % 2 != 1")]),
            prod(1.0, [t(f"not {e} % 2")]),
            prod(0.5, [t(f"{e} % 2 < 1")]),
            prod(1.0, [t(f"({e} % 2) == 0")]),
            prod(1.0, [t(f"{e} % 2 == 1")], ["counts-odd-numbers"]),
            prod(1.0, [t(f"{e} / 2 == 0")], ["wrong-parity-check"]),
            prod(0.5, [t(f"{e} // 2 == 0")], ["wrong-parity-check"]),
        ]

    rules["ELSE"] = [
        prod(4.0, [t("")]),
        prod(1.0, [t("        else:\n            continue\n")], ["redundant-else"]),
    ]
    rules["RANGE"] = [
        prod(6.0, [t("len(nums)")]),
        prod(1.5, [t("len(nums) - 1")], ["off-by-one"]),
        prod(1.0, [t("1, len(nums)")], ["skips-first-element"]),
    ]
    rules["WCMP"] = [
        prod(5.0, [t("<")]),
        prod(1.0, [t("<=")], ["index-out-of-range"]),
    ]
    rules["STEP"] = [
        prod(5.0, [t("        i += 1\n")]),
        prod(1.0, [t("")], ["infinite-loop"]),
    ]

    for v in COUNTERS:
        rules[key("LOOPSOL", v)] = [
            prod(5.0, [nt("COMMENT"), nt(key("INIT", v)), nt(key("FOREACH", v)), nt(key("RET", v))],
                 ["uses-for-loop", "iterates-elements"]),
            prod(3.0, [nt("COMMENT"), nt(key("INIT", v)), nt(key("FORINDEX", v)), nt(key("RET", v))],
                 ["uses-for-loop", "iterates-indices"]),
            prod(2.0, [nt("COMMENT"), nt(key("INIT", v)), nt(key("WHILE", v)), nt(key("RET", v))],
                 ["uses-while-loop"]),
        ]
        rules[key("INIT", v)] = [
            prod(8.0, [t(f"    {v} = 0\n")]),
            prod(1.0, [t(f"    {v} = 1\n")], ["wrong-initial-value"]),
        ]
        rules[key("RET", v)] = [
            prod(8.0, [t(f"    return {v}\n")]),
            prod(1.5, [t(f"        return {v}\n")], ["return-inside-loop"]),
            prod(1.5, [t(f"    print({v})\n")], ["prints-instead-of-return"]),
            prod(0.5, [t("    return\n")], ["returns-none"]),
        ]
        rules[key("FOREACH", v)] = [
            prod(1.0, [t(f"    for {x} in nums:\n"), nt(key("IFBLOCK", v, x))]) for x in ITEMS
        ]
        rules[key("FORINDEX", v)] = [
            prod(1.0, [t("    for i in range("), nt("RANGE"), t("):\n"), nt(key("IFBLOCK", v, INDEXED))])
        ]
        rules[key("WHILE", v)] = [
            prod(1.0, [t("    i = 0\n    while i "), nt("WCMP"), t(" len(nums):\n"),
                       nt(key("IFBLOCK", v, INDEXED)), nt("STEP")])
        ]
        for e in elements:
            rules[key("IFBLOCK", v, e)] = [
                prod(1.0, [t("        if "), nt(key("COND", e)), t(":\n            "), nt(key("INCR", v, e)),
                           t("\n"), nt("ELSE")])
            ]
            rules[key("INCR", v, e)] = [
                prod(5.0, [t(f"{v} += 1")]),
                prod(3.0, [t(f"{v} = {v} + 1")]),
                prod(1.0, [t(f"{v} = {v} + {e}")], ["sums-instead-of-counts"]),
                prod(1.0, [t(f"{v} + 1")], ["missing-assignment"]),
            ]

    rules["COMPSOL"] = [prod(1.0, [t("    return "), nt(key("COMP", x))]) for x in ITEMS]
    for x in ITEMS:
        rules[key("COMP", x)] = [
            prod(2.0, [t(f"len([{x} for {x} in nums if "), nt(key("COND", x)), t("])\n")]),
            prod(2.0, [t(f"sum(1 for {x} in nums if "), nt(key("COND", x)), t(")\n")]),
            prod(1.0, [t(f"sum([1 for {x} in nums if "), nt(key("COND", x)), t("])\n")]),
        ]

    return {"start": "S", "max_depth": 64, "rules": rules}


def main():
    out = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else (
        pathlib.Path(__file__).resolve().parent.parent / "data" / "grammars" / "count_evens.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(build(), indent=1, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
