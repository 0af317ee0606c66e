"""Per-class training example counts for the first N corpus formulas.

Independent of the Rust lexer: tokenizes with its own regex and counts one
example per punctuation token plus one STOP per run, where runs sit between
consecutive non-punctuation tokens and at both ends.
"""
import re
import sys
from collections import Counter

PUNCT = {"(": "lparen", ")": "rparen", "{": "lbrace", "}": "rbrace",
         ",": "comma", ":": "colon", ".": "dot"}
TOKEN = re.compile(r'\s*("[^"]*"|[0-9]+(?:\.[0-9]+)?|[A-Za-z_][A-Za-z0-9_]*|<>|<=|>=|[<>=+\-*/^&!(){},:.])')


def tokens(line):
    out, i = [], 0
    line = line.rstrip()
    while i < len(line):
        m = TOKEN.match(line, i)
        if not m:
            raise ValueError(f"cannot lex {line!r} at {i}")
        out.append(m.group(1))
        i = m.end()
    return out


def main():
    path = sys.argv[1]
    n = int(sys.argv[2]) if len(sys.argv) > 2 else 50
    lines = [l for l in open(path, encoding="utf-8") if l.strip() and not l.startswith("#")][:n]
    counts = Counter()
    for l in lines:
        toks = tokens(l)
        reliable = sum(1 for t in toks if t not in PUNCT)
        counts["STOP"] += reliable + 1
        for t in toks:
            if t in PUNCT:
                counts[PUNCT[t]] += 1
    for name in sorted(counts):
        print(f"{name} {counts[name]}")


if __name__ == "__main__":
    main()
