#!/usr/bin/env python3
"""Generate the fixture corpus of well-formed demo formulas.

    python3 demo/tools/gen_corpus.py > demo/corpus.txt
"""
import random
import sys

SEED = 20240611
COUNT = 300

VARS = ["Total", "Status", "UserName", "Score", "Region", "Item", "Counter",
        "Selected", "ShowPanel", "Budget", "Owner", "Email", "Title", "Gallery1"]
FIELDS = ["Value", "Text", "Name", "Id", "Amount", "Visible"]
CELLS = ["A1", "A2", "B2", "B6", "C3", "D4", "E10", "F7", "G2", "H12"]
STRS = ['"yes"', '"no"', '""', '"Done"', '"N/A"', '"x"', '"Open"', '" "']


def var(r):
    return r.choice(VARS)


def cell(r):
    return r.choice(CELLS)


def num(r):
    return str(r.choice([0, 1, 2, 3, 5, 10, 12, 30, 100]))


def s(r):
    return r.choice(STRS)


def scalar(r):
    return r.choice([var, num, s, cell])(r)


def member(r):
    return var(r) + "." + r.choice(FIELDS)


def record(r, n=None):
    n = n or r.choice([1, 1, 1, 2, 2, 3])
    keys = r.sample(VARS, n)
    vals = [r.choice([var, num, s, member, lambda r: "!" + var(r)])(r) for _ in keys]
    return "{" + ", ".join(f"{k}: {v}" for k, v in zip(keys, vals)) + "}"


def cond(r):
    return r.choice([
        lambda: f"!IsBlank({var(r)})",
        lambda: f"IsBlank({member(r)})",
        lambda: f"{var(r)} > {num(r)}",
        lambda: f"{cell(r)} = {s(r)}",
        lambda: f"{member(r)} <> {s(r)}",
        lambda: f"{cell(r)} <= {num(r)}",
        lambda: f"AND({cell(r)} > {num(r)}, {cell(r)} < {num(r)})",
        lambda: f"OR({var(r)} = {s(r)}, {var(r)} = {s(r)})",
        lambda: f"NOT(IsBlank({var(r)}))",
    ])()


def powerfx(r):
    return r.choice([
        lambda: f"If({cond(r)}, UpdateContext({record(r)}))",
        lambda: f"If({cond(r)}, UpdateContext({record(r)}))",
        lambda: f"UpdateContext({record(r)})",
        lambda: f"UpdateContext({record(r)})",
        lambda: f"If({cond(r)}, UpdateContext({record(r)}), UpdateContext({record(r)}))",
        lambda: f"Set({var(r)}, {record(r)})",
        lambda: f"Set({var(r)}, {var(r)} + {num(r)})",
        lambda: f"Navigate({var(r)}, {record(r)})",
        lambda: f"Notify({s(r)}, {var(r)})",
        lambda: f"Patch({var(r)}, {member(r)}, {record(r)})",
        lambda: f"Collect({var(r)}, {record(r)})",
        lambda: f"Filter({var(r)}, {member(r)} > {num(r)})",
        lambda: f"LookUp({var(r)}, {member(r)} = {s(r)})",
        lambda: f"If({cond(r)}, Navigate({var(r)}), Notify({s(r)}, {var(r)}))",
        lambda: f"If({cond(r)}, {s(r)}, {member(r)})",
        lambda: f"{member(r)} & {s(r)}",
    ])()


def excel(r):
    rng = lambda: f"{cell(r)}:{cell(r)}"
    return r.choice([
        lambda: f"SUM({rng()})",
        lambda: f"COUNT({rng()})",
        lambda: f"AVERAGE({rng()})",
        lambda: f"MAX({rng()}, {num(r)})",
        lambda: f"IF({cond(r)}, {s(r)}, {s(r)})",
        lambda: f"IF({cell(r)} = {s(r)}, {s(r)}, {cell(r)} * {num(r)})",
        lambda: f"IF(COUNT({rng()}) > {num(r)}, SUM({rng()}), {num(r)})",
        lambda: f"LEN(MID({cell(r)}, {num(r)}, {num(r)}))",
        lambda: f"LEN({cell(r)})",
        lambda: f"MID({cell(r)}, {num(r)}, SEARCH({s(r)}, {cell(r)}))",
        lambda: f"LEFT({cell(r)}, {num(r)}) & {s(r)}",
        lambda: f"ROUND({cell(r)} * {num(r)}, {num(r)})",
        lambda: f"{cell(r)} <= EDATE(TODAY(), -{num(r)})",
        lambda: f"{cell(r)} >= EDATE(TODAY(), {num(r)})",
        lambda: f"IFERROR(VLOOKUP({cell(r)}, {rng()}, {num(r)}, {num(r)}), {s(r)})",
        lambda: f"CONCATENATE({cell(r)}, {s(r)}, {cell(r)})",
        lambda: f"UPPER(TRIM({cell(r)}))",
        lambda: f"({cell(r)} + {cell(r)}) / {num(r)}",
        lambda: f"YEAR({cell(r)}) - {num(r)}",
        lambda: f"TEXT({cell(r)}, {s(r)})",
    ])()


def main():
    r = random.Random(SEED)
    seen = set()
    out = []
    while len(out) < COUNT:
        f = powerfx(r) if r.random() < 0.6 else excel(r)
        if f not in seen:
            seen.add(f)
            out.append(f)
    sys.stdout.write("\n".join(out) + "\n")


if __name__ == "__main__":
    main()
