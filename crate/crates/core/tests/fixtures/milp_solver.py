#!/usr/bin/env python3
"""Minimal MPS solver used by the cut-loop tests.

Usage: milp_solver.py MODEL.mps SOLUTION.txt

Reads the subset of fixed-format MPS written by das-core (N/L/G/E rows,
integer markers, RHS, UP/LO/FX bounds), solves it with scipy's HiGHS MILP
interface and writes one `<name> <value>` line per column.
"""
import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp


def parse(path):
    rows, kinds, cols, integer = [], {}, [], set()
    coef, rhs, lo, hi = {}, {}, {}, {}
    section, in_int = None, False
    with open(path) as fh:
        for raw in fh:
            if not raw.strip():
                continue
            if not raw.startswith(" "):
                section = raw.split()[0]
                continue
            f = raw.split()
            if section == "ROWS":
                kinds[f[1]] = f[0]
                rows.append(f[1])
            elif section == "COLUMNS":
                if len(f) >= 3 and f[1] == "'MARKER'":
                    in_int = f[2] == "'INTORG'"
                    continue
                name = f[0]
                if name not in lo:
                    cols.append(name)
                    lo[name], hi[name] = 0.0, np.inf
                if in_int:
                    integer.add(name)
                for r, v in zip(f[1::2], f[2::2]):
                    coef[(r, name)] = float(v)
            elif section == "RHS":
                for r, v in zip(f[1::2], f[2::2]):
                    rhs[r] = float(v)
            elif section == "BOUNDS":
                kind, name, val = f[0], f[2], float(f[3])
                if kind == "UP":
                    hi[name] = val
                elif kind == "LO":
                    lo[name] = val
                elif kind == "FX":
                    lo[name] = hi[name] = val
    return rows, kinds, cols, integer, coef, rhs, lo, hi


def main():
    model, out = sys.argv[1], sys.argv[2]
    rows, kinds, cols, integer, coef, rhs, lo, hi = parse(model)
    index = {c: i for i, c in enumerate(cols)}
    objective = [r for r in rows if kinds[r] == "N"][0]
    c = np.zeros(len(cols))
    cons = [r for r in rows if kinds[r] != "N"]
    a = np.zeros((len(cons), len(cols)))
    rpos = {r: i for i, r in enumerate(cons)}
    for (r, name), v in coef.items():
        if r == objective:
            c[index[name]] = v
        else:
            a[rpos[r], index[name]] = v
    lb = np.full(len(cons), -np.inf)
    ub = np.full(len(cons), np.inf)
    for r in cons:
        b = rhs.get(r, 0.0)
        if kinds[r] in ("L", "E"):
            ub[rpos[r]] = b
        if kinds[r] in ("G", "E"):
            lb[rpos[r]] = b
    res = milp(
        c,
        constraints=LinearConstraint(a, lb, ub) if cons else None,
        integrality=np.array([1 if name in integer else 0 for name in cols]),
        bounds=Bounds([lo[n] for n in cols], [hi[n] for n in cols]),
    )
    if res.x is None:
        sys.stderr.write(f"no solution: {res.message}\n")
        sys.exit(1)
    with open(out, "w") as fh:
        for name, v in zip(cols, res.x):
            fh.write(f"{name} {v:.9g}\n")


if __name__ == "__main__":
    main()
