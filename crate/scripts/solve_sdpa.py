"""Solve an exported measurement problem with cvxpy (dual SDPA form)."""
import sys

import cvxpy as cp
import numpy as np


def read(path):
    lines = [l for l in open(path) if not l.startswith(('"', '*'))]
    toks = " ".join(lines).replace(",", " ").replace("{", " ").replace("}", " ").split()
    mdim, nblock = int(toks[0]), int(toks[1])
    sizes = [int(t) for t in toks[2:2 + nblock]]
    pos = 2 + nblock
    c = np.array([float(t) for t in toks[pos:pos + mdim]])
    pos += mdim
    F = [[np.zeros((abs(s), abs(s))) for s in sizes] for _ in range(mdim + 1)]
    while pos < len(toks):
        k, b, i, j = (int(t) for t in toks[pos:pos + 4])
        v = float(toks[pos + 4])
        pos += 5
        F[k][b - 1][i - 1, j - 1] = v
        F[k][b - 1][j - 1, i - 1] = v
    return sizes, c, F


def main(path):
    sizes, c, F = read(path)
    Y = [cp.Variable((s, s), symmetric=True) for s in sizes]
    dot = lambda k: sum(cp.trace(F[k][b] @ Y[b]) for b in range(len(sizes)))
    cons = [y >> 0 for y in Y] + [dot(k + 1) == c[k] for k in range(len(c))]
    prob = cp.Problem(cp.Maximize(dot(0)), cons)
    prob.solve(solver=cp.CLARABEL)
    print(f"optimal Pc = {prob.value:.10f}")


if __name__ == "__main__":
    main(sys.argv[1])
