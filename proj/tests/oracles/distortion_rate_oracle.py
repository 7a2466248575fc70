#!/usr/bin/env python3
"""Independent distortion-rate oracle for small discrete sources.

Solves  min_Q E[d(S, S')]  s.t.  I(S; S') <= r  directly as a convex program
(relative-entropy cone), with no Blahut-Arimoto style alternating updates.
Emits a C++ header with the instances and frozen D(r) values.

    python3 distortion_rate_oracle.py > toy_instances.hpp
"""
import math

import cvxpy as cp
import numpy as np

SEED = 20261016
RATE_FRACTIONS = (0.0, 0.15, 0.4, 0.75)


def distortion_rate(p, d, r_bits):
    n, m = d.shape
    q = cp.Variable((n, m), nonneg=True)
    joint = cp.multiply(p[:, None], q)
    out = cp.sum(joint, axis=0)
    prod = cp.vstack([p[i] * out for i in range(n)])
    info_nats = cp.sum(cp.rel_entr(joint, prod))
    cons = [cp.sum(q, axis=1) == 1, info_nats <= r_bits * math.log(2)]
    prob = cp.Problem(cp.Minimize(cp.sum(cp.multiply(joint, d))), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-11, tol_gap_rel=1e-11,
               tol_feas=1e-11, max_iter=500)
    if r_bits == 0.0:
        # Zero rate forces a single reconstruction for every source letter.
        return float(min(p @ d[:, j] for j in range(m)))
    return float(prob.value)


def main():
    rng = np.random.default_rng(SEED)
    lines = [
        "// Generated by distortion_rate_oracle.py; do not edit.",
        "#pragma once",
        "",
        "#include <array>",
        "#include <vector>",
        "",
        "namespace anonsched::oracle {",
        "",
        "struct ToyDistortionInstance {",
        "  std::vector<double> prior;",
        "  std::vector<std::vector<double>> distortion;",
        "  std::vector<double> rates_bits;",
        "  std::vector<double> expected_distortion;",
        "};",
        "",
        "inline const std::vector<ToyDistortionInstance>& toy_distortion_instances() {",
        "  static const std::vector<ToyDistortionInstance> instances = {",
    ]
    for _ in range(10):
        n = int(rng.integers(2, 4))
        m = int(rng.integers(2, 5))
        p = rng.dirichlet(np.ones(n))
        d = np.round(rng.uniform(0.0, 4.0, size=(n, m)), 3)
        h = -float(np.sum(p * np.log2(p)))
        rates = [round(f * h, 6) for f in RATE_FRACTIONS]
        vals = [distortion_rate(p, d, r) for r in rates]
        fmt = lambda xs: "{" + ", ".join(repr(float(x)) for x in xs) + "}"
        rows = "{" + ", ".join(fmt(row) for row in d) + "}"
        lines.append(f"      {{{fmt(p)},\n       {rows},\n       {fmt(rates)},\n       {fmt(vals)}}},")
    lines += ["  };", "  return instances;", "}", "", "}  // namespace anonsched::oracle", ""]
    print("\n".join(lines))


if __name__ == "__main__":
    main()
