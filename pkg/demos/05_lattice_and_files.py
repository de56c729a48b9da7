"""A lattice ball against the infinite-line answer, plus the file formats.

On the integer line the heat kernel is classical:

    K(0, y; t) = exp(-2t) I_|y|(2t)

with I_k the modified Bessel function.  A finite ball around the origin
reproduces it as long as the heat has not reached the rim.  The second
half of the script exercises the on-disk formats the command line tool
speaks: edge lists in, matrices and a JSON report out.
"""

import json
import math
import tempfile
from pathlib import Path

import numpy as np

from heatkern import (
    integer_line,
    ball_truncate,
    dirac_parametrix,
    build_heat_kernel,
    load_graph,
    write_matrix_csv,
    read_matrix_csv,
)
from heatkern.cli import main as cli_main


def bessel_i(k, x, terms=60):
    # power series, plenty for the arguments below
    s = 0.0
    for m in range(terms):
        s += (x / 2.0) ** (2 * m + k) / (math.factorial(m) * math.factorial(m + k))
    return s


# ---- ball vs infinite line ----------------------------------------------
space, cond, _ = integer_line(25)
space, cond, _ = ball_truncate(space, cond, 0, 20)
print(f"ball of radius 20 in the line: {space.n} points")

res = build_heat_kernel(dirac_parametrix(space, cond, horizon=2.0),
                        T=2.0, tol=1e-10)
K = res.K.at(2.0)
i0 = space.index(0)
print("\n  y    K(0,y;2)         exact            |diff|")
worst = 0.0
for y in (0, 1, 2, 5, 9):
    got = K[i0, space.index(y)]
    want = math.exp(-4.0) * bessel_i(abs(y), 4.0)
    worst = max(worst, abs(got - want))
    print(f"  {y}   {got:.12e}  {want:.12e}   {abs(got - want):.2e}")
print(f"worst deviation {worst:.2e} "
      "(boundary effects are exponentially small at this radius)")

# ---- file formats --------------------------------------------------------
tmp = Path(tempfile.mkdtemp(prefix="heatkern_demo_"))

edges = tmp / "triangle.edges"
edges.write_text(
    "# point point weight, one edge per line\n"
    "a b 1.0\n"
    "b c 2.0\n"
    "a c 0.5\n")

code = cli_main(["build", "--edges", str(edges), "--t", "1.0",
                 "--tol", "1e-10", "--out", str(tmp / "run")])
report = json.loads((tmp / "run" / "report.json").read_text())
print(f"\ncli build exit code {code}")
for key in ("n_points", "terms_used", "truncation_bound", "exit_reason"):
    print(f"  {key}: {report[key]}")

# matrices round-trip byte for byte
space3, _, _ = load_graph(edges)
blocks = read_matrix_csv(tmp / "run" / "matrices.csv", space3)
K1 = blocks[1.0]
print(f"\nK(a,a;1) from disk = {K1[0, 0]:.12f}")

again = tmp / "again.csv"
write_matrix_csv(again, space3, sorted(blocks.items()))
same = again.read_bytes() == (tmp / "run" / "matrices.csv").read_bytes()
print(f"write(read(csv)) identical: {same}")

# the oracle-compare subcommand re-checks the build independently
code = cli_main(["oracle-compare", "--edges", str(edges), "--tol", "1e-8",
                 "--out", str(tmp / "check")])
report = json.loads((tmp / "check" / "report.json").read_text())
print(f"\noracle-compare exit code {code}, "
      f"max deviation {report['max_oracle_dev']:.3e}")
