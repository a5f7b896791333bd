"""Convergence on the manufactured Stokes solution.

Solves the source problem with CR, ECR and RT on levels 3..6 and prints
every error (divided by ||f||) with its observed order.  The plain broken
gradient error of CR/ECR drops like h; the distances to the special
interpolants (supercloseness) and the K_h-recovered fields drop like h^2.

    python3 demos/source_convergence.py [max_level]
"""

import sys

from crstokes.experiments import RunConfig, run_source

top = int(sys.argv[1]) if len(sys.argv) > 1 else 6

for element in ("cr", "ecr", "rt"):
    table = run_source(RunConfig("source", element, (3, top)))
    names = list(table.reports[0].metrics)
    print(f"\n{element.upper()}")
    print("level " + "".join(f"{n:>22s}" for n in names))
    for i, rep in enumerate(table.reports):
        cells = []
        for n in names:
            r = table.rates[n][i]
            cells.append(f"{rep.metrics[n]:12.4e} ({'  -- ' if r is None else format(r, '5.2f')})")
        print(f"{rep.level:5d} " + "".join(f"{c:>22s}" for c in cells))
