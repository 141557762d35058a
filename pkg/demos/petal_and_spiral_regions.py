"""Vote over the parameter regions used for the petal and the spiral examples.

Synthetic points replace the scanned clusters: 981 samples of a stretched
petal with n = 50, and two turns of a generalized spiral.
"""

import time

import numpy as np

from feature_curves import curves as C
from feature_curves.hough import build_grid, detect_curve, sample_curve


def petal():
    fam = C.make_petal(50, stretched=True)
    region = C.ParameterRegion([121, 0.43], [122, 0.45], [0.025, 0.005])
    grid = build_grid(region)
    print(f"petal grid J = {grid.J}, {grid.n_cells} cells")

    truth = np.array([121.44, 0.4412])
    pts = sample_curve(fam, truth, 981, rng=np.random.default_rng(0))
    t0 = time.perf_counter()
    det = detect_curve(pts, fam, region)
    print(f"  truth cell {grid.cell_of(truth)}, argmax {det.cell_index}, "
          f"{det.score}/981 votes, runner-up {det.runner_up}, {time.perf_counter() - t0:.1f}s")
    print(f"  {det.equation}")


def spiral():
    fam = C.make_spiral(generalized=True)
    region = C.ParameterRegion([0.35, 0.1, 0.0032], [0.45, 0.15, 0.0048],
                               [0.01, 0.01, 0.004])
    print(f"spiral grid J = {build_grid(region).J}")
    pts = sample_curve(fam, [0.35, 0.1, 0.0032], 300, turns=2)
    det = detect_curve(pts, fam, region)
    print(f"  argmax cell centre {tuple(round(float(x), 6) for x in det.lam)}, "
          f"{det.score}/300 votes")


if __name__ == "__main__":
    petal()
    spiral()
