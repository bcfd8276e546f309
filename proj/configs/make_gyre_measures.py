"""Writes the double-gyre initial and target weight files.

Each measure is uniform over the cells whose centers fall inside an ellipse
around one gyre core: left gyre for the initial measure, right gyre for the
target. These stand in for the almost-invariant sets of the flow.
"""
import pathlib

NX, NY = 32, 16
LOWER, UPPER = (0.0, 0.0), (2.0, 1.0)
RX, RY = 0.35, 0.3


def core(cx, cy):
    w = []
    for iy in range(NY):
        for ix in range(NX):
            x = LOWER[0] + (ix + 0.5) * (UPPER[0] - LOWER[0]) / NX
            y = LOWER[1] + (iy + 0.5) * (UPPER[1] - LOWER[1]) / NY
            w.append(1.0 if ((x - cx) / RX) ** 2 + ((y - cy) / RY) ** 2 <= 1.0 else 0.0)
    total = sum(w)
    return [v / total for v in w]


here = pathlib.Path(__file__).parent
for name, (cx, cy) in {"double_gyre_initial.txt": (0.5, 0.5), "double_gyre_target.txt": (1.5, 0.5)}.items():
    weights = core(cx, cy)
    (here / name).write_text("# cell weights, axis 0 fastest, 32x16 cells on [0,2]x[0,1]\n"
                             + "\n".join(repr(v) for v in weights) + "\n")
