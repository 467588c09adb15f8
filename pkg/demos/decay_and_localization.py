"""How phi0(t v) concentrates near the locus where s_v vanishes.

Along a path leaving the locus, log|phi0(t v)| falls off like -2 pi h t^2;
on the locus itself there is no Gaussian decay.
"""
import numpy as np

from supertheta.geometry import Chart, base_point
from supertheta.theta import decay_rate, growth_degree, localization_scan

gram = np.diag([1.0, 1.0, -1.0, -1.0])
chart = Chart(base_point(gram))
v = np.array([1.0, 0.0, 0.0, 0.0])  # the base point lies on the locus of v
ts = np.linspace(1.0, 20.0, 40)
path = [np.array([s, 0.3j * s]) for s in np.linspace(0.0, 0.6, 4)]

rows = localization_scan(chart, path, v, ts)
for k, u in enumerate(path):
    mine = [r for r in rows if r["index"] == k]
    print(f"u = {np.round(u, 3)}  h = {mine[0]['h']:.4f}  "
          f"log|phi0| at t=1, 10, 20: {mine[0]['log_abs_phi0']:.2f}, "
          f"{mine[18]['log_abs_phi0']:.2f}, {mine[-1]['log_abs_phi0']:.2f}")
    if mine[0]["h"] > 0:
        fit, pred = decay_rate(chart, u, v, ts)
        print(f"    fitted rate {fit:.6f}, 2 pi h = {pred:.6f}")
        print("    degree of the polynomial prefactor:", growth_degree(chart, u, v, ts))
