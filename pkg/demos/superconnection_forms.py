"""Gaussian-type Chern forms on the domain of a signature (2, 2) space.

Builds the superconnection at a point, prints the form phi(v) degree by
degree, and compares the degree-2 part with the closed formula in h(s_v).
"""
import numpy as np

from supertheta.chernforms import chern_top_todd, closedness_residual, phi0_at, phi2_explicit, phi_at
from supertheta.exterior import project_degree, wedge
from supertheta.geometry import Chart, base_point, h_section_jet, majorant_at

gram = np.diag([1.0, 1.0, -1.0, -1.0])
chart = Chart(base_point(gram))
u = np.array([0.15 + 0.05j, -0.1j])
z = chart.point(u)

v = np.array([0.6, 0.2, 0.3, -0.1])
h = h_section_jet(chart, v, u).value.real
print("Q(v, v) =", v @ gram @ v, " h_z(s_v) =", round(h, 6), " q_z(v) =", round(majorant_at(z).q(v), 6))

phi = phi_at(chart, u, v)
for d in range(0, 5, 2):
    print(f"degree {d}: max |coefficient| = {project_degree(phi, d).norm():.3e}")

# the degree-2 part from the h-jet alone
diff = (project_degree(phi, 2) - phi2_explicit(chart, u, v)).norm()
print("engine vs closed formula, degree 2:", f"{diff:.2e}")

# phi(0) is the top Chern form times the inverse Todd form of the dual line
c_top, td_inv = chern_top_todd(chart, u)
print("phi(0) - c_top ^ Td^-1:", f"{(phi0_at(chart, u, np.zeros(4)) - wedge(c_top, td_inv)).norm():.2e}")

# closed, up to the finite-difference error
print("|d phi(v)| by central differences:", f"{closedness_residual(chart, u, v):.2e}")

# two vectors: the form of the pair is the wedge product
w = np.array([0.1, -0.4, 0.2, 0.3])
pair = phi_at(chart, u, [v, w])
print("phi(v, w) - phi(v) ^ phi(w):", f"{(pair - wedge(phi, phi_at(chart, u, w))).norm():.2e}")
