"""The finite Weil representation on a few discriminant forms."""
import numpy as np

from supertheta.quadlattice import discriminant_group
from supertheta.sampling import reference_lattice
from supertheta.weilrep import finite_weil, relation_residuals

np.set_printoptions(precision=4, suppress=True)

for name in ("A1", "A2", "D1"):
    disc = discriminant_group(reference_lattice(name))
    rep = finite_weil(disc)
    print(f"{name}: reps {[[str(x) for x in r] for r in disc.reps]}, q {[str(q) for q in disc.qvals]}, "
          f"level {disc.level}, gamma = e(2 pi i {rep.data.gamma_exp}/8)")
    print("T diagonal:", np.diag(rep.T_matrix))
    print("S =\n", rep.S_matrix)
    res = relation_residuals(rep)
    print("S^2 acts as", np.round(res["S2_phase"], 6), "times mu -> -mu;",
          "max residual", max(v for k, v in res.items() if k != "S2_phase"))
    print()
