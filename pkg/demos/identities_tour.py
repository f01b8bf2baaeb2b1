"""Exact bracket structure and the divergence identity on the Heisenberg and Engel systems."""
import numpy as np

from subhessian import engel, heisenberg
from subhessian.fields import check_conditions
from subhessian.identities import principal_minor_identity, verify_divergence_identity
from subhessian.sympoly import Polynomial


def main():
    rng = np.random.default_rng(0)
    for S in (heisenberg(1), engel()):
        rep = check_conditions(S, rng.uniform(-1, 1, size=(8, S.n)))
        print(f"{S.name}: brackets [X1,X2] = {S.bracket(0, 1)}")
        print(f"  anti-self-adjoint {all(rep.anti_self_adjoint)}, Hormander step {rep.hormander_step}, "
              f"second commutators vanish {rep.step2_vanishing}")

    x1, x2, x3 = (Polynomial.variable(3, j) for j in range(3))
    u = x1**3 * x3 - x2**4 + x1 * x2 * x3
    for r in verify_divergence_identity(heisenberg(1), u):
        print(f"{r.name}: {r.status}")

    x = [Polynomial.variable(4, j) for j in range(4)]
    for r in verify_divergence_identity(engel(), x[0] ** 2 * x[3]):
        print(f"engel {r.name}: residual {r.residual}")

    M = rng.standard_normal((4, 4))
    lhs, rhs = principal_minor_identity(M)
    print(f"sum of 2x2 principal minors {lhs:.15f}")
    print(f"symmetric part plus 1/4 commutators {rhs:.15f}")


if __name__ == "__main__":
    main()
