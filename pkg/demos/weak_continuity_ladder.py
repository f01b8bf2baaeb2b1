"""Mollification ladder for a max-of-quadratics target on the first Heisenberg group."""
from fractions import Fraction

from subhessian import heisenberg
from subhessian.measures import Cutoff, Domain, MaxOfQuadratics, local_bounds, weak_continuity_experiment
from subhessian.sympoly import variables


def main():
    x1, x2, x3 = variables(3)
    q1 = Fraction(1, 2) * (x1 * x1 + x2 * x2)
    ramp = Fraction(3, 10) * x1 - Fraction(3, 20) * x2 + Fraction(1, 10) * x3 - Fraction(1, 20)
    target = MaxOfQuadratics(q1, q1 + ramp)
    domain = Domain.cube(3, 0.75, shell=0.24)
    S = heisenberg(1)
    ladder = (0.2, 0.1, 0.05, 0.025)
    for res in weak_continuity_experiment(S, target, ladder, Cutoff((0, 0, 0), 0.5), (0.0, 0.75),
                                          domain=domain, h=0.02):
        print(f"alpha = {res.alpha}")
        print(res.to_csv(), end="")
    for eps in ladder:
        rep = local_bounds(S, target.mollified(eps), domain.inner(), domain, h=0.02)
        print(f"eps = {eps}: energy over squared L1 mass {rep.f2_ratio:.4f}")


if __name__ == "__main__":
    main()
