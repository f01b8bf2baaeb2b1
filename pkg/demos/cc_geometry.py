"""Sub-Riemannian distances and ball volumes on the first Heisenberg group."""
import math

from subhessian import heisenberg
from subhessian.geometry import cc_distance, exponent_report, homogeneous_dimension


def main():
    S = heisenberg(1)
    for z in (0.25, 1.0, 4.0):
        T, path = cc_distance(S, [0, 0, 0], [0, 0, z])
        # the optimal loop is a circle enclosing area z
        print(f"d(0, (0,0,{z})) = {T:.4f}   circle length {math.sqrt(4 * math.pi * z):.4f}   "
              f"{len(path.durations)} segments")
    fit = homogeneous_dimension(S, [0, 0, 0], [0.5, 1.0, 2.0], samples=2000, seed=1)
    print(fit.to_csv(), end="")
    print(f"fitted dimension {fit.Q_fit:.3f}, doubling with Q = {fit.Q_int}: {fit.doubling_ok}")
    print(exponent_report(1, 2, 4).to_dict())


if __name__ == "__main__":
    main()
