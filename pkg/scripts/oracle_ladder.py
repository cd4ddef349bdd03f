"""Truncation study for the squeezing oracle: residuals at each Fock dimension.

For every prior variance and dimension it prints the trace deficit of rho0,
the oracle MSL, and the largest orthogonality and excess-identity residuals
over the homodyne and q^2/p^2 bases. Dimensions above 960 take minutes.
"""

import argparse
import math
import sys
import time

from gaussbayes.bayes import EstimationProblem, GaussianPrior
from gaussbayes.experiments import excess_identity_residual, orthogonality_residual
from gaussbayes.fock import oracle_at
from gaussbayes.gaussian import ParametricGaussianModel, make_thermal, make_vacuum
from gaussbayes.solver import homodyne_power_basis, resolve_basis, solve_projected_spm


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--var0", type=float, nargs="+", default=[0.05, 0.1, 0.3])
    parser.add_argument("--dims", type=int, nargs="+", default=[60, 120, 240, 480, 960])
    parser.add_argument("--nbar", type=float, default=0.0, help="thermal occupation of the probe")
    args = parser.parse_args(argv)

    probe = make_thermal(args.nbar) if args.nbar > 0 else make_vacuum()
    print("var0,d,trace_deficit,global_msl,orthogonality,excess_identity,seconds")
    for var0 in args.var0:
        problem = EstimationProblem(ParametricGaussianModel.squeezing(probe), GaussianPrior(0.0, var0))
        bases = [
            homodyne_power_basis(0.0, (0, 2)),
            homodyne_power_basis(math.pi / 2, (0, 2)),
            resolve_basis("quadratic-qp"),
        ]
        spms = [solve_projected_spm(problem, b) for b in bases]
        for d in args.dims:
            start = time.perf_counter()
            sol = oracle_at(problem, d, trace_tol=math.inf)
            orth = max(orthogonality_residual(s, sol) for s in spms)
            excess = max(excess_identity_residual(s, sol) for s in spms)
            print(f"{var0:g},{d},{sol.rho0.info['trace_deficit']:.3e},{sol.msl:.12f},{orth:.3e},{excess:.3e},"
                  f"{time.perf_counter() - start:.1f}", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
