"""Run the verification battery on every shipped config and print one line per check.

The exit status is 3 when any check fails, matching the CLI's ``verify``.
"""

import argparse
import sys
from pathlib import Path

from gaussbayes.config import load_config
from gaussbayes.experiments import verify_problem

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("configs", nargs="*", help="TOML configs (default: configs/*.toml)")
    args = parser.parse_args(argv)

    paths = [Path(p) for p in args.configs] or sorted((ROOT / "configs").glob("*.toml"))
    failed = 0
    for path in paths:
        cfg = load_config(path)
        problem = cfg.problem()
        print(f"# {path.name} (sigma0_sq = {problem.prior.variance:g})")
        for result in verify_problem(problem, cfg.basis_list(problem), cfg.verify, cfg.oracle):
            print(result.line())
            failed += not result.passed
    print(f"# {failed} failed checks")
    return 3 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
