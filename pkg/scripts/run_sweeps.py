"""Write the prior-variance sweeps behind the relative-MSL curves as CSV files.

Usage::

    python scripts/run_sweeps.py                      # all shipped sweep configs
    python scripts/run_sweeps.py configs/fig2_vacuum.toml --outdir results
"""

import argparse
import sys
import time
from pathlib import Path

from gaussbayes.config import ConfigError, load_config
from gaussbayes.experiments import format_csv, run_sweep

ROOT = Path(__file__).resolve().parent.parent
DEFAULT = ("fig1_coherent.toml", "fig2_vacuum.toml", "fig2_thermal.toml")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("configs", nargs="*", help="TOML configs (default: the shipped figure sweeps)")
    parser.add_argument("--outdir", default=str(ROOT / "results"), help="directory for the CSV files")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args(argv)

    paths = [Path(p) for p in args.configs] or [ROOT / "configs" / name for name in DEFAULT]
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for path in paths:
        try:
            cfg = load_config(path)
        except ConfigError as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            return 1
        start = time.perf_counter()
        rows = run_sweep(cfg, args.workers)
        target = outdir / (path.stem + ".csv")
        target.write_text(format_csv(rows))
        flagged = sum(bool(r["errors"]) for r in rows)
        print(f"{path.name}: {len(rows)} rows -> {target} ({flagged} flagged, {time.perf_counter() - start:.1f} s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
