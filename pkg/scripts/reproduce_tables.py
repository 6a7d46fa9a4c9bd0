#!/usr/bin/env python3
"""Rerun the benchmark tables and write one CSV per table.

    python scripts/reproduce_tables.py --tables I II III --out results/
    ENTCERT_THREADS=4 python scripts/reproduce_tables.py --tables IV V --workers 4

Five-qubit tables (IV, V) take hours on a single core.
"""

import argparse
import sys
from pathlib import Path

from entcert import cli, reference


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--tables", nargs="+", default=["I", "II", "III"], choices=sorted(reference.TABLES))
    ap.add_argument("--out", default="results")
    ap.add_argument("--vertices", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--keep-reports", action="store_true", help="also write one JSON report per row")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    for table in args.tables:
        argv = ["table", table, "--vertices", str(args.vertices), "--seed", str(args.seed),
                "--csv", str(out / f"table_{table}.csv")]
        if args.workers:
            argv += ["--workers", str(args.workers)]
        if args.keep_reports:
            argv += ["--out-dir", str(out / f"table_{table}")]
        print(f"table {table} -> {out / f'table_{table}.csv'}", file=sys.stderr)
        status |= cli.main(argv)
    return status


if __name__ == "__main__":
    sys.exit(main())
