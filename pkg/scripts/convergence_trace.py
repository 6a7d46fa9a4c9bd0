#!/usr/bin/env python3
"""Dump the two-stage descent trace and the per-sweep SDP values for one case.

    python scripts/convergence_trace.py --state ghz --n 4 --structure part:3 --trace gd.csv
"""

import argparse
import logging

from entcert import CertifyConfig, GdConfig, NoiseModel, StructureSpec, certify, family, make_state
from entcert.ensemble import init_ensemble, run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--state", default="ghz")
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--k", type=int, default=None, help="excitations for Dicke states")
    ap.add_argument("--structure", default="full-sep")
    ap.add_argument("--vertices", type=int, default=100)
    ap.add_argument("--epochs", type=int, default=1000)
    ap.add_argument("--trace", default="gd_trace.csv")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(relativeCreated)8.0f ms  %(message)s")

    rho = make_state(args.state, args.n, args.k)
    sigma = NoiseModel.white(rho.dims).endpoint
    spec = StructureSpec.parse(args.structure, args.n)
    gd = GdConfig(max_iterations=args.epochs)
    ens = init_ensemble(family(spec), args.vertices, dims=rho.dims)
    with open(args.trace, "w", newline="") as fh:
        res = run(ens, rho, sigma, gd, trace_file=fh)
    print(f"descent: {res.stage1_iterations} + {res.stage2_iterations} iterations, "
          f"segment distance {res.segment_distance:.3g}, trace in {args.trace}")

    cert = certify(rho, None, spec, CertifyConfig(per_partition=args.vertices, gd=gd))
    for k, t in enumerate(cert.sweeps):
        print(f"sweep {k:2d}  t = {t:.8f}")
    print(f"certified t = {cert.t_certified:.6f}")


if __name__ == "__main__":
    main()
