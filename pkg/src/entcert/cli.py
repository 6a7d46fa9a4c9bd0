"""Command-line front end: ``entcert certify | verify | table | partitions``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from . import reference
from .certify import Certificate, CertifyConfig, certify, verify
from .ensemble import GdConfig
from .linalg import DensityMatrix
from .partitions import StructureSpec, family
from .sdp import CertificationError
from .states import NoiseModel, load_state, make_state

log = logging.getLogger("entcert")

EXIT_OK, EXIT_IO, EXIT_VERIFY, EXIT_SOLVER = 0, 1, 2, 3
CSV_COLUMNS = ["case", "structure", "t_ours", "t_paper", "delta", "gd_seconds", "sdp_seconds", "status"]


@dataclass
class RunConfig:
    state: str
    n: int | None = None
    noise: str = "white"
    structure: str = "full-sep"
    vertices: int = 100
    epochs: int | None = None
    sweeps: int | None = None
    seed: int = 0
    threshold_r: float | None = None
    mub: str = "auto"
    solver: str = "clarabel"
    out: str | None = None

    def resolve_state(self) -> DensityMatrix:
        if self.state.endswith(".json") or Path(self.state).is_file():
            rho = load_state(self.state)
            if self.n is not None and self.n != rho.n:
                raise ValueError(f"--n {self.n} does not match the {rho.n} parties in {self.state}")
            return rho
        if self.n is None:
            raise ValueError("--n is required for built-in states")
        kind, _, k = self.state.partition(":")
        return make_state(kind, self.n, int(k) if k else None)

    def resolve_noise(self, rho: DensityMatrix) -> NoiseModel:
        if self.noise == "white":
            return NoiseModel.white(rho.dims)
        if self.noise == "biased-product":
            if any(x != 2 for x in rho.dims):
                raise ValueError("biased-product noise needs qubits")
            return NoiseModel.biased_product(rho.n)
        sigma = load_state(self.noise)
        if sigma.dims != rho.dims:
            raise ValueError(f"noise layout {sigma.dims} does not match state {rho.dims}")
        return NoiseModel(sigma, self.noise)

    def certify_config(self, n: int) -> CertifyConfig:
        mub, sample = self.mub, None
        if mub.startswith("sample="):
            mub, sample = "on", int(mub.split("=", 1)[1])
        elif mub not in ("auto", "on", "off"):
            raise ValueError(f"bad --mub value {self.mub!r}")
        base = CertifyConfig.for_parties(n)
        epochs = self.epochs if self.epochs is not None else base.gd.max_iterations
        sweeps = self.sweeps if self.sweeps is not None else base.max_sweeps
        gd = GdConfig(max_iterations=epochs, seed=self.seed, threshold_r=self.threshold_r)
        return CertifyConfig(per_partition=self.vertices, gd=gd, max_sweeps=sweeps, sweep_tol=base.sweep_tol,
                             mub=mub, mub_sample=sample, solver=self.solver, seed=self.seed)


def run_certify(cfg: RunConfig) -> tuple[int, dict]:
    """Certify one case; returns (exit code, report document)."""
    rho = cfg.resolve_state()
    noise = cfg.resolve_noise(rho)
    spec = StructureSpec.parse(cfg.structure, rho.n)
    report: dict = {"config": asdict(cfg), "certificate": None, "verification": None, "comparison": None}
    case = reference.lookup(cfg.state, rho.n, str(spec), cfg.noise)
    try:
        cert = certify(rho, noise, spec, cfg.certify_config(rho.n))
    except CertificationError as exc:
        report["error"] = str(exc)
        return EXIT_SOLVER, report
    check = verify(cert, rho, noise)
    report["certificate"] = cert.to_dict()
    report["verification"] = {"passed": check.passed, "checks": [asdict(c) for c in check.checks]}
    report["timings"] = cert.timings
    if case is not None:
        report["comparison"] = {"case": case.label, "t_paper": case.t_paper,
                                "delta": cert.t_certified - case.t_paper}
    return (EXIT_OK if check.passed else EXIT_VERIFY), report


def _write(doc: dict, path: str | None) -> None:
    text = json.dumps(doc, indent=None)
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text + "\n")


def cmd_certify(args) -> int:
    cfg = RunConfig(args.state, args.n, args.noise, args.structure, args.vertices, args.epochs,
                    args.sweeps, args.seed, args.threshold_r, args.mub, args.solver, args.out)
    try:
        code, report = run_certify(cfg)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    _write(report, cfg.out)
    cert = report.get("certificate")
    if cert is not None:
        line = f"t_certified = {cert['t_certified']:.6f}  residual = {cert['residual']:.2e}  fidelity = {cert['fidelity']:.8f}"
        if report["comparison"]:
            line += f"  (published {report['comparison']['t_paper']})"
        print(line, file=sys.stderr)
    else:
        print(f"solver failure: {report.get('error')}", file=sys.stderr)
    return code


def cmd_verify(args) -> int:
    try:
        doc = json.loads(Path(args.certificate).read_text())
        echo = doc.get("config", {}) if "certificate" in doc else {}
        cert = Certificate.from_dict(doc["certificate"] if "certificate" in doc else doc)
        cfg = RunConfig(args.state or echo.get("state"), args.n if args.n is not None else echo.get("n"),
                        args.noise or echo.get("noise", "white"))
        if cfg.state is None:
            raise ValueError("no --state given and the file carries no config echo")
        rho = cfg.resolve_state()
        noise = cfg.resolve_noise(rho)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    report = verify(cert, rho, noise)
    print(report.table())
    return EXIT_OK if report.passed else EXIT_VERIFY


def run_case(case: reference.Case, vertices: int, epochs: int | None, sweeps: int | None, seed: int,
             out_dir: str | None) -> dict:
    cfg = RunConfig(case.state, case.n, case.noise, case.structure, vertices,
                    epochs if epochs is not None else case.default_epochs, sweeps, seed)
    row = {"case": case.label, "structure": case.structure, "t_ours": "", "t_paper": case.t_paper,
           "delta": "", "gd_seconds": "", "sdp_seconds": "", "status": ""}
    try:
        code, report = run_certify(cfg)
    except Exception as exc:  # a failing row must not stop the table
        row["status"] = f"error: {exc}"
        return row
    cert = report.get("certificate")
    if cert is None:
        row["status"] = f"solver failure: {report.get('error')}"
        return row
    row.update(t_ours=f"{cert['t_certified']:.6f}", delta=f"{cert['t_certified'] - case.t_paper:+.6f}",
               gd_seconds=f"{cert['timings']['gd_seconds']:.1f}", sdp_seconds=f"{cert['timings']['sdp_seconds']:.1f}",
               status="verified" if code == EXIT_OK else "verification failed")
    if out_dir:
        name = f"{case.state.replace(':', '')}{case.n}_{case.noise}_{case.structure.replace(':', '')}.json"
        Path(out_dir, name).write_text(json.dumps(report))
    return row


def worker_width(requested: int | None) -> int:
    cap = int(os.environ.get("ENTCERT_THREADS", os.cpu_count() or 1))
    return max(1, min(requested or cap, cap))


def cmd_table(args) -> int:
    cases = reference.TABLES[args.table]
    if args.rows:
        wanted = set(args.rows.split(","))
        cases = [c for c in cases if c.structure in wanted or c.label in wanted]
    if args.out_dir:
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    jobs = [(c, args.vertices, args.epochs, args.sweeps, args.seed, args.out_dir) for c in cases]
    width = worker_width(args.workers)
    if width == 1:
        rows = [run_case(*j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=width) as pool:
            rows = list(pool.map(run_case, *zip(*jobs)))
    out = open(args.csv, "w", newline="") if args.csv else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_partitions(args) -> int:
    try:
        fam = family(StructureSpec.parse(args.structure, args.n))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"{fam.spec} on {args.n} parties: {len(fam)} maximal partitions "
          + ", ".join(f"{k} x{v}" for k, v in fam.type_counts.items()))
    for p in fam.maximal_partitions:
        print(f"  {p}  ({p.type_string})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="entcert", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def state_flags(p, required: bool):
        p.add_argument("--state", required=required,
                       help="ghz | w | cluster | dicke:K | path to a JSON state file")
        p.add_argument("--n", type=int, help="number of qubits for built-in states")
        p.add_argument("--noise", default=None if not required else "white",
                       help="white | biased-product | path to a JSON state file")

    p = sub.add_parser("certify", help="certify one state and write a JSON report")
    state_flags(p, True)
    p.add_argument("--structure", default="full-sep",
                   help='full-sep | part:K | prod:H | sq:Q | tough:L | custom:"3|2,4|1"')
    p.add_argument("--vertices", type=int, default=100, help="random vertices per maximal partition")
    p.add_argument("--epochs", type=int, default=None, help="gradient-descent iterations per stage")
    p.add_argument("--sweeps", type=int, default=None, help="maximum SDP solves")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold-r", type=float, default=None, dest="threshold_r",
                   help="segment-distance threshold (default 1%% of |rho - sigma|)")
    p.add_argument("--mub", default="auto", help="auto | on | off | sample=K")
    p.add_argument("--solver", default="clarabel", choices=["clarabel", "cvxpy"])
    p.add_argument("--out", default=None, help="report path (default: stdout)")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("verify", help="check a certificate or report against a state")
    p.add_argument("certificate")
    state_flags(p, False)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("table", help="reproduce a published table as CSV")
    p.add_argument("table", choices=sorted(reference.TABLES))
    p.add_argument("--rows", default=None, help="comma-separated structures or case labels to run")
    p.add_argument("--vertices", type=int, default=100)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--sweeps", type=int, default=None, help="maximum SDP solves")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--csv", default=None, help="CSV path (default: stdout)")
    p.add_argument("--out-dir", default=None, dest="out_dir", help="directory for per-row reports")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("partitions", help="list the maximal partitions of a structure class")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--structure", required=True)
    p.set_defaults(func=cmd_partitions)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
