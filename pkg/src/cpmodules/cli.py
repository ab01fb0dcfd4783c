"""Command-line front end.

Exit codes: 0 when the requested property holds, 1 on a mathematical failure,
2 on bad input (unknown command, unreadable or invalid instance file).
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import _linalg as la
from .cpmaps import equivalence_check, is_completely_positive, module_order_leq, operational_cp_check
from .dilation import (
    gns_residuals,
    minimality_check,
    module_stinespring,
    module_stinespring_residuals,
    paschke_gns,
    stinespring,
    stinespring_residuals,
)
from .exceptions import CPModuleError, DimensionMismatch
from .instances import InstanceError, generate_random, parse_instance, serialize
from .radon_nikodym import (
    equivalent_partial_isometry,
    is_pure,
    module_commutant,
    partial_isometry_conditions,
    reduced_stinespring,
    rn_derivative,
)
from .random_instances import make_rng
from .verification import CONSTRUCTION, DERIVED, CheckResult, VerificationReport, run_verification


def _fmt(a, digits=6):
    a = np.asarray(a)
    if np.allclose(a.imag, 0.0, atol=10.0 ** -digits):
        a = a.real
    return np.array2string(np.round(a, digits) + 0.0, precision=digits, suppress_small=True,
                           max_line_width=120)


def _check(name, reference, residuals, bounds, start, **details):
    """CheckResult from named residuals and per-name bounds (booleans pass through)."""
    worst = 0.0
    ok = True
    for key, value in residuals.items():
        bound = bounds.get(key, bounds.get("*"))
        if isinstance(value, bool):
            ok &= value
            continue
        if bound is None:  # informational entry
            continue
        worst = max(worst, float(value))
        if not value <= bound:
            ok = False
    return CheckResult(name, reference, worst, bool(ok), time.perf_counter() - start,
                       {"residuals": residuals, **details})


class _Output:
    def __init__(self, args):
        self.json = args.json

    def say(self, text=""):
        if not self.json:
            print(text)


def cmd_check_cp(args, out, report):
    inst = parse_instance(args.file, args.tol)
    tol = inst.tol(args.tol)
    rng = make_rng(args.seed, 1)
    for name, role in inst.roles.items():
        if role == "phi":
            continue
        phi = inst.maps[name]
        t0 = time.perf_counter()
        verdict = is_completely_positive(phi, tol)
        oracle = operational_cp_check(phi, rng, tol=tol)
        low = min(float(np.min(e)) for row in phi.choi_eigenvalues() for e in row)
        out.say(f"{name}: completely positive: {str(verdict).lower()}  (min Choi eigenvalue {low:.6g})")
        out.say(f"{name}: operational check agrees: {str(verdict == oracle).lower()}")
        report.checks.append(CheckResult(f"cp[{name}]", "Choi matrix positivity", max(0.0, -low), verdict,
                                         time.perf_counter() - t0,
                                         {"min_choi_eigenvalue": low, "operational": oracle}))
    if not report.checks:
        raise InstanceError(InstanceError.INVALID, "instance has no cp or linear maps")


def cmd_choi(args, out, report):
    inst = parse_instance(args.file, args.tol)
    for name, role in inst.roles.items():
        if role == "phi":
            continue
        phi = inst.maps[name]
        entry = {}
        for j, row in enumerate(phi.choi):
            for k, c in enumerate(row):
                ev = np.linalg.eigvalsh(la.herm(c))
                out.say(f"{name} Choi block [{j}][{k}]:\n{_fmt(c)}")
                out.say(f"eigenvalues: {_fmt(ev[::-1])}")
                entry[f"{j},{k}"] = {"matrix": c, "eigenvalues": ev[::-1]}
        report.results[name] = entry


def cmd_dilate(args, out, report):
    inst = parse_instance(args.file, args.tol)
    tol = inst.tol(args.tol)
    cp_names = [n for n, r in inst.roles.items() if r == "cp"]
    for name in cp_names:
        t0 = time.perf_counter()
        phi = inst.maps[name]
        S = stinespring(phi, tol)
        res = {**stinespring_residuals(S), **{f"gns_{k}": v for k, v in gns_residuals(paschke_gns(phi, tol)).items()}}
        res["minimal"] = minimality_check(S, tol)
        out.say(f"{name}: K_phi heights {list(S.K.heights)}")
        report.checks.append(_check(f"stinespring[{name}]", "phi(a) = V* pi(a) V", res, {"*": CONSTRUCTION}, t0,
                                    heights=list(S.K.heights)))
    for name in inst.names("phi"):
        t0 = time.perf_counter()
        M = module_stinespring(inst.maps[name], None, tol)
        res = module_stinespring_residuals(M)
        res["minimal"] = minimality_check(M, tol)
        out.say(f"{name}: K_Phi heights {list(M.K.heights)}, K_phi heights {list(M.S.K.heights)}")
        report.checks.append(_check(f"module_stinespring[{name}]", "Phi(x) = W* pi_Phi(x) V xi", res,
                                    {"*": CONSTRUCTION}, t0, heights=list(M.K.heights)))


def cmd_rn(args, out, report):
    inst = parse_instance(args.file, args.tol)
    tol = inst.tol(args.tol)
    Phi, Psi = inst.ordered_pair()
    t0 = time.perf_counter()
    rn = rn_derivative(Phi, Psi, tol)
    for label, op in (("Delta_1", rn.delta.T1), ("Delta_2", rn.delta.T2)):
        for k, b in enumerate(op.blocks):
            out.say(f"{label} block {k}:\n{_fmt(b)}")
    report.results["delta"] = {"T1": list(rn.delta.T1.blocks), "T2": list(rn.delta.T2.blocks)}
    bounds = {"norm_excess": 1e-9, "J_norm": None, "I_norm": None, "*": DERIVED}
    report.checks.append(_check("rn_derivative", "Delta in pi_Phi(E)' with Psi ~ Phi_sqrt(Delta)",
                                rn.residuals, bounds, t0))


def cmd_compare(args, out, report):
    inst = parse_instance(args.file, args.tol)
    tol = inst.tol(args.tol)
    Phi, Psi = inst.ordered_pair()
    t0 = time.perf_counter()
    below = module_order_leq(Psi, Phi, tol)
    above = module_order_leq(Phi, Psi, tol)
    equiv = equivalence_check(Phi, Psi, tol)
    out.say(f"psi <= phi: {str(below).lower()}")
    out.say(f"phi <= psi: {str(above).lower()}")
    out.say(f"equivalent: {str(equiv).lower()}")
    report.results.update({"psi_leq_phi": below, "phi_leq_psi": above, "equivalent": equiv})
    if equiv:
        iso = equivalent_partial_isometry(Phi, Psi, tol)
        for k, b in enumerate(iso.V.blocks):
            out.say(f"V block {k}:\n{_fmt(b)}")
        report.results["V"] = list(iso.V.blocks)
    report.checks.append(CheckResult("comparable", "pre-order on phi-maps", 0.0, below or above,
                                     time.perf_counter() - t0))


def cmd_isometry(args, out, report):
    inst = parse_instance(args.file, args.tol)
    tol = inst.tol(args.tol)
    Phi, Psi = inst.ordered_pair()
    t0 = time.perf_counter()
    res = equivalent_partial_isometry(Phi, Psi, tol)
    for k, b in enumerate(res.V.blocks):
        out.say(f"constructed V block {k}:\n{_fmt(b)}")
    report.results["V"] = list(res.V.blocks)
    report.checks.append(_check("constructed_V", "V = W_Phi* U_2* W_Psi", res.residuals,
                                {"W_factorization": DERIVED, "*": CONSTRUCTION}, t0))
    M_Phi = module_stinespring(Phi, None, tol)
    M_Psi = module_stinespring(Psi, None, tol)
    for name, op in inst.operators.items():
        t1 = time.perf_counter()
        cond = partial_isometry_conditions(op, M_Phi, M_Psi)
        report.checks.append(_check(f"operator[{name}]", "candidate V from the instance file", cond,
                                    {"*": CONSTRUCTION}, t1))


def cmd_reduce(args, out, report):
    inst = parse_instance(args.file, args.tol)
    tol = inst.tol(args.tol)
    Phi, Psi = inst.ordered_pair()
    t0 = time.perf_counter()
    red = reduced_stinespring(Phi, Psi, tol)
    out.say(f"K_phi heights {list(red.rn.M_Phi.S.K.heights)} -> {list(red.algebra.K.heights)}")
    out.say(f"K_Phi heights {list(red.rn.M_Phi.K.heights)} -> {list(red.module.K.heights)}")
    report.results["reduced_heights"] = {"K_phi": list(red.algebra.K.heights), "K_Phi": list(red.module.K.heights)}
    bounds = {"coisometry": CONSTRUCTION, "minimal": 0.0, "*": DERIVED}
    report.checks.append(_check("reduced_construction", "compression to the support of Delta",
                                red.residuals, bounds, t0))


def cmd_purity(args, out, report):
    inst = parse_instance(args.file, args.tol)
    tol = inst.tol(args.tol)
    for name in inst.names("phi"):
        t0 = time.perf_counter()
        Phi = inst.maps[name]
        M = module_stinespring(Phi, None, tol)
        dim = module_commutant(M, tol).dim
        verdict = is_pure(Phi, tol, M)
        out.say(f"{name}: pure: {str(verdict).lower()}  (commutant dimension {dim})")
        report.checks.append(CheckResult(f"pure[{name}]", "pi_Phi(E)' = C I", 0.0, verdict,
                                         time.perf_counter() - t0, {"commutant_dim": dim}))
    if not report.checks:
        raise InstanceError(InstanceError.INVALID, "instance has no phi-maps")


def cmd_verify(args, out, report):
    full = run_verification(args.seed, args.samples, args.tol if args.tol is not None else la.DEFAULT_TOL)
    report.checks.extend(full.checks)
    report.results.update(full.results)
    for c in full.checks:
        out.say(c.line())
        if not c.passed:
            for msg in c.details.get("failures", [c.details.get("error", "")]):
                out.say(f"       {msg}")


def _int_list(text):
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def cmd_gen(args, out, report):
    inst = generate_random(args.seed, args.dims, args.heights, args.order_pair, args.pure,
                           args.tol if args.tol is not None else la.DEFAULT_TOL)
    text = serialize(inst)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
        out.say(f"wrote {args.output}")
    elif not args.json:
        sys.stdout.write(text)
    report.results["instance"] = inst.name
    report.checks.append(CheckResult("generated", "random instance", 0.0, True, 0.0))


COMMANDS = {
    "check-cp": (cmd_check_cp, "decide complete positivity of every cp/linear map"),
    "choi": (cmd_choi, "print Choi matrices and their spectra"),
    "dilate": (cmd_dilate, "Stinespring constructions with residuals"),
    "rn": (cmd_rn, "Radon-Nikodym derivative of the second map of the pair"),
    "compare": (cmd_compare, "order and equivalence verdicts for the pair"),
    "isometry": (cmd_isometry, "partial isometry V with Phi = V Psi for an equivalent pair"),
    "reduce": (cmd_reduce, "construction compressed to the support of Delta"),
    "purity": (cmd_purity, "purity verdict for every phi-map"),
    "verify": (cmd_verify, "randomized sweep over all theorem checks"),
    "gen": (cmd_gen, "write a random instance"),
}
FILE_COMMANDS = {"check-cp", "choi", "dilate", "rn", "compare", "isometry", "reduce", "purity"}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit the report as JSON")
    common.add_argument("--tol", type=float, default=None, help="numerical tolerance (default 1e-9)")
    common.add_argument("--seed", type=int, default=0, help="master random seed")
    common.add_argument("--samples", type=int, default=50, help="population size for randomized checks")
    parser = argparse.ArgumentParser(prog="cpmodules", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name in FILE_COMMANDS:
            p.add_argument("file", help="instance file (bundled fixtures may be named directly)")
        if name == "gen":
            p.add_argument("--dims", type=_int_list, default=None, help="domain block sizes, e.g. 2,1")
            p.add_argument("--heights", type=_int_list, default=None, help="domain module heights")
            p.add_argument("--order-pair", action="store_true", help="add Psi <= Phi built from the commutant")
            p.add_argument("--pure", action="store_true", help="rank-one underlying map")
            p.add_argument("-o", "--output", default=None, help="file to write (default stdout)")
    return parser


def run_command(argv=None):
    """Parse ``argv``, run the command, return ``(exit_code, report)``."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0), None
    if args.samples < 1:
        print("error: --samples must be positive", file=sys.stderr)
        return 2, None
    out = _Output(args)
    report = VerificationReport(args.command)
    func = COMMANDS[args.command][0]
    try:
        func(args, out, report)
    except (InstanceError, DimensionMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2, None
    except ValueError as exc:
        if not isinstance(exc, CPModuleError) or args.command == "gen":
            print(f"error: {exc}", file=sys.stderr)
            return 2, None
        report.checks.append(CheckResult(args.command, "", float("inf"), False, 0.0, {"error": str(exc)}))
        out.say(f"failed: {type(exc).__name__}: {exc}")
    except CPModuleError as exc:
        report.checks.append(CheckResult(args.command, "", float("inf"), False, 0.0, {"error": str(exc)}))
        out.say(f"failed: {type(exc).__name__}: {exc}")
    if args.json:
        print(report.to_json())
    elif args.command not in ("verify", "gen"):
        for c in report.checks:
            out.say(c.line())
    code = 0 if report.passed else 1
    if not args.json and args.command == "verify":
        out.say(f"overall: {'PASS' if code == 0 else 'FAIL'}")
    return code, report


def main(argv=None):
    code, _ = run_command(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
