"""Command-line entry point.

Exit codes: 0 success/found, 1 decisive negative, 2 input error,
3 inconclusive.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import dynamics, lyap, reduction, sos
from .dynamics import IntegrationOptions, VectorField
from .poly import Polynomial, homogenize, to_fraction
from .sdp import SolverOptions
from .serialize import (certified_form_json, field_from_json, field_to_json, poly_from_json,
                        poly_to_json, read_json, verify_bundle, write_json)

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 1, 2, 3

log = logging.getLogger("lyapcert")


class InputError(Exception):
    pass


@dataclass(frozen=True)
class Config:
    feas_tol: float = 1e-7
    infeas_tol: float = 1e-6
    pd_eps: float = sos.DEFAULT_PD_EPS
    recon_tol: float = sos.DEFAULT_RECON_TOL
    max_iter: int = 200
    debug_sdp: str | None = None
    verbosity: int = 0

    def __post_init__(self):
        for name in ("feas_tol", "infeas_tol", "pd_eps", "recon_tol"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if not self.pd_eps < 1:
            raise InputError("pd_eps must be below 1")

    def solver(self) -> SolverOptions:
        return SolverOptions(feas_tol=self.feas_tol, infeas_tol=self.infeas_tol,
                             max_iter=self.max_iter, debug_path=self.debug_sdp)

    def tolerances(self) -> dict:
        return {"feas_tol": self.feas_tol, "infeas_tol": self.infeas_tol,
                "pd_eps": self.pd_eps, "recon_tol": self.recon_tol}


def _config(args) -> Config:
    return Config(args.feas_tol, args.infeas_tol, args.pd_eps, args.recon_tol, args.max_iter,
                  args.debug_sdp, args.verbose)


def _load_poly(path):
    try:
        return poly_from_json(read_json(path))
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _family_field(args) -> VectorField:
    if args.family == "nonmonotone":
        return dynamics.family_nonmonotone(args.theta)
    if args.family == "rotated":
        return dynamics.family_rotated_center(args.theta, args.lam)
    raise InputError(f"unknown family {args.family}")


def _load_field(args) -> VectorField:
    if getattr(args, "field", None):
        try:
            return field_from_json(read_json(args.field))
        except (OSError, ValueError) as exc:
            raise InputError(f"{args.field}: {exc}") from None
    if args.family is None or args.theta is None:
        raise InputError("give a field JSON file or --family with --theta")
    return _family_field(args)


def _bits_str(bits) -> str:
    return "(" + ",".join("1" if b else "0" for b in bits) + ")"


def _verify_written(path) -> int:
    results = verify_bundle(read_json(path))
    ok = all(r[1] for r in results)
    for name, good, reason in results:
        print(f"verify {name}: {'ok' if good else 'FAILED'} ({reason})")
    return EXIT_OK if ok else EXIT_INCONCLUSIVE


# -- commands ---------------------------------------------------------


def cmd_reduce(args) -> int:
    try:
        inst = reduction.parse_cnf(Path(args.cnf).read_bytes())
    except OSError as exc:
        raise InputError(str(exc)) from None
    except (reduction.CnfParseError, ValueError) as exc:
        raise InputError(f"{args.cnf}: {exc}") from None
    if inst.nvars > reduction.WARN_EXHAUSTIVE_VARS:
        log.warning("%d variables: exhaustive search over 2^%d assignments", inst.nvars, inst.nvars)
    p = reduction.build_quartic(inst)
    witness = reduction.exactly_one_true_satisfiable(inst)
    zeros = reduction.zeros_on_cube(p)
    out = homogenize(p, 4) if (args.homogenize or args.field) else p
    write_json(args.out, poly_to_json(out))
    print(f"wrote {'homogenized ' if out is not p else ''}quartic ({out.nvars} variables, "
          f"{len(out)} terms) to {args.out}")
    if args.field:
        fpath = Path(args.out).with_suffix(".field.json")
        write_json(fpath, field_to_json(reduction.gradient_system(out)))
        print(f"wrote cubic gradient field to {fpath}")
    print("zeros on {0,1}^n: " + (" ".join(_bits_str(z) for z in zeros) if zeros else "none"))
    if witness is None:
        print("verdict: exactly-one-true UNSATISFIABLE (exhaustive)")
    else:
        print(f"verdict: exactly-one-true SATISFIABLE witness={_bits_str(witness)} (exhaustive)")
    return EXIT_OK


def cmd_sos_check(args) -> int:
    cfg = _config(args)
    form = _load_poly(args.poly)
    if not form.is_homogeneous or form.degree % 2:
        if args.auto_homogenize and not form.is_homogeneous:
            form = homogenize(form, form.degree + form.degree % 2)
        else:
            raise InputError("polynomial must be a homogeneous form of even degree "
                             "(use --auto-homogenize for inhomogeneous input)")
    try:
        if args.pd:
            verdict = sos.check_positive_definite(form, args.eps or cfg.pd_eps, cfg.solver(), cfg.recon_tol)
        else:
            verdict = sos.check_sos(form, cfg.solver(), cfg.recon_tol)
    except sos.FormError as exc:
        raise InputError(str(exc)) from None
    print(f"status: {verdict.status}  margin: {verdict.margin!r}")
    if verdict.message:
        print(f"note: {verdict.message}")
    if verdict.is_certificate:
        out = args.out or "certificate.json"
        target = form
        if args.pd:
            shift = form.max_abs_coefficient() * to_fraction(args.eps or cfg.pd_eps)
            target = form - Polynomial.norm_squared_power(form.nvars, form.degree // 2).scale(shift)
        bundle = {"command": "sos-check", "status": verdict.status, "margin": verdict.margin,
                  "certificates": [certified_form_json("form" if not args.pd else "form - eps|x|^d",
                                                       target, verdict.certificate, cfg.tolerances())]}
        write_json(out, bundle)
        print(f"certificate written to {out}")
        if args.verify:
            return _verify_written(out)
        return EXIT_OK
    return EXIT_NEGATIVE if verdict.status == sos.NOT_SOS else EXIT_INCONCLUSIVE


def cmd_grad_certify(args) -> int:
    cfg = _config(args)
    V = _load_poly(args.poly)
    try:
        proof = lyap.certify_positivity_gradient(V, args.wdeg, args.eps or cfg.pd_eps, cfg.solver())
    except (ValueError, sos.FormError) as exc:
        raise InputError(str(exc)) from None
    print(f"status: {proof.status}  margin: {proof.margin!r}")
    if not proof.found:
        return EXIT_NEGATIVE if proof.status == "infeasible" else EXIT_INCONCLUSIVE
    print("W = " + proof.W.to_string() if args.exact else "W = " + _float_str(proof.W))
    out = args.out or "grad_certificate.json"
    bundle = {"command": "grad-certify", "status": proof.status, "margin": proof.margin,
              "eps": proof.eps, "V": poly_to_json(V), "W": poly_to_json(proof.W),
              "certificates": [
                  certified_form_json("W - eps|x|^dW", proof.certified_forms[0], proof.cert_W, cfg.tolerances()),
                  certified_form_json("<grad W, grad V> - eps|x|^d", proof.certified_forms[1],
                                      proof.cert_grad, cfg.tolerances())]}
    write_json(out, bundle)
    print(f"W and certificates written to {out}")
    if args.verify:
        return _verify_written(out)
    return EXIT_OK


def _float_str(p) -> str:
    return p.to_string(digits=6)


def _sym(args):
    return lyap.SymmetrySpec.quarter_turn() if args.sym else None


def cmd_lyap_find(args) -> int:
    cfg = _config(args)
    f = _load_field(args)
    try:
        out = lyap.find_lyapunov(f, args.deg, args.eps or cfg.pd_eps, _sym(args), cfg.solver())
    except (ValueError, sos.FormError) as exc:
        raise InputError(str(exc)) from None
    print(f"status: {out.status}  margin: {out.margin!r}")
    if out.message:
        print(f"note: {out.message}")
    bundle = {"command": "lyap-find", "status": out.status, "degree": args.deg, "eps": out.eps,
              "margin": out.margin, "field": field_to_json(f)}
    if out.found:
        report = lyap.verify_lyapunov_numeric(out.V, f, args.samples, args.seed)
        print("V = " + _float_str(out.V))
        print(f"numeric check (empirical): min V = {report.min_V:.3e}, max Vdot = {report.max_Vdot:.3e}")
        bundle["V"] = poly_to_json(out.V)
        bundle["numeric"] = report.to_json()
        bundle["certificates"] = [
            certified_form_json("V - eps|x|^d", out.certified_forms[0], out.cert_V, cfg.tolerances()),
            certified_form_json("-Vdot - eps|x|^(d+k-1)", out.certified_forms[1], out.cert_Vdot,
                                cfg.tolerances())]
    if args.out:
        write_json(args.out, bundle)
        print(f"outcome written to {args.out}")
        if args.verify and out.found:
            return _verify_written(args.out)
    if out.found:
        return EXIT_OK
    return EXIT_NEGATIVE if out.status == lyap.INFEASIBLE_AT_DEGREE else EXIT_INCONCLUSIVE


def cmd_theta_sweep(args) -> int:
    cfg = _config(args)
    if not args.lo < args.hi:
        raise InputError(f"empty interval: lo={args.lo} hi={args.hi}")

    def make(theta):
        if args.family == "nonmonotone":
            return dynamics.family_nonmonotone(theta)
        return dynamics.family_rotated_center(theta, args.lam)

    threads = dynamics.max_threads()
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        report = lyap.theta_sweep(make, args.deg, args.lo, args.hi, args.resolution,
                                  args.eps or cfg.pd_eps, _sym(args), args.coarse, cfg.solver(), pool)
    finally:
        if pool is not None:
            pool.shutdown()
    for p in report.probes:
        print(f"probe theta={p.theta!r:<24} {p.status:<22} margin={p.margin:.3e}")
    if report.bracket:
        lo, hi = report.bracket
        print(f"threshold bracket: [{lo!r}, {hi!r}]")
    else:
        print("no threshold bracket")
    print(report.message)
    if args.out:
        write_json(args.out, report.to_json())
    return EXIT_INCONCLUSIVE if report.halted else EXIT_OK


def _parse_x0(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"bad --x0 {text!r}; expected comma-separated numbers") from None


def cmd_simulate(args) -> int:
    f = _load_field(args)
    x0 = _parse_x0(args.x0)
    opts = IntegrationOptions(step=args.step, max_steps=args.max_steps, record_every=args.record_every)
    try:
        traj = dynamics.integrate(f, x0, opts)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    V = _load_poly(args.V) if args.V else None
    if V is None and args.family == "nonmonotone":
        x, y = Polynomial.variables(2)
        V = x ** 4 + y ** 4
    elif V is None and args.family == "rotated":
        V = dynamics.conserved_quantity_rotated(args.lam)
    print(f"verdict (empirical): {traj.verdict}  steps: {traj.steps}  "
          f"t_final: {float(traj.times[-1])!r}  backend: {traj.backend}")
    if args.plot:
        traj.to_csv(args.plot, V)
        print(f"trajectory written to {args.plot}")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        return _verify_written(args.bundle)
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"{args.bundle}: {exc}") from None


# -- parser -----------------------------------------------------------


def _add_tolerances(p):
    g = p.add_argument_group("tolerances")
    g.add_argument("--feas-tol", type=float, default=1e-7)
    g.add_argument("--infeas-tol", type=float, default=1e-6)
    g.add_argument("--pd-eps", type=float, default=sos.DEFAULT_PD_EPS)
    g.add_argument("--recon-tol", type=float, default=sos.DEFAULT_RECON_TOL)
    g.add_argument("--max-iter", type=int, default=200)
    g.add_argument("--debug-sdp", metavar="PATH", help="dump interior-point iterates as JSON")


def _add_field_source(p, positional=True):
    if positional:
        p.add_argument("field", nargs="?", help="vector field JSON")
    p.add_argument("--family", choices=["nonmonotone", "rotated"])
    p.add_argument("--theta", type=float, help="rotation angle in radians")
    p.add_argument("--lam", type=float, default=2 ** 0.5, help="lambda of the rotated family")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lyapcert", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", help="ONE-IN-THREE 3SAT instance -> quartic (form) -> cubic field")
    p.add_argument("cnf")
    p.add_argument("out")
    p.add_argument("--homogenize", action="store_true")
    p.add_argument("--field", action="store_true", help="also write -grad p_h as <out>.field.json")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("sos-check", help="sos (or --pd positive definiteness) certificate for a form")
    p.add_argument("poly")
    p.add_argument("--pd", action="store_true")
    p.add_argument("--eps", type=float)
    p.add_argument("--auto-homogenize", action="store_true")
    p.add_argument("-o", "--out")
    p.add_argument("--verify", action="store_true", help="re-validate the written certificate")
    _add_tolerances(p)
    p.set_defaults(func=cmd_sos_check)

    p = sub.add_parser("grad-certify", help="positivity of V through a Lyapunov function of -grad V")
    p.add_argument("poly")
    p.add_argument("--wdeg", type=int, required=True)
    p.add_argument("--eps", type=float)
    p.add_argument("--exact", action="store_true", help="print W with exact coefficients")
    p.add_argument("-o", "--out")
    p.add_argument("--verify", action="store_true")
    _add_tolerances(p)
    p.set_defaults(func=cmd_grad_certify)

    p = sub.add_parser("lyap-find", help="search for a homogeneous polynomial Lyapunov function")
    _add_field_source(p)
    p.add_argument("--deg", type=int, required=True)
    p.add_argument("--sym", action="store_true", help="restrict to forms invariant under (x,y)->(y,-x)")
    p.add_argument("--eps", type=float)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out")
    p.add_argument("--verify", action="store_true")
    _add_tolerances(p)
    p.set_defaults(func=cmd_lyap_find)

    p = sub.add_parser("theta-sweep", help="bisect the theta at which a Lyapunov search changes verdict")
    p.add_argument("--family", choices=["nonmonotone", "rotated"], default="nonmonotone")
    p.add_argument("--lam", type=float, default=2 ** 0.5)
    p.add_argument("--deg", type=int, required=True)
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--resolution", type=float, default=1e-4)
    p.add_argument("--coarse", type=int, default=8, help="intervals in the initial scan")
    p.add_argument("--sym", action="store_true")
    p.add_argument("--eps", type=float)
    p.add_argument("-o", "--out")
    _add_tolerances(p)
    p.set_defaults(func=cmd_theta_sweep)

    p = sub.add_parser("simulate", help="integrate a field and write the trajectory as CSV")
    _add_field_source(p)
    p.add_argument("--x0", required=True, help="comma-separated initial state")
    p.add_argument("--plot", metavar="CSV")
    p.add_argument("--V", metavar="POLY_JSON", help="function to tabulate along the trajectory")
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--max-steps", type=int, default=1_000_000)
    p.add_argument("--record-every", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="re-validate every certificate in a JSON bundle")
    p.add_argument("bundle")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
