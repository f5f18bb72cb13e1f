"""Command-line front end: JSON in, JSON or CSV report out.

Exit status: 0 when every certified check passed, 1 when a check failed
(the report names the failing residual), 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from . import biunitary, compat, core, invariants, moyal, nagy, oscillator, polar
from .core import AlthamError, DimensionError, MatrixFormatError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class InputError(Exception):
    """Bad input document; maps to exit status 2."""


DEFAULT_TOLS: dict[str, dict[str, float]] = {
    "invariants": {"kernel": invariants.KERNEL_RTOL, "trace": invariants.TOL_TRACE},
    "factor": {"kernel": invariants.KERNEL_RTOL, "fact": invariants.TOL_FACT},
    "polar": {"polar": polar.TOL_POLAR, "det": polar.DET_RTOL, "skew_adjoint": polar.TOL_SKEW_ADJOINT},
    "compat": {"compat": compat.TOL_COMPAT, "block": compat.TOL_BLOCK, "cluster": compat.CLUSTER_RTOL},
    "biunitary": {"unitary": biunitary.TOL_UNITARY, "cluster": compat.CLUSTER_RTOL},
    "nagy": {"unitary": 1e-10, "unimodular": nagy.UNIMODULAR_TOL},
    "star": {},
    "oscillator": {"bracket": 1e-6, "linear": 1e-6, "two_form": 1e-8},
}


class Result:
    def __init__(self, command: str, tols: dict[str, float]):
        self.report: dict[str, Any] = {"command": command, "tolerances": dict(sorted(tols.items()))}
        self.failures: list[str] = []

    def check(self, name: str, value: float, tol: float) -> None:
        ok = bool(value <= tol)
        self.report.setdefault("checks", {})[name] = {"value": float(value), "tol": tol, "passed": ok}
        if not ok:
            self.failures.append(name)

    def flag(self, name: str, ok: bool) -> None:
        self.report.setdefault("checks", {})[name] = {"passed": bool(ok)}
        if not ok:
            self.failures.append(name)


def _matrix(doc: dict, key: str, required: bool = True):
    if key not in doc:
        if required:
            raise InputError(f"missing field {key!r}")
        return None
    return core.matrix_from_json(doc[key])


def _triple(obj: dict) -> core.AdmissibleTriple:
    g = core.matrix_from_json(obj["g"]).real
    J = core.matrix_from_json(obj["J"]).real
    if "omega" in obj:
        return core.AdmissibleTriple(g, J, core.matrix_from_json(obj["omega"]).real)
    return core.AdmissibleTriple.from_metric(g, J)


# -- commands ----------------------------------------------------------------


def cmd_invariants(doc, tols, seed, args) -> Result:
    r = Result("invariants", tols)
    a = _matrix(doc, "A").real
    kinds = doc.get("kind", "both")
    kinds = ["symmetric", "skew"] if kinds == "both" else [kinds]
    r.report["bases"] = {}
    for kind in kinds:
        basis = invariants.solve_invariant_forms(a, kind, tols["kernel"])
        r.report["bases"][kind] = basis.to_dict()
        worst = max((invariants.invariance_residual(b, a) for b in basis.basis), default=0.0)
        r.check(f"{kind}_basis_invariance", worst, 1e-8)
    tr = invariants.check_trace_condition(a, int(doc.get("k_max", 5)), tols["trace"])
    r.report["trace_condition"] = tr.to_dict()
    r.report["trace_condition_note"] = "necessary for A = Lambda H; failure is a finding, not an error"
    return r


def cmd_factor(doc, tols, seed, args) -> Result:
    r = Result("factor", tols)
    a = _matrix(doc, "A").real
    basis = invariants.solve_invariant_forms(a, "skew", tols["kernel"])
    r.report["skew_dimension"] = basis.dimension
    r.report["symmetric_dimension"] = invariants.solve_invariant_forms(a, "symmetric", tols["kernel"]).dimension
    facts = invariants.enumerate_factorizations(a, int(doc.get("attempts", 100)), seed, basis)
    r.report["factorizations"] = [f.to_dict() for f in facts]
    r.report["n_positive_definite"] = sum(f.positive_definite for f in facts)
    r.check("max_factorization_residual", max(f.residual for f in facts), tols["fact"])
    return r


def cmd_polar(doc, tols, seed, args) -> Result:
    r = Result("polar", tols)
    a = _matrix(doc, "A").real
    h = _matrix(doc, "H", required=False)
    if h is None:
        facts = invariants.enumerate_factorizations(a, int(doc.get("attempts", 100)), seed)
        pos = [f for f in facts if f.positive_definite]
        if not pos:
            raise invariants.NoInvertibleSkew("no factorization with positive definite H found")
        h = pos[0].H
        r.report["H_source"] = "enumerated factorization"
    h = h.real
    pr = polar.polar_complex_structure(a, h, tols["det"], tols["skew_adjoint"])
    r.report["polar"] = pr.to_dict()
    triple = core.AdmissibleTriple.from_metric(pr.g, pr.J)
    r.report["triple"] = {"g": triple.g.tolist(), "J": triple.J.tolist(), "omega": triple.omega.tolist()}
    for k, v in pr.residuals.items():
        if k != "A_skew_adjoint":
            r.check(k, v, tols["polar"])
    for k, v in polar.invariance_residuals(a, triple).items():
        r.check(f"invariance_{k}", v, tols["polar"])
    r.report["liouville_note"] = "J A = -|A|; J(Gamma) = -Delta only when |A| = I"
    return r


def cmd_compat(doc, tols, seed, args) -> Result:
    r = Result("compat", tols)
    if "blocks" in doc:
        pair = compat.build_compatible_pair([tuple(b) for b in doc["blocks"]], seed=seed)
        r.report["constructed_from_blocks"] = doc["blocks"]
    else:
        try:
            pair = compat.CompatPair(_triple(doc["triple1"]), _triple(doc["triple2"]))
        except KeyError as exc:
            raise InputError(f"missing field {exc}") from None
    for name, t in (("triple1", pair.triple1), ("triple2", pair.triple2)):
        v = core.validate_triple(t.g, t.J, t.omega)
        r.report[f"{name}_validation"] = v.to_dict()
        r.flag(f"{name}_valid", v.accepted)
    cr = compat.check_compatibility(pair, tols["compat"])
    r.report["compatibility"] = cr.to_dict()
    r.flag("compatible", cr.compatible)
    if not cr.compatible:
        return r
    ops = compat.connecting_operators(pair, tols["compat"])
    r.report["connecting_operators"] = ops.to_dict()
    r.check("connecting_identities", max(ops.residuals.values()), tols["compat"])
    dec = compat.decompose(pair, tols["cluster"], tols["block"], tols["compat"])
    r.report["decomposition"] = dec.to_dict()
    r.report["canonical_forms"] = compat.canonical_hermitian_forms(dec).to_dict()
    r.check("cross_orthogonality", max(dec.cross_orthogonality.values(), default=0.0), tols["block"])
    r.check("reconstruction", max(dec.reconstruction.values()), 1e-8)
    pc = compat.poisson_commutation_check(pair, int(doc.get("samples", 20)), seed)
    r.report["poisson_commutation"] = pc.to_dict()
    r.flag("poisson_commutation", pc.passed)
    return r


def cmd_biunitary(doc, tols, seed, args) -> Result:
    r = Result("biunitary", tols)
    if "box" in doc:
        box = doc["box"]
        full = biunitary.box_example(int(box["n_grid"]), float(box.get("alpha", 1.0)), "full")
        half = biunitary.box_example(int(box["n_grid"]) // 2, float(box.get("alpha", 1.0)), "half")
        r.report["full"] = full.to_dict()
        r.report["half"] = half.to_dict()
        r.flag("full_all_multiplicities_2", all(m == 2 for m in full.multiplicities.values()))
        r.flag("half_cyclic", half.cyclic)
        r.flag("group_dim_ratio_4", full.group_dimension == 4 * half.group_dimension)
        return r
    h1 = _matrix(doc, "h1")
    h2 = _matrix(doc, "h2")
    s = biunitary.biunitary_group(h1, h2, tols["cluster"])
    r.report["structure"] = s.to_dict()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(int(doc.get("samples", 10))):
        chk = biunitary.is_biunitary(s.random_element(rng), h1, h2, tols["unitary"])
        worst = max(worst, *chk.residuals.values())
    r.check("sampled_elements_biunitary", worst, tols["unitary"])
    if h1.shape[0] <= 6:
        oracle = biunitary.linearized_group_dimension(h1, h2)
        r.report["linearized_dimension"] = oracle
        r.flag("group_dimension_matches_linearization", oracle == s.group_dimension)
    return r


def cmd_nagy(doc, tols, seed, args) -> Result:
    r = Result("nagy", tols)
    if "rho" in doc:
        t, h0 = nagy.shift_with_density(doc["rho"])
    else:
        t = _matrix(doc, "T")
        h0 = _matrix(doc, "h0", required=False)
    K = int(doc.get("K", 200))
    pb = nagy.power_bound(t, K, h0)
    r.report["power_bound"] = {k: v for k, v in pb.to_dict().items() if k != "growth_table"}
    r.flag("power_bounded", pb.bounded)
    if not pb.bounded:
        return r
    methods = {}
    try:
        methods["spectral"] = nagy.invariant_metric_spectral(t, h0, tols["unimodular"])
    except (nagy.NotUnimodular, nagy.NotSemisimple) as exc:
        r.report["spectral_error"] = {"code": exc.code, "message": str(exc)}
        r.failures.append("spectral_method")
    methods["cesaro"] = nagy.invariant_metric_cesaro(t, h0, int(doc.get("N", 1000)), K)
    for name, res in methods.items():
        sim = nagy.similarity_to_unitary(res, t, h0)
        r.report[name] = {**res.to_dict(), "similarity": sim.to_dict()}
        if name == "spectral":
            r.check("spectral_invariance", res.defect, 1e-12)
            r.check("spectral_unitarity", sim.unitarity_residual, tols["unitary"])
    if "spectral" in methods:
        a, b = methods["spectral"].normalized(), methods["cesaro"].normalized()
        r.report["method_agreement"] = float(np.linalg.norm(a - b) / np.linalg.norm(a))
    return r


def _poly(doc, key, labels):
    if key not in doc:
        raise InputError(f"missing field {key!r}")
    return moyal.parse_poly(doc[key], labels)


def _hbar_value(doc):
    v = doc.get("hbar")
    if v is None:
        return None
    if isinstance(v, str):
        return Fraction(v)
    return v


def cmd_star(doc, tols, seed, args) -> Result:
    r = Result("star", tols)
    labels = tuple(doc.get("labels", ["q", "p"]))
    prod = moyal.alternative_product(labels)
    hbar = _hbar_value(doc)
    r.report["labels"] = list(labels)
    if "f" in doc and "g" in doc:
        f, g = _poly(doc, "f", labels), _poly(doc, "g", labels)
        r.report["product"] = str(prod(f, g, hbar))
        r.report["commutator"] = str(prod.commutator(f, g, hbar))
        if args.check_limit:
            lim = moyal.classical_limit_check(f, g)
            r.report["classical_limit"] = lim.to_dict()
            r.flag("classical_limit", lim.passed)
    if args.check_derivation:
        h = _poly(doc, "H", labels)
        x, y = prod.variables()
        f = _poly(doc, "f", labels) if "f" in doc else x
        g = _poly(doc, "g", labels) if "g" in doc else y
        d = moyal.derivation_check(h, f, g, hbar)
        r.report["derivation"] = d.to_dict()
        r.flag("derivation_residual_zero", d.passed)
    if "evolve" in doc:
        ev = doc["evolve"]
        h = _poly(doc, "H", labels)
        f = moyal.parse_poly(ev["f"], labels)
        out = moyal.star_evolution_step(h, f, float(ev["dt"]), int(ev.get("order", 20)), hbar)
        r.report["evolution"] = str(out)
    return r


def cmd_oscillator(doc, tols, seed, args) -> Result:
    r = Result("oscillator", tols)
    spec = oscillator.OscillatorSpec(tuple(doc.get("frequencies", [1.0])), float(doc.get("lam", 1.0)))
    if "points" in doc:
        points = [tuple(map(float, pt)) for pt in doc["points"]]
    else:
        rng = np.random.default_rng(seed)
        points = [tuple(x) for x in rng.uniform(-1, 1, size=(int(doc.get("n_points", 20)), 2))]
    t = float(doc.get("t", 0.7))
    rows = []
    for q, p in points:
        br = oscillator.bracket_identity_check(spec, q, p)
        rows.append({"q": q, "p": p, "bracket_rel_error": br.rel_error, "degenerate": br.degenerate})
    r.report["points"] = rows
    errs = [row["bracket_rel_error"] for row in rows if not row["degenerate"]]
    if errs:
        r.check("bracket_identity", max(errs), tols["bracket"])
    n_grid = int(doc.get("t_grid_size", 100))
    grid = np.linspace(0.0, 2 * np.pi, n_grid)
    q0, p0 = points[0]
    lin = oscillator.linear_in_both_check(spec, q0, p0, grid)
    r.report["linearity"] = {k: v for k, v in lin.to_dict().items() if k != "residuals"}
    r.check("linear_in_both", lin.max_residual, tols["linear"])
    tf = oscillator.invariant_two_form_check(spec, None, points, t)
    r.report["two_form"] = {"max_rel_change": tf.max_rel_change}
    r.check("two_form_invariance", tf.max_rel_change, tols["two_form"])
    return r


COMMANDS: dict[str, Callable[..., Result]] = {
    "invariants": cmd_invariants,
    "factor": cmd_factor,
    "polar": cmd_polar,
    "compat": cmd_compat,
    "biunitary": cmd_biunitary,
    "nagy": cmd_nagy,
    "star": cmd_star,
    "oscillator": cmd_oscillator,
}


# -- output ------------------------------------------------------------------


def _flatten(obj: Any, prefix: str = "") -> list[tuple[str, Any]]:
    if isinstance(obj, dict):
        out = []
        for k in sorted(obj):
            out += _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
        return out
    if isinstance(obj, list):
        out = []
        for i, v in enumerate(obj):
            out += _flatten(v, f"{prefix}[{i}]")
        return out
    return [(prefix, obj)]


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in _flatten(report):
        w.writerow([k, json.dumps(v) if not isinstance(v, str) else v])
    return buf.getvalue()


def _parse_tols(items: list[str], command: str) -> dict[str, float]:
    tols = dict(DEFAULT_TOLS[command])
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"--tol expects name=value, got {item!r}")
        if name not in tols:
            raise InputError(f"unknown tolerance {name!r} for {command}; known: {sorted(tols)}")
        try:
            tols[name] = float(value)
        except ValueError:
            raise InputError(f"tolerance {name!r} must be a number") from None
    return tols


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="altham", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--input", "-i", required=True, help="JSON input file, or - for stdin")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--output", "-o", default="-")
        if name == "star":
            p.add_argument("--check-derivation", action="store_true")
            p.add_argument("--check-limit", action="store_true")
    return parser


def _read_input(path: str) -> dict:
    text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise InputError("input must be a JSON object")
    return doc


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    report: dict[str, Any] = {"command": args.command}
    try:
        tols = _parse_tols(args.tol, args.command)
        doc = _read_input(args.input)
        result = COMMANDS[args.command](doc, tols, args.seed, args)
        report = result.report
        report["seed"] = args.seed
        report["status"] = "failed" if result.failures else "passed"
        report["failures"] = result.failures
        status = EXIT_FAIL if result.failures else EXIT_OK
    except (InputError, DimensionError, MatrixFormatError, moyal.PolyParseError, moyal.LabelMismatch,
            OSError, KeyError, TypeError, ValueError) as exc:
        code = getattr(exc, "code", "input_error")
        report.update({"status": "input_error", "error": {"code": code, "message": str(exc)}})
        status = EXIT_USAGE
    except AlthamError as exc:
        report.update({"status": "failed", "error": {"code": exc.code, "message": str(exc)}, "failures": [exc.code]})
        status = EXIT_FAIL
    text = render(report, args.format)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
