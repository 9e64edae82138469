"""Command-line front end: ``transpde run | verify | catalog``.

Problems are described by a TOML file validated against
``schema/problem.schema.json``.  Exit codes: 0 solved (and verified),
2 solvability hypothesis rejected, 3 numerical or verification failure,
4 malformed problem file.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import geometry as geo
from . import reduce1d as r1
from . import reduce2d as r2
from . import transnormal as tn
from .errors import ExprError, HypothesisError, SpecValidationError, TranspdeError
from .expr import parse
from .profiles import ProfileFunction
from .verify import invariance_check, manifold_residual

log = logging.getLogger("transpde")

EXIT_OK = 0
EXIT_HYPOTHESIS = 2
EXIT_NUMERICAL = 3
EXIT_SPEC = 4

DEFAULTS = {
    "tol": 1e-10,
    "method": "integrate",
    "zeta_grid": 21,
    "sigma_span": [-0.1, 0.1],
    "residual_samples": 200,
    "residual_tol": 1e-4,
    "gradient_mode": "finite-difference",
    "rng_seed": 0,
    "invariance_levels": 3,
}


def load_schema() -> dict:
    text = resources.files("transpde").joinpath("schema/problem.schema.json").read_text()
    return json.loads(text)


def _path_of(err: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def validate_spec(spec: dict, origin: str = "spec") -> None:
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(spec), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        msgs = [f"{origin}: {_path_of(e)}: {e.message}" for e in errors]
        raise SpecValidationError("; ".join(msgs))


def load_spec(path: Path) -> dict:
    try:
        with open(path, "rb") as fh:
            spec = tomllib.load(fh)
    except OSError as exc:
        raise SpecValidationError(f"{path}: cannot read spec: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise SpecValidationError(f"{path}: invalid TOML: {exc}") from exc
    validate_spec(spec, str(path))
    return spec


# -- serialization ----------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: non-finite floats become null, tuples become lists."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):
        return _clean(obj.item())
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


# -- building blocks --------------------------------------------------------------

def _build_tn(block: dict, where: str) -> tn.TransnormalFunction:
    params = {k: v for k, v in block.items() if k != "label"}
    try:
        return tn.build(block["label"], params)
    except KeyError as exc:
        raise SpecValidationError(f"{where}.label: unknown transnormal function "
                                  f"{block['label']!r}") from exc
    except (TypeError, ValueError) as exc:
        raise SpecValidationError(f"{where}: {exc}") from exc


def _parse(text: str, variables, where: str):
    try:
        return parse(text, variables)
    except ExprError as exc:
        raise SpecValidationError(f"{where}: {exc}") from exc


def _check_manifold(spec: dict, model: geo.ManifoldModel) -> None:
    m = spec.get("manifold")
    if not m:
        return
    if m["kind"] != model.kind:
        raise SpecValidationError(
            f"manifold.kind: {m['kind']!r} does not match the transnormal model {model.kind!r}")
    if "n" in m and m["n"] != model.dimension:
        raise SpecValidationError(f"manifold.n: {m['n']} != model dimension {model.dimension}")
    if "s" in m and m["s"] != model.signature.negative_count:
        raise SpecValidationError(
            f"manifold.s: {m['s']} != model index {model.signature.negative_count}")


def _numerics(spec: dict, overrides: dict) -> dict:
    out = dict(DEFAULTS)
    out.update(spec.get("numerics", {}))
    out.update({k: v for k, v in overrides.items() if v is not None})
    return out


def _fhat_text(eq: dict, mode: str) -> str:
    if "fhat" in eq:
        return eq["fhat"]
    return f"p - ({eq['uhat']})" if mode == "reduce1d" else f"tau - ({eq['uhat']})"


class Pipeline:
    """One solve-and-verify run; results accumulate in ``summary``."""

    def __init__(self, spec: dict, out_dir: Path, overrides: Optional[dict] = None):
        self.spec = spec
        self.out_dir = out_dir
        self.num = _numerics(spec, overrides or {})
        self.summary: dict = {"mode": spec["mode"], "artifacts": []}
        self.artifacts: dict = {}

    def _out(self, key: str) -> Optional[Path]:
        rel = self.spec["outputs"].get(key)
        return None if rel is None else (self.out_dir / rel)

    def _emit(self, key: str, text: str) -> None:
        path = self._out(key)
        if path is None:
            return
        self.artifacts[key] = (path, text)
        self.summary["artifacts"].append({"kind": key, "path": self.spec["outputs"][key]})

    # 1-D

    def solve_1d(self):
        spec, num = self.spec, self.num
        f = _build_tn(spec["transnormal"], "transnormal")
        _check_manifold(spec, f.model)
        eq = spec["equation"]
        fhat = _parse(_fhat_text(eq, "reduce1d"), ["t", "r", "p"], "equation")
        sign = int(eq.get("sign", 1))
        seed = spec["seed"]
        t0, r0 = float(seed["t0"]), float(seed["r0"])
        uhat = _parse(eq["uhat"], ["t"], "equation.uhat") if "uhat" in eq else None
        if "p0" in seed:
            p0 = float(seed["p0"])
        elif uhat is not None:
            p0 = uhat.eval({"t": t0})
        else:
            raise SpecValidationError("seed.p0: required unless equation.uhat is given")
        problem = r1.ReducedProblem1D(fhat, f.profile, (t0, r0, p0), sign)
        report = r1.check_hypotheses(problem)
        self.summary["hypotheses"] = report.to_dict()
        if not report.passed:
            raise HypothesisError("solvability conditions violated: " + "; ".join(report.failed),
                                  report)
        span = num.get("t_span")
        if num["method"] == "quadrature":
            if uhat is None:
                raise SpecValidationError("numerics.method: quadrature needs equation.uhat")
            sol = r1.quadrature_eikonal(uhat, f.profile, t0, r0, sign, span, num["tol"])
        else:
            sol = r1.integrate(problem, num["tol"], span)
        self.summary["terminations"] = {k: v.to_dict() for k, v in sol.terminations.items()}
        self.summary["domain"] = [float(sol.grid[0]), float(sol.grid[-1])]
        self._emit("solution_csv", sol.to_csv())
        self._emit("solution_json", dumps({"hypotheses": report.to_dict(), **sol.to_dict()}))
        u = r1.lift_1d(sol, f)
        return f.model, fhat, u, f

    # 2-D

    def solve_2d(self):
        spec, num = self.spec, self.num
        w = spec["warped"]
        fl = _build_tn(w["base"], "warped.base")
        fn = _build_tn(w["fiber"], "warped.fiber")
        for name, fx in (("base", fl), ("fiber", fn)):
            if not fx.model.signature.riemannian:
                raise SpecValidationError(f"warped.{name}: factor must be Riemannian")
        warp = _parse(w["warp"], ["t"], "warped.warp")
        warp_profile = ProfileFunction.from_formula(w["warp"], fl.image)
        model = geo.warped_product(fl.model, fn.model, warp_profile, warp_base=fl.value)
        _check_manifold(spec, model)
        fhat = _parse(_fhat_text(spec["equation"], "reduce2d"), ["t", "s", "r", "tau"], "equation")
        problem = r2.ReducedProblem2D(fhat, fl.profile, fn.profile, warp, fl.image, fn.image)
        c = spec["cauchy"]
        z = ["zeta"]
        data = r2.CauchyData(_parse(c["T"], z, "cauchy.T"), _parse(c["S"], z, "cauchy.S"),
                             _parse(c["R"], z, "cauchy.R"), tuple(c["zeta_range"]),
                             (float(c["p0"]), float(c["q0"])))
        report = r2.check_hypotheses_2d(problem, data)
        self.summary["hypotheses"] = report.to_dict()
        r2.require_hypotheses_2d(problem, data)
        sol = r2.solve_cauchy(problem, data, int(num["zeta_grid"]), tuple(num["sigma_span"]),
                              num["tol"])
        self.summary["hamiltonian_drift"] = sol.hamiltonian_drift
        self.summary["base_domain"] = sol.base_domain
        self._emit("solution_csv", sol.to_csv())
        self._emit("solution_json", dumps(sol.to_dict()))
        self._emit("coverage_json", dumps(sol.coverage_dict()))
        u = r2.lift_2d(sol, fl, fn, model)
        return model, fhat, u, (fl, fn)

    def verify(self, model, fhat, u, f) -> bool:
        num = self.num
        rep = manifold_residual(model, fhat, u, f, int(num["residual_samples"]),
                                int(num["rng_seed"]), float(num["residual_tol"]),
                                num["gradient_mode"], num.get("fd_step"))
        out = {"residual": rep.to_dict()}
        ok = rep.passed
        if not isinstance(f, tuple) and num["invariance_levels"] > 0:
            lo, hi = float(u.solution.grid[0]), float(u.solution.grid[-1])
            k = int(num["invariance_levels"])
            levels = [lo + (hi - lo) * (i + 1) / (k + 1) for i in range(k)]
            levels = [t for t in levels if abs(f.profile(t)) > 1e-4]
            if levels:
                inv = invariance_check(u, f, levels, 10, int(num["rng_seed"]))
                out["invariance"] = inv.to_dict()
                ok = ok and inv.passed
        self.summary["verification"] = out
        self._emit("residual_json", dumps(out))
        return ok

    def run(self, verify_only: bool = False) -> int:
        if self.spec["mode"] == "reduce1d":
            parts = self.solve_1d()
        else:
            parts = self.solve_2d()
        ok = self.verify(*parts)
        if verify_only:
            self.artifacts = {k: v for k, v in self.artifacts.items() if k == "residual_json"}
            self.summary["artifacts"] = [a for a in self.summary["artifacts"]
                                         if a["kind"] == "residual_json"]
        return EXIT_OK if ok else EXIT_NUMERICAL


def execute(spec: dict, out_dir: Path, overrides: Optional[dict] = None,
            verify_only: bool = False) -> tuple:
    """Run a validated spec; returns (exit code, summary dict).

    Artifacts are written only after the whole computation finishes, each
    through a temporary file renamed into place.
    """
    pipe = Pipeline(spec, out_dir, overrides)
    try:
        code = pipe.run(verify_only)
        status = "ok" if code == EXIT_OK else "verification_failure"
    except HypothesisError as exc:
        code, status = EXIT_HYPOTHESIS, "hypothesis_failure"
        pipe.summary["error"] = {"type": type(exc).__name__, "message": str(exc)}
        if exc.report is not None:
            pipe.summary["hypotheses"] = exc.report.to_dict()
        pipe.artifacts = {}
        pipe.summary["artifacts"] = []
    except SpecValidationError:
        raise
    except TranspdeError as exc:
        code, status = exc.exit_code, "numerical_failure"
        pipe.summary["error"] = {"type": type(exc).__name__, "message": str(exc)}
        pipe.artifacts = {}
        pipe.summary["artifacts"] = []
    pipe.summary["status"] = status
    pipe.summary["exit_code"] = code
    for path, text in pipe.artifacts.values():
        write_atomic(path, text)
    summary_path = pipe._out("summary_json")
    if summary_path is not None:
        write_atomic(summary_path, dumps(pipe.summary))
    return code, pipe.summary


# -- argument handling ------------------------------------------------------------

def _configure_logging() -> None:
    level = os.environ.get("TRANSPDE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="transpde", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (("run", "solve a problem file and write its artifacts"),
                       ("verify", "solve and write only the residual report")):
        p = sub.add_parser(name, help=text)
        p.add_argument("spec", type=Path)
        p.add_argument("--out-dir", type=Path, default=None,
                       help="directory output paths are relative to (default: the problem file's)")
        p.add_argument("--tol", type=float)
        p.add_argument("--seed", type=int, dest="rng_seed")
        p.add_argument("--samples", type=int, dest="residual_samples")
        p.add_argument("--residual-tol", type=float, dest="residual_tol")
        p.add_argument("--gradient-mode", choices=["analytic", "finite-difference"],
                       dest="gradient_mode")
    sub.add_parser("catalog", help="list manifolds and transnormal functions as JSON")
    return ap


def main(argv: Optional[list] = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    if args.command == "catalog":
        sys.stdout.write(dumps(tn.catalog()))
        return EXIT_OK
    overrides = {k: getattr(args, k) for k in
                 ("tol", "rng_seed", "residual_samples", "residual_tol", "gradient_mode")}
    try:
        spec = load_spec(args.spec)
        out_dir = args.out_dir if args.out_dir is not None else args.spec.resolve().parent
        code, summary = execute(spec, out_dir, overrides, verify_only=args.command == "verify")
    except SpecValidationError as exc:
        log.error("%s", exc)
        sys.stdout.write(dumps({"status": "spec_error", "exit_code": EXIT_SPEC,
                                "error": {"type": type(exc).__name__, "message": str(exc)}}))
        return EXIT_SPEC
    if code != EXIT_OK:
        log.error("%s", summary.get("error", {}).get("message", summary["status"]))
    sys.stdout.write(dumps(summary))
    return code


if __name__ == "__main__":
    sys.exit(main())
