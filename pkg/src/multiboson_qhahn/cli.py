"""Command-line front end.

    qhahn CONFIG [--output PATH] [--format {csv,json,table}] [--quiet]

CONFIG is a YAML or JSON document; see README.md for the schema.  Exit
codes: 0 success, 1 verify found failing checks, 2 configuration error,
3 math-domain error, 4 non-convergence.
"""
from __future__ import annotations

import argparse
import ast
import io
import json
import math
import operator
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import yaml

from . import moments, multiboson, pearson, qhahn, spectral
from .errors import ConfigError, MathDomainError, NonConvergenceError, QHahnError

COMMANDS = ("classify", "weight", "poly", "moments", "reduce", "spectrum", "amplitude", "verify")
FORMATS = ("csv", "json", "table")
EXIT_OK, EXIT_FAILED_CHECKS, EXIT_CONFIG, EXIT_DOMAIN, EXIT_NONCONV = 0, 1, 2, 3, 4

DEFAULT_OPTIONS = {
    "N_max": 10,
    "M": 40,
    "depth": 30,
    "tol": 1e-16,
    "t": [0.5 * i for i in range(11)],
    "format": "csv",
    "output": None,
}


# ---------------------------------------------------------------- expressions

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub,
           ast.Mult: operator.mul, ast.Div: operator.truediv}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def compile_expression(text: str, nvars: int, what: str = "expression") -> Callable:
    """Compile a rational expression in n0..n{nvars-1} to a pure callable.

    Allowed: numeric literals, the variables, + - * /, unary signs and
    ** with an integer literal exponent.
    """
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        text = repr(text)
    if not isinstance(text, str):
        raise ConfigError(f"{what}: expected a string expression")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"{what}: syntax error at column {exc.offset}: {text!r}") from None
    names = {f"n{i}": i for i in range(nvars)}

    def check(node):
        if isinstance(node, ast.Expression):
            return check(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ConfigError(f"{what}: only numeric literals are allowed")
            return
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ConfigError(f"{what}: unknown variable {node.id!r} "
                                  f"(allowed: {', '.join(names)})")
            return
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return check(node.operand)
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Pow):
                e = node.right
                if isinstance(e, ast.UnaryOp) and isinstance(e.op, ast.USub):
                    e = e.operand
                if not (isinstance(e, ast.Constant) and isinstance(e.value, int)
                        and not isinstance(e.value, bool)):
                    raise ConfigError(f"{what}: exponents must be integer literals")
                return check(node.left)
            if type(node.op) in _BINOPS:
                check(node.left)
                return check(node.right)
        raise ConfigError(f"{what}: unsupported syntax {type(node).__name__}")

    check(tree)

    def ev(node, x):
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, ast.Name):
            return x[names[node.id]]
        if isinstance(node, ast.UnaryOp):
            return _UNOPS[type(node.op)](ev(node.operand, x))
        if isinstance(node.op, ast.Pow):
            return ev(node.left, x) ** ev(node.right, x)
        return _BINOPS[type(node.op)](ev(node.left, x), ev(node.right, x))

    body = tree.body

    def f(x):
        return float(ev(body, [float(v) for v in x]))

    f.source = text
    return f


# ---------------------------------------------------------------- config

@dataclass
class RunConfig:
    command: str
    q: float
    pearson: Optional[pearson.PearsonData] = None
    model: Optional[multiboson.MultibosonModel] = None
    lambdas: tuple = ()
    label: Optional[int] = None
    allow_finite: bool = False
    options: dict = field(default_factory=dict)


def _field(d, key, kind, where, default=None, required=True):
    if key not in d:
        if required:
            raise ConfigError(f"{where}: missing field {key!r}")
        return default
    v = d[key]
    try:
        if kind is float:
            if isinstance(v, bool):
                raise TypeError
            return float(v)
        if kind is int:
            if isinstance(v, bool) or float(v) != int(v):
                raise TypeError
            return int(v)
        return kind(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key}: expected {kind.__name__}, got {v!r}") from None


def _load(text):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"cannot parse config{where}: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    return doc


def parse_config(text) -> RunConfig:
    """Parse and validate a YAML/JSON configuration document."""
    doc = _load(text)
    unknown = set(doc) - {"command", "q", "pearson", "model", "options"}
    if unknown:
        raise ConfigError(f"unknown top-level fields: {sorted(unknown)}")
    command = doc.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"command: expected one of {COMMANDS}, got {command!r}")
    q = _field(doc, "q", float, "config")
    if not 0.0 < q < 1.0:
        raise ConfigError(f"q: must satisfy 0 < q < 1, got {q!r}")
    has_p, has_m = "pearson" in doc, "model" in doc
    if has_p == has_m:
        raise ConfigError("exactly one of 'pearson' or 'model' is required")
    cfg = RunConfig(command, q)

    if has_p:
        p = doc["pearson"]
        if not isinstance(p, dict):
            raise ConfigError("pearson: expected a mapping")
        extra = set(p) - {"a1", "a0", "b2", "b1", "b0"}
        if extra:
            raise ConfigError(f"pearson: unknown fields {sorted(extra)}")
        vals = [_field(p, key, float, "pearson") for key in ("a1", "a0", "b2", "b1", "b0")]
        cfg.pearson = pearson.PearsonData(*vals, q)
        if command == "reduce":
            raise ConfigError("reduce needs a 'model' block")
    else:
        m = doc["model"]
        if not isinstance(m, dict):
            raise ConfigError("model: expected a mapping")
        extra = set(m) - {"k", "alpha", "g0", "H0", "lambdas", "l", "allow_finite"}
        if extra:
            raise ConfigError(f"model: unknown fields {sorted(extra)}")
        k = m.get("k")
        if not isinstance(k, list) or not k or not all(isinstance(x, int) and not isinstance(x, bool) for x in k):
            raise ConfigError("model.k: expected a nonempty list of integers")
        try:
            alpha = np.array(m.get("alpha"), dtype=float)
        except (TypeError, ValueError):
            raise ConfigError("model.alpha: expected a numeric matrix") from None
        if alpha.shape != (len(k), len(k)):
            raise ConfigError(f"model.alpha: expected a {len(k)}x{len(k)} matrix")
        g0 = compile_expression(m.get("g0", "1"), len(k), "model.g0")
        H0 = compile_expression(m.get("H0", "0"), len(k), "model.H0")
        cfg.model = multiboson.MultibosonModel(tuple(k), alpha, g0, H0)
        lam = m.get("lambdas", [])
        if not isinstance(lam, list) or len(lam) != len(k) - 1:
            raise ConfigError(f"model.lambdas: expected {len(k) - 1} numbers")
        cfg.lambdas = tuple(float(x) for x in lam)
        cfg.label = _field(m, "l", int, "model", None, required=False)
        cfg.allow_finite = bool(m.get("allow_finite", False))
        if command in ("classify", "weight", "poly", "moments"):
            raise ConfigError(f"{command} needs a 'pearson' block")

    opts = dict(DEFAULT_OPTIONS)
    given = doc.get("options") or {}
    if not isinstance(given, dict):
        raise ConfigError("options: expected a mapping")
    extra = set(given) - set(DEFAULT_OPTIONS)
    if extra:
        raise ConfigError(f"options: unknown fields {sorted(extra)}")
    for key in ("N_max", "M", "depth"):
        if key in given:
            opts[key] = _field(given, key, int, "options")
            if opts[key] < 1:
                raise ConfigError(f"options.{key}: must be positive")
    if "tol" in given:
        opts["tol"] = _field(given, "tol", float, "options")
        if not opts["tol"] > 0:
            raise ConfigError("options.tol: must be positive")
    if "t" in given:
        t = given["t"]
        if isinstance(t, dict):
            start = _field(t, "start", float, "options.t")
            stop = _field(t, "stop", float, "options.t")
            step = _field(t, "step", float, "options.t")
            if not step > 0:
                raise ConfigError("options.t.step: must be positive")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            t = [start + i * step for i in range(max(n, 0))]
        if not isinstance(t, list) or not all(isinstance(x, (int, float)) for x in t):
            raise ConfigError("options.t: expected a list of numbers or {start, stop, step}")
        opts["t"] = [float(x) for x in t]
    if "format" in given:
        if given["format"] not in FORMATS:
            raise ConfigError(f"options.format: expected one of {FORMATS}")
        opts["format"] = given["format"]
    if "output" in given:
        opts["output"] = given["output"]
    cfg.options = opts
    return cfg


# ---------------------------------------------------------------- results

@dataclass
class Result:
    columns: Optional[list] = None
    rows: Optional[list] = None
    doc: Optional[dict] = None
    status: int = EXIT_OK


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def _cell(x) -> str:
    x = _num(x)
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def render(res: Result, fmt: str) -> str:
    if fmt == "json" or res.rows is None:
        doc = dict(res.doc or {})
        if res.rows is not None:
            doc["columns"] = res.columns
            doc["rows"] = [[_num(v) for v in r] for r in res.rows]
        return json.dumps(doc, indent=2, default=_num) + "\n"
    if fmt == "csv":
        out = io.StringIO()
        out.write(",".join(res.columns) + "\n")
        for r in res.rows:
            out.write(",".join(_cell(v) for v in r) + "\n")
        return out.getvalue()
    cells = [res.columns] + [[_cell(v) for v in r] for r in res.rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(res.columns))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- commands

def _structural(cfg: RunConfig):
    if cfg.pearson is not None:
        d = cfg.pearson
        spec = pearson.classify(d)
        return qhahn.structural_functions(d), spec
    rs = _reduced(cfg)
    return rs.seq, None


def _reduced(cfg: RunConfig):
    m = cfg.model
    kappa, L, _ = multiboson.vacuum_lambdas(m, cfg.lambdas)
    if not L:
        raise MathDomainError("no Fock vacuum for these eigenvalues")
    label = cfg.label if cfg.label is not None else L[0]
    return multiboson.reduce(m, cfg.lambdas, label, cfg.q, allow_finite=cfg.allow_finite)


def _cmd_classify(cfg):
    spec = pearson.classify(cfg.pearson, strict=False)
    return Result(doc={"pearson": cfg.pearson.as_dict(), "spec": spec.as_dict()})


def _cmd_weight(cfg):
    spec = pearson.classify(cfg.pearson)
    nodes, _ = pearson.support_grid(spec, cfg.options["depth"])
    rho = pearson.weight_function(spec)
    rows = [(w, rho(w)) for w in sorted(nodes)]
    return Result(["omega", "rho"], rows, {"spec": spec.as_dict()})


def _cmd_poly(cfg):
    d = cfg.pearson
    N = cfg.options["N_max"]
    spec = pearson.classify(d)
    ops = qhahn.ops_by_recurrence(d, N)
    on = qhahn.orthonormalize(ops, spec, cfg.options["tol"])
    cols = ["n", "norm"] + [f"c{j}" for j in range(N + 1)]
    rows = []
    for n, (p, (_, nrm)) in enumerate(zip(ops.polys, on)):
        c = list(p.coef) + [0.0] * (N + 1 - len(p.coef))
        rows.append([n, nrm] + c[: N + 1])
    return Result(cols, rows, {"spec": spec.as_dict()})


def _moment_routes(d, spec, N, tol):
    direct = moments.moments_direct_seq(spec, N, tol)
    routes = {"direct": direct.mu,
              "recurrence": moments.moments_by_recurrence(d, direct.mu[0], N).mu}
    if spec.case in ("iv", "v", "vi-a", "vi-b"):
        routes["closed_form"] = moments.moments_closed_form(spec, N).mu
    else:
        routes["closed_form"] = (moments.mu0_closed_form(spec, d),)
    try:
        routes["hypergeometric"] = moments.moments_hypergeometric(d, direct.mu[0], N).mu
    except MathDomainError:
        pass
    return routes


def _cmd_moments(cfg):
    d = cfg.pearson
    spec = pearson.classify(d)
    routes = _moment_routes(d, spec, cfg.options["N_max"], cfg.options["tol"])
    rows = [(n, v, name) for name, mu in routes.items() for n, v in enumerate(mu)]
    return Result(["n", "mu_n", "route"], rows, {"spec": spec.as_dict()})


def _cmd_reduce(cfg):
    m = cfg.model
    kappa, L, lam0 = multiboson.vacuum_lambdas(m, cfg.lambdas)
    rs = _reduced(cfg)
    M = cfg.options["M"] if rs.dim is None else min(cfg.options["M"], rs.dim + 1)
    rows = [(n, rs.seq.R(n), rs.seq.D(n)) for n in range(M)]
    doc = {"kappa": kappa, "L": L, "lambda0": {str(l): v for l, v in lam0.items()},
           "dimension": multiboson.dimension_class(m), "reduced": rs.as_dict()}
    return Result(["n", "R", "D"], rows, doc)


def _measure(cfg):
    seq, spec = _structural(cfg)
    M = cfg.options["M"]
    if cfg.model is not None:
        rs = _reduced(cfg)
        if rs.dim is not None:
            M = min(M, rs.dim)
    return spectral.spectrum(spectral.jacobi_matrix(seq, M)), spec


def _cmd_spectrum(cfg):
    meas, spec = _measure(cfg)
    return Result(["omega", "mu"], meas.as_rows(), {"M": len(meas.nodes)})


def _cmd_amplitude(cfg):
    meas, _ = _measure(cfg)
    rows = []
    for t in cfg.options["t"]:
        a = spectral.vacuum_amplitude(meas, t)
        rows.append((t, a.real, a.imag, abs(a)))
    return Result(["t", "re", "im", "abs"], rows, {"M": len(meas.nodes)})


def _check(rows, name, value, tol):
    rows.append((name, value, tol, "pass" if value <= tol else "FAIL"))


def _rel_coef(a, b):
    n = max(len(a.coef), len(b.coef))
    ca = np.pad(a.coef, (0, n - len(a.coef)))
    cb = np.pad(b.coef, (0, n - len(b.coef)))
    return float(np.max(np.abs(ca - cb)) / np.max(np.abs(ca)))


def verify_pearson(d: pearson.PearsonData, tol: float = 1e-16, N: int = 10):
    spec = pearson.classify(d)
    rows = []
    nodes, _ = pearson.support_grid(spec, 50)
    rho = pearson.weight_function(spec)
    _check(rows, "pearson_residual", max(abs(pearson.pearson_residual(d, spec, w, relative=True, rho=rho))
                                         for w in nodes), 1e-10)
    rec = qhahn.ops_by_recurrence(d, N)
    rod = qhahn.ops_by_rodrigues(d, N)
    fwd = qhahn.ops_by_forward(d, N)
    _check(rows, "triple_agreement", max(max(_rel_coef(rec[n], rod[n]), _rel_coef(rec[n], fwd[n]))
                                         for n in range(N + 1)), 1e-9)
    _check(rows, "hahn_equation", max(
        float(np.max(np.abs((qhahn.hahn_apply(d, rec[n]) - qhahn.hahn_eigenvalue(d, n) * rec[n]).coef))
              / np.max(np.abs(rec[n].coef))) for n in range(1, N + 1)), 1e-9)
    clo = 0.0
    for k in range(1, 4):
        dk = pearson.derive(d, k)
        for n in range(k + 1, min(N, 8) + 1):
            clo = max(clo, _rel_coef(qhahn.qderiv_closure_check(d, n, k, rec),
                                     qhahn.ops_by_recurrence(dk, n - k)[n - k]))
    _check(rows, "qderivative_closure", clo, 1e-9)
    seq = qhahn.structural_functions(d)
    G = qhahn.orthonormal_gram(spec, seq, min(N, 12), tol)
    _check(rows, "orthonormality", float(np.max(np.abs(G - np.eye(len(G))))), 1e-8)
    routes = _moment_routes(d, spec, 20, tol)
    ref = routes["direct"]
    scale = abs(ref[0])
    worst = 0.0
    for name, mu in routes.items():
        for n, v in enumerate(mu):
            if abs(ref[n]) > 1e-12 * scale:
                worst = max(worst, abs(v - ref[n]) / abs(ref[n]))
    _check(rows, "moment_routes", worst, 1e-8)
    meas = spectral.spectrum(spectral.jacobi_matrix(seq, 20))
    norm = np.asarray(ref) / ref[0]
    _check(rows, "gauss_exactness", max(abs(meas.moment(k) - norm[k]) / abs(norm[k])
                                        for k in range(16) if abs(norm[k]) > 1e-12), 1e-8)
    return rows


def verify_model(cfg: RunConfig, cutoff: Optional[int] = None):
    m = cfg.model
    multiboson.validate_model(m)
    kmax = max(abs(x) for x in m.k)
    if cutoff is None:
        cutoff = max(3, 2 * kmax)
        while (cutoff + 2) ** (m.N + 1) <= 1000:
            cutoff += 1
    F = multiboson.fock_oracle(m, cutoff)
    rows = []
    for name, v in multiboson.oracle_residuals(m, F).items():
        _check(rows, f"commutator {name}", float(v), 1e-10)
    rs = _reduced(cfg)
    M = 1
    while (rs.dim is None or M < rs.dim) and all(
            0 <= x <= cutoff for x in rs.occupations(M)):
        M += 1
    H = multiboson.reduced_hamiltonian_oracle(m, F, rs, M)
    J = np.diag([rs.seq.D(n) for n in range(M)])
    off = np.sqrt([rs.seq.R(n) for n in range(1, M)])
    J = J + np.diag(off, 1) + np.diag(off, -1)
    _check(rows, "reduced_jacobi_vs_oracle", float(np.max(np.abs(H - J))), 1e-10)
    return rows


def _cmd_verify(cfg):
    if cfg.pearson is not None:
        rows = verify_pearson(cfg.pearson, cfg.options["tol"], min(cfg.options["N_max"], 12))
    else:
        rows = verify_model(cfg)
    status = EXIT_OK if all(r[3] == "pass" for r in rows) else EXIT_FAILED_CHECKS
    return Result(["check", "value", "tolerance", "status"], rows, status=status)


_DISPATCH = {"classify": _cmd_classify, "weight": _cmd_weight, "poly": _cmd_poly,
             "moments": _cmd_moments, "reduce": _cmd_reduce, "spectrum": _cmd_spectrum,
             "amplitude": _cmd_amplitude, "verify": _cmd_verify}


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, NonConvergenceError):
        return EXIT_NONCONV
    return EXIT_DOMAIN


def run(cfg: RunConfig, out=None, err=None, fmt: Optional[str] = None, quiet: bool = False) -> int:
    """Execute a parsed config; returns the exit status."""
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    fmt = fmt or cfg.options.get("format", "csv")
    try:
        res = _DISPATCH[cfg.command](cfg)
    except (QHahnError, ZeroDivisionError, OverflowError) as exc:
        code = exit_code_for(exc)
        doc = exc.to_dict() if isinstance(exc, QHahnError) else {"error": "domain", "message": str(exc)}
        doc["exit_code"] = code
        err.write(json.dumps(doc) + "\n")
        return code
    text = render(res, fmt)
    path = cfg.options.get("output")
    if path:
        Path(path).write_text(text)
        if res.rows is not None and res.doc and fmt != "json":
            Path(str(path) + ".json").write_text(json.dumps(res.doc, indent=2, default=_num) + "\n")
    if not quiet and not path:
        out.write(text)
    return res.status


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="qhahn", description=__doc__.split("\n\n")[0])
    ap.add_argument("config", help="YAML or JSON configuration file ('-' for stdin)")
    ap.add_argument("--output", help="write the result to this path")
    ap.add_argument("--format", choices=FORMATS, help="output format (default from config, csv)")
    ap.add_argument("--quiet", action="store_true", help="do not echo results to stdout")
    args = ap.parse_args(argv)
    try:
        if args.config == "-":
            text = sys.stdin.read()
        else:
            text = Path(args.config).read_bytes()
        cfg = parse_config(text)
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": "config", "message": str(exc),
                                     "exit_code": EXIT_CONFIG}) + "\n")
        return EXIT_CONFIG
    except ConfigError as exc:
        doc = exc.to_dict()
        doc["exit_code"] = EXIT_CONFIG
        sys.stderr.write(json.dumps(doc) + "\n")
        return EXIT_CONFIG
    if args.output:
        cfg.options["output"] = args.output
    return run(cfg, fmt=args.format, quiet=args.quiet)


if __name__ == "__main__":
    sys.exit(main())
