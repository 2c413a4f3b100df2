"""Command-line front end.

    qfrac eval --fn qgamma --x 2 --q 0.5
    qfrac bounds-scan --kind two-sided --out scan.csv
    qfrac solve-direct --alpha 0.5 --T 1 --modes 8 --phi phi.csv --out u.csv
    qfrac solve-inverse --alpha 0.5 --T 1e-4 --modes 8 --phi phi.csv --rho rho.csv --out f.csv
    qfrac verify --out checks.csv
    qfrac selftest

Every option can also come from a key-value file (``--config run.cfg``,
one ``key = value`` per line, or a JSON object); flags win on conflict.
Failures print a JSON error object on stderr and exit with 2 (config),
3 (io), 4 (compute) or 5 (verification failures).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import bounds, qcore, qspecial, spectral, verify
from .errors import ConfigError, IoError, QCalcError
from .qcore import QContext
from .qspecial import MLParams

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_COMPUTE = 4
EXIT_VERIFY = 5

COMMANDS = ("eval", "bounds-scan", "solve-direct", "solve-inverse", "verify", "selftest")
FUNCTIONS = ("qnumber", "qpochhammer", "qgamma", "qexp", "ml", "ml-translated")


@dataclass(frozen=True)
class RunConfig:
    command: str
    q: float | None = None
    alpha: float | None = None
    beta: float | None = None
    T: float | None = None
    modes: int | None = None
    model: str = "builtin:dirichlet-sine"
    mass: float = 1.0
    phi: str | None = None
    rho: str | None = None
    source: str | None = None
    out: str | None = None
    format: str = "csv"
    accelerate: bool = True
    eps_series: float = 1e-14
    eps_product: float = 1e-16
    fn: str | None = None
    x: float | None = None
    n: int | None = None
    s: float | None = None
    t: float | None = None
    kind: str = "two-sided"
    zpoints: int = 20
    sobolev_order: float = 0.0

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}", operation="config")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json", operation="config")
        if self.kind not in ("two-sided", "decay"):
            raise ConfigError("kind must be two-sided or decay", operation="config")
        if self.modes is not None and self.modes < 1:
            raise ConfigError("modes must be a positive integer", operation="config")
        if self.T is not None and not self.T > 0:
            raise ConfigError("T must be positive", operation="config")
        if self.zpoints < 2:
            raise ConfigError("zpoints must be at least 2", operation="config")
        need = {
            "eval": ("fn", "x"),
            "solve-direct": ("alpha", "T"),
            "solve-inverse": ("alpha", "T", "phi", "rho"),
        }.get(self.command, ())
        missing = [k for k in need if getattr(self, k) is None]
        if missing:
            raise ConfigError(f"{self.command} needs --{', --'.join(missing)}", operation="config")
        if self.fn is not None and self.fn not in FUNCTIONS:
            raise ConfigError(f"unknown function {self.fn!r}; choose from {', '.join(FUNCTIONS)}", operation="config")

    def context(self, q=None):
        try:
            return QContext(self.q if q is None else q, eps_product=self.eps_product, eps_series=self.eps_series)
        except ValueError as exc:
            raise ConfigError(str(exc), operation="config") from exc

    @property
    def strategy(self):
        return qspecial.DEFAULT if self.accelerate else qspecial.STRICT

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True, indent=1)

    @classmethod
    def from_mapping(cls, values):
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(values) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}", operation="config")
        converted = {k: _coerce(k, known[k].type, v) for k, v in values.items()}
        return cls(**converted)


def _coerce(key, typ, value):
    if value is None:
        return None
    try:
        if "bool" in typ:
            if isinstance(value, bool):
                return value
            v = str(value).strip().lower()
            if v in ("on", "true", "yes", "1"):
                return True
            if v in ("off", "false", "no", "0"):
                return False
            raise ValueError(value)
        if "int" in typ:
            f = float(value)
            if f != int(f):
                raise ValueError(value)
            return int(f)
        if "float" in typ:
            return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {value!r}", operation="config") from None
    return str(value)


def read_config_file(path):
    """key = value lines (``#`` comments) or a JSON object."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}", operation="read_config") from exc
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad JSON config: {exc}", operation="config") from exc
        return {k.replace("-", "_"): v for k, v in data.items()}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":"
        if sep not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value", operation="config")
        key, value = (p.strip() for p in line.split(sep, 1))
        values[key.replace("-", "_")] = value
    return values


# --------------------------------------------------------------------------
# file formats


def read_coefficients(path, K=None):
    """CSV with header k,value and rows k = 1..K in order."""
    rows = _read_csv(path, ("k", "value"))
    ks = [int(r[0]) for r in rows]
    if ks != list(range(1, len(ks) + 1)):
        raise IoError(f"{path}: k must run 1..K in order", operation="read_coefficients")
    vals = np.array([float(r[1]) for r in rows])
    if K is not None:
        if vals.size < K:
            raise IoError(f"{path}: {vals.size} coefficients, need {K}", operation="read_coefficients")
        vals = vals[:K]
    return spectral.CoefficientField(vals)


def read_eigenvalues(path):
    rows = _read_csv(path, ("k", "lambda"))
    ks = [int(r[0]) for r in rows]
    if ks != sorted(ks):
        raise IoError(f"{path}: rows must be sorted by k", operation="read_eigenvalues")
    return np.array([float(r[1]) for r in rows])


def _read_csv(path, header):
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            head = [h.strip() for h in next(reader, [])]
            if tuple(head) != header:
                raise IoError(f"{path}: expected header {','.join(header)}", operation="read_csv")
            rows = [r for r in reader if r]
        for r in rows:
            float(r[0]), float(r[1])
        return rows
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}", operation="read_csv") from exc
    except (ValueError, IndexError) as exc:
        raise IoError(f"{path}: malformed row ({exc})", operation="read_csv") from exc


def coefficients_csv(values):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("k", "value"))
    for k, v in enumerate(values, 1):
        w.writerow((k, repr(float(v))))
    return buf.getvalue()


def traces_csv(bundle):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("mode", "t", "u"))
    nodes = bundle.grid.nodes
    for k, row in enumerate(bundle.traces, 1):
        for t, u in zip(nodes, row):
            w.writerow((k, repr(float(t)), repr(float(u))))
    return buf.getvalue()


def _clean(obj):
    """JSON-safe copy: non-finite floats become null, numpy scalars become Python."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps(obj):
    return json.dumps(_clean(obj), indent=1, sort_keys=True) + "\n"


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}", operation="write") from exc


def _sidecar(path, suffix):
    return None if path is None else str(Path(path).with_suffix("")) + suffix


# --------------------------------------------------------------------------
# commands


def _model(cfg):
    spec = cfg.model
    if spec == "builtin:dirichlet-sine":
        if cfg.modes is None:
            raise ConfigError("builtin model needs --modes", operation="config")
        return spectral.SpectralModel.dirichlet_sine(cfg.modes, cfg.mass)
    if spec.startswith("file:"):
        lam = read_eigenvalues(spec[5:])
        if cfg.modes is not None:
            if cfg.modes > lam.size:
                raise IoError(f"eigenvalue file has {lam.size} rows, need {cfg.modes}", operation="read_eigenvalues")
            lam = lam[: cfg.modes]
        try:
            return spectral.SpectralModel(lam, cfg.mass, name=spec)
        except ValueError as exc:
            raise IoError(f"{spec}: {exc}", operation="read_eigenvalues") from exc
    raise ConfigError(f"unknown model {spec!r}", operation="config")


def cmd_eval(cfg):
    ctx = cfg.context(0.5 if cfg.q is None else None)
    x = cfg.x
    fn = cfg.fn
    if fn == "qnumber":
        res = qcore.SeriesResult(qcore.q_number(x, ctx), 1, 0.0, qcore.Status.Converged)
    elif fn == "qgamma":
        res = qcore.SeriesResult(qcore.q_gamma(x, ctx), 1, 0.0, qcore.Status.Converged)
    elif fn == "qpochhammer":
        if cfg.n is None:
            res = qcore.q_pochhammer_inf(x, ctx)
        else:
            res = qcore.SeriesResult(qcore.q_pochhammer(x, cfg.n, ctx), cfg.n, 0.0, qcore.Status.Converged)
    elif fn == "qexp":
        res = qspecial.q_exp(x, ctx)
    else:
        p = MLParams(0.5 if cfg.alpha is None else cfg.alpha, 1.0 if cfg.beta is None else cfg.beta)
        if fn == "ml":
            res = qspecial.q_mittag_leffler(p, x, ctx, cfg.strategy)
        else:
            if cfg.t is None or cfg.s is None:
                raise ConfigError("ml-translated needs --t and --s (x is the coefficient c)", operation="config")
            res = qspecial.translated_ml(p, x, cfg.t, cfg.s, ctx, cfg.strategy)
    if cfg.format == "json":
        out = dumps(
            {
                "fn": fn,
                "x": x,
                "value": res.value,
                "status": res.status.value,
                "terms_used": res.terms_used,
                "tail_estimate": res.tail_estimate,
            }
        )
    else:
        out = f"{res.value:.17g}\n"
    _write(cfg.out, out)
    return EXIT_OK


def cmd_bounds_scan(cfg):
    template = cfg.context(0.5 if cfg.q is None else None)
    alphas = [cfg.alpha] if cfg.alpha is not None else list(verify.GRID_ALPHAS)
    qs = [cfg.q] if cfg.q is not None else list(verify.GRID_QS)
    betas = [cfg.beta] if cfg.beta is not None else [0.5, 1.0, 1.5]
    rows = bounds.bounds_scan(
        alphas, betas, qs, bounds.default_radius_grid(cfg.zpoints), template, cfg.strategy, kind=cfg.kind
    )
    summary = bounds.summarize(rows)
    summary["errors"] = {str(k): v for k, v in summary["errors"].items()}
    if cfg.format == "json":
        _write(cfg.out, dumps({"rows": [r.row() for r in rows], "summary": summary}))
    else:
        _write(cfg.out, bounds.to_csv(rows))
        if cfg.out is not None:
            _write(_sidecar(cfg.out, ".summary.json"), dumps(summary))
    return EXIT_OK if not summary["errors"] else EXIT_COMPUTE


def _diagnostics(bundle, report):
    return {
        "kind": bundle.kind,
        "alpha": bundle.alpha,
        "modes": bundle.diagnostics,
        "residual_max": bundle.residual_max,
        "residual_nodes_checked": bundle.extra.get("residual_nodes_checked"),
        "estimate": asdict(report),
        "grid": {"T": bundle.grid.horizon, "q": bundle.grid.q, "J": bundle.grid.J},
    }


def _finish_solve(cfg, bundle, report, primary_csv, extra_json=None):
    diag = _diagnostics(bundle, report)
    if extra_json:
        diag.update(extra_json)
    if cfg.format == "json":
        body = {"diagnostics": diag, "t": bundle.grid.nodes, "u": bundle.traces}
        _write(cfg.out, dumps(body))
    else:
        _write(cfg.out, primary_csv)
        if cfg.out is not None:
            _write(_sidecar(cfg.out, ".diagnostics.json"), dumps(diag))
    if bundle.failed_modes:
        err = QCalcError(
            f"modes {bundle.failed_modes} could not be evaluated",
            module="spectral",
            operation=f"{bundle.kind}_solve",
        )
        _emit_error(err)
        return EXIT_COMPUTE
    return EXIT_OK


def cmd_solve_direct(cfg):
    ctx = cfg.context(0.5 if cfg.q is None else None)
    model = _model(cfg)
    K = model.K
    phi = read_coefficients(cfg.phi, K) if cfg.phi else spectral.CoefficientField.zeros(K)
    source = read_coefficients(cfg.source, K) if cfg.source else None
    alpha = cfg.alpha
    if not 0 < alpha < 2:
        raise ConfigError("alpha must lie in (0, 2)", operation="config")
    grid = spectral.TimeGrid.for_order(cfg.T, ctx.q, alpha)
    rho = None
    if alpha <= 1:
        if cfg.rho:
            raise ConfigError("--rho only applies for 1 < alpha < 2", operation="config")
        bundle = spectral.direct_solve_suborder(alpha, phi, source, model, grid, ctx, cfg.strategy)
    else:
        rho = read_coefficients(cfg.rho, K) if cfg.rho else spectral.CoefficientField.zeros(K)
        bundle = spectral.direct_solve_superorder(alpha, phi, rho, source, model, grid, ctx, cfg.strategy)
    spectral.residual_check(bundle, alpha, model, ctx)
    report = spectral.energy_estimate_report(bundle, phi, rho, source, cfg.sobolev_order, ctx)
    return _finish_solve(cfg, bundle, report, traces_csv(bundle))


def cmd_solve_inverse(cfg):
    ctx = cfg.context(0.5 if cfg.q is None else None)
    model = _model(cfg)
    K = model.K
    phi = read_coefficients(cfg.phi, K)
    rho = read_coefficients(cfg.rho, K)
    bundle, f = spectral.inverse_solve(cfg.alpha, phi, rho, cfg.T, model, ctx, cfg.strategy)
    spectral.residual_check(bundle, cfg.alpha, model, ctx)
    report = spectral.energy_estimate_report(bundle, phi, rho, None, cfg.sobolev_order, ctx)
    if cfg.format == "csv" and cfg.out is not None:
        _write(_sidecar(cfg.out, ".traces.csv"), traces_csv(bundle))
    return _finish_solve(
        cfg, bundle, report, coefficients_csv(f.coefficients), {"source": f.coefficients}
    )


def _run_checks(cfg, checks):
    rows = [c.row() for c in checks]
    failed = [r for r in rows if not r["passed"]]
    if cfg.format == "json":
        _write(cfg.out, dumps({"checks": rows, "passed": len(rows) - len(failed), "failed": len(failed)}))
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ("module", "name", "passed", "error", "tolerance", "margin")
        w.writerow(cols)
        for r in rows:
            w.writerow([
                ("true" if r[c] else "false") if c == "passed" else (repr(float(r[c])) if c in ("error", "tolerance", "margin") else r[c])
                for c in cols
            ])
        _write(cfg.out, buf.getvalue())
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_verify(cfg):
    return _run_checks(cfg, verify.trivial_checks() + verify.invariant_checks())


def cmd_selftest(cfg):
    return _run_checks(cfg, verify.trivial_checks())


HANDLERS = {
    "eval": cmd_eval,
    "bounds-scan": cmd_bounds_scan,
    "solve-direct": cmd_solve_direct,
    "solve-inverse": cmd_solve_inverse,
    "verify": cmd_verify,
    "selftest": cmd_selftest,
}


def run(cfg):
    """Execute a validated config; returns the exit status."""
    return HANDLERS[cfg.command](cfg)


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message, operation="parse_args")


def build_parser():
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="key = value file (or JSON object); flags win")
    common.add_argument("--q", type=float)
    common.add_argument("--alpha", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--T", type=float, help="time horizon")
    common.add_argument("--modes", type=int, help="number of spectral modes K")
    common.add_argument("--model", help="builtin:dirichlet-sine or file:PATH (CSV k,lambda)")
    common.add_argument("--mass", type=float, help="mass shift m > 0")
    common.add_argument("--phi", help="CSV k,value with u(0)")
    common.add_argument("--rho", help="CSV k,value: u'(0) (direct, 1<alpha<2) or u(T) (inverse)")
    common.add_argument("--source", help="CSV k,value with a time-independent source")
    common.add_argument("--out")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--accelerate", choices=("on", "off"))
    common.add_argument("--eps-series", dest="eps_series", type=float)
    common.add_argument("--eps-product", dest="eps_product", type=float)
    common.add_argument("--sobolev-order", dest="sobolev_order", type=float)
    common.add_argument("--save-config", dest="save_config", help="write the resolved config as JSON")

    parser = _Parser(prog="qfrac", description="q-fractional calculus toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("eval", parents=[common], help="evaluate one special function")
    p.add_argument("--fn", choices=FUNCTIONS)
    p.add_argument("--x", type=float)
    p.add_argument("--n", type=int, help="finite Pochhammer length")
    p.add_argument("--t", type=float, help="translation base point")
    p.add_argument("--s", type=float, help="translation point")
    p = sub.add_parser("bounds-scan", parents=[common], help="sweep the Mittag-Leffler estimates")
    p.add_argument("--kind", choices=("two-sided", "decay"))
    p.add_argument("--zpoints", type=int)
    sub.add_parser("solve-direct", parents=[common], help="direct initial-value problem")
    sub.add_parser("solve-inverse", parents=[common], help="recover a source from u(0), u(T)")
    sub.add_parser("verify", parents=[common], help="full invariant suite")
    sub.add_parser("selftest", parents=[common], help="trivial fixtures only")
    for p in sub.choices.values():
        p.error = parser.error
    return parser


def parse_config(argv):
    ns = {k: v for k, v in vars(build_parser().parse_args(argv)).items() if v is not None}
    command = ns.pop("command")
    config_path = ns.pop("config", None)
    save = ns.pop("save_config", None)
    values = read_config_file(config_path) if config_path else {}
    if values.get("command", command) != command:
        raise ConfigError("config file is for a different command", operation="config")
    values["command"] = command
    if "accelerate" in ns:
        ns["accelerate"] = ns["accelerate"] == "on"
    values.update(ns)
    return RunConfig.from_mapping(values), save


def _emit_error(err):
    sys.stderr.write(json.dumps(err.to_dict(), sort_keys=True) + "\n")


def main(argv=None):
    try:
        cfg, save = parse_config(sys.argv[1:] if argv is None else argv)
        if save:
            _write(save, cfg.to_json() + "\n")
        return run(cfg)
    except ConfigError as err:
        _emit_error(err)
        return EXIT_CONFIG
    except IoError as err:
        _emit_error(err)
        return EXIT_IO
    except QCalcError as err:
        _emit_error(err)
        return EXIT_COMPUTE
    except ValueError as err:
        # argument-domain errors raised by the numerical layer
        _emit_error(QCalcError(str(err), module="qfrac", operation="validate"))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
