"""Command-line interface: fit, sample, grid, moments, test-symmetry.

Input and output are CSV (12 significant digits, comma separated, '#'
comments allowed, angles in radians on output).  Fit reports are
line-delimited JSON records with stable field names plus a readable
table on stdout.  Every command is deterministic given (input, config,
seed); output files are written atomically.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass

import numpy as np

from .families import Family, FamilyParams, SamplingError, SeriesConvergenceError
from .inference import FitError, FitOptions, symmetry_test
from .mixture import (
    DegenerateComponentError,
    MixtureModel,
    ModelScore,
    fit_mixture,
    select_model,
)
from .numerics import IntegrationError, TWO_PI, wrap_angle
from .skew import SkewModel, find_modes, sample, shape_summary, trig_moments

__all__ = ["Dataset", "RunConfig", "ingest_csv", "main",
           "cmd_fit", "cmd_sample", "cmd_grid", "cmd_moments", "cmd_test_symmetry"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

MODEL_CODES = {
    ("sine", False): "S", ("sine", True): "SS",
    ("cosine", False): "C", ("cosine", True): "SC",
    ("wc", False): "WC", ("wc", True): "SWC",
    ("uniform", False): "U", ("uniform", True): "SU",
}


class DataError(Exception):
    """Input data could not be read or parsed."""


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


@dataclass(frozen=True)
class Dataset:
    """Angles in radians, wrapped to [-pi, pi); optional per-row labels."""

    angles: np.ndarray
    unit: str
    labels: tuple | None = None

    @property
    def n(self) -> int:
        return self.angles.shape[0]

    @property
    def dimension(self) -> int:
        return self.angles.shape[1]


@dataclass
class RunConfig:
    command: str
    family: str = "sine"
    skewed: bool = False
    mixture_k: int = 1
    compare: bool = False
    seed: int = 0
    unit: str = "rad"
    columns: str | None = None
    group_by: str | None = None
    starts: int = 5
    tol: float = 1e-8
    max_iters: int = 500
    input_path: str | None = None
    out: str | None = None
    resolution: int = 200
    n_draws: int = 0
    mu: tuple = ()
    kappa: tuple = ()
    r: float = 0.0
    lam: tuple = ()

    def fit_options(self) -> FitOptions:
        return FitOptions(n_starts=self.starts, max_iters=self.max_iters,
                          tol=self.tol, seed=self.seed)


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def _resolve_columns(spec, header, width, *, what="column"):
    """Column selectors may be 0-based indices or header names."""
    if spec is None:
        return None
    out = []
    for token in (spec if isinstance(spec, (list, tuple)) else str(spec).split(",")):
        token = str(token).strip()
        if token == "":
            continue
        try:
            idx = int(token)
        except ValueError:
            if header is None or token not in header:
                raise DataError(f"unknown {what} {token!r} (no matching header)")
            idx = header.index(token)
        if idx < 0 or idx >= width:
            raise DataError(f"{what} index {idx} out of range for {width} columns")
        out.append(idx)
    return out


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def ingest_csv(path: str, unit: str = "rad", columns=None, label_column=None) -> Dataset:
    """Parse a CSV of angles into a wrapped radian Dataset.

    '#' comment lines are skipped.  A header row is auto-detected: if
    the selected cells of the first row are all non-numeric it is a
    header, if all numeric it is data, and a mixed first row is a parse
    error.  Any later non-numeric entry fails with its line number.
    """
    if unit not in ("rad", "deg"):
        raise DataError(f"unknown unit {unit!r}; expected rad or deg")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw_lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    table = []
    for lineno, line in enumerate(raw_lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        table.append((lineno, [c.strip() for c in text.split(",")]))
    if not table:
        raise DataError(f"{path}: no data rows")

    # names among the selectors force the first row to be a header
    selectors = list(columns) if columns is not None else None
    named = any(not _is_float(str(t)) for t in (selectors or [])) or (
        label_column is not None and not _is_float(str(label_column)))
    header = None
    first_lineno, first_cells = table[0]
    if named:
        header = first_cells
        table = table[1:]
    else:
        width = len(first_cells)
        probe = ([int(t) for t in selectors] if selectors is not None
                 else [i for i in range(width)
                       if label_column is None or i != int(label_column)])
        probe = [i for i in probe if 0 <= i < width]
        numeric = [_is_float(first_cells[i]) for i in probe]
        if all(numeric):
            pass
        elif not any(numeric):
            header = first_cells
            table = table[1:]
        else:
            raise DataError(f"line {first_lineno}: could not parse numeric angles "
                            f"({','.join(first_cells)!r})")
    if not table:
        raise DataError(f"{path}: no data rows after the header")

    width = len(table[0][1])
    label_idx = None
    if label_column is not None:
        label_idx = _resolve_columns(str(label_column), header, width,
                                     what="label column")[0]
    col_idx = _resolve_columns(selectors, header, width)
    if col_idx is None:
        col_idx = [i for i in range(width) if i != label_idx]

    rows = []
    for lineno, cells in table:
        try:
            values = [float(cells[i]) for i in col_idx]
        except (ValueError, IndexError) as exc:
            raise DataError(f"line {lineno}: could not parse numeric angles "
                            f"({','.join(cells)!r})") from exc
        label = cells[label_idx] if label_idx is not None else None
        rows.append((values, label))

    angles = np.asarray([v for v, _ in rows], dtype=float)
    if unit == "deg":
        angles = angles * (math.pi / 180.0)
    angles = wrap_angle(angles)
    labels = tuple(l for _, l in rows) if label_column is not None else None
    return Dataset(angles=angles, unit=unit, labels=labels)


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-sineskew-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_record(obj) -> str:
    def default(o):
        if isinstance(o, (np.floating, np.integer)):
            return float(o)
        raise TypeError(type(o))

    def roundtrip(o):
        if isinstance(o, float):
            return float(_fmt(o))
        if isinstance(o, dict):
            return {k: roundtrip(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [roundtrip(v) for v in o]
        if isinstance(o, (np.floating, np.integer)):
            return roundtrip(float(o))
        if isinstance(o, np.ndarray):
            return roundtrip(o.tolist())
        return o

    return json.dumps(roundtrip(obj), sort_keys=True, default=default)


def _model_record(code: str, family: str, skewed: bool, mix: MixtureModel,
                  score: ModelScore, converged: bool, group=None,
                  symmetry=None) -> dict:
    comps = []
    for c, w in zip(mix.components, mix.weights):
        entry = {"weight": w, "mu": list(c.mu), "lambda": list(c.lam)}
        if family != "uniform":
            entry["kappa"] = list(c.theta.kappa)
            if c.dimension == 2:
                entry["r"] = c.theta.r
        comps.append(entry)
    record = {
        "model": code,
        "family": family,
        "skewed": skewed,
        "K": mix.n_components,
        "n": score.n,
        "log_lik": score.log_lik,
        "k_params": score.k_params,
        "aic": score.aic,
        "bic": score.bic,
        "converged": converged,
        "components": comps,
        "group": group,
    }
    if symmetry is not None:
        record["symmetry"] = symmetry
    return record


def _human_table(records) -> str:
    cols = ["model", "comp", "weight", "mu1", "mu2", "kappa1", "kappa2", "r",
            "lambda1", "lambda2", "LL", "AIC", "BIC"]
    lines = ["  ".join(f"{c:>9}" for c in cols)]
    for rec in records:
        for idx, comp in enumerate(rec["components"]):
            kap = comp.get("kappa", ["--", "--"])
            r = comp.get("r", "--")
            row = [
                rec["model"] if idx == 0 else "",
                str(idx + 1),
                f"{comp['weight']:.3f}",
                f"{comp['mu'][0]:.3f}",
                f"{comp['mu'][1]:.3f}" if len(comp["mu"]) > 1 else "--",
                f"{kap[0]:.3f}" if kap[0] != "--" else "--",
                f"{kap[1]:.3f}" if len(kap) > 1 and kap[1] != "--" else "--",
                f"{r:.3f}" if r != "--" else "--",
                f"{comp['lambda'][0]:.3f}" if rec["skewed"] else "--",
                (f"{comp['lambda'][1]:.3f}" if len(comp["lambda"]) > 1 else "--")
                if rec["skewed"] else "--",
            ]
            if idx == 0:
                ll = f"{rec['log_lik']:.1f}"
                if rec.get("symmetry") and rec["symmetry"]["reject_at_0.01"]:
                    ll += "*"
                row += [ll, f"{rec['aic']:.1f}", f"{rec['bic']:.1f}"]
            else:
                row += ["", "", ""]
            lines.append("  ".join(f"{c:>9}" for c in row))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _fit_one_family(family_name: str, skewed: bool, k: int, data: np.ndarray,
                    options: FitOptions, warm=None):
    family = Family.parse(family_name)
    mix, score, converged = fit_mixture(family, skewed, k, data, options, warm=warm)
    return mix, score, converged


def _fit_group(config: RunConfig, data: np.ndarray, group=None) -> list:
    options = config.fit_options()
    k = config.mixture_k
    records = []
    variants = ([("sine", False), ("sine", True), ("cosine", False), ("cosine", True),
                 ("wc", False), ("wc", True)]
                if config.compare else [(config.family, config.skewed)])
    sym_fits = {}
    for family_name, skewed in variants:
        code = MODEL_CODES[(family_name, skewed)]
        warm = None
        if skewed and (family_name, False) in sym_fits:
            sym_mix, _ = sym_fits[(family_name, False)]
            warm = MixtureModel(
                tuple(SkewModel(c.mu, c.theta, (0.0,) * c.dimension)
                      for c in sym_mix.components),
                sym_mix.weights)
        mix, score, converged = _fit_one_family(family_name, skewed, k, data,
                                                options, warm=warm)
        symmetry = None
        if skewed and (family_name, False) in sym_fits:
            _, sym_score = sym_fits[(family_name, False)]
            stat = max(0.0, 2.0 * (score.log_lik - sym_score.log_lik))
            df = k * data.shape[1]
            from scipy.special import gammaincc
            p = float(gammaincc(df / 2.0, stat / 2.0))
            symmetry = {"statistic": stat, "df": df, "p_value": p,
                        "reject_at_0.01": bool(p < 0.01)}
        if not skewed:
            sym_fits[(family_name, False)] = (mix, score)
        records.append(_model_record(code, family_name, skewed, mix, score,
                                     converged, group=group, symmetry=symmetry))
    return records


def cmd_fit(config: RunConfig) -> int:
    dataset = ingest_csv(config.input_path, config.unit, _split_columns(config.columns),
                         label_column=config.group_by)
    if config.group_by is not None:
        groups = sorted(set(dataset.labels))
        records = []
        for g in groups:
            mask = np.array([l == g for l in dataset.labels])
            records.extend(_fit_group(config, dataset.angles[mask], group=g))
    else:
        records = _fit_group(config, dataset.angles)

    lines = [_json_record(r) for r in records]
    if config.out:
        _atomic_write(config.out, "\n".join(lines) + "\n")
    groups = sorted(set(r["group"] for r in records))
    for g in groups:
        sub = [r for r in records if r["group"] == g]
        if g is not None:
            print(f"== group {g} (n={sub[0]['n']})")
        print(_human_table(sub))
        if len(sub) > 1:
            ranking = select_model([(r["model"], ModelScore(
                r["log_lik"], r["k_params"], r["aic"], r["bic"], r["n"])) for r in sub])
            note = " (AIC and BIC disagree)" if ranking.criteria_disagree else ""
            print(f"best by AIC: {ranking.best_aic}; best by BIC: {ranking.best_bic}{note}")
    return EXIT_OK


def _build_model(config: RunConfig) -> SkewModel:
    family = Family.parse(config.family)
    d = len(config.mu)
    if d == 0:
        raise ValueError("--mu is required to specify the model location")
    lam = config.lam if config.lam else (0.0,) * d
    if family is Family.UNIFORM:
        theta = FamilyParams(family, d)
    else:
        dep = config.r if d == 2 else None
        theta = FamilyParams(family, d, kappa=config.kappa, dep=dep)
    return SkewModel(config.mu, theta, lam)


def cmd_sample(config: RunConfig) -> int:
    model = _build_model(config)
    rng = np.random.default_rng(config.seed)
    draws = sample(model, config.n_draws, rng)
    d = model.dimension
    lines = ["# sine-skewed sample: family=%s n=%d seed=%d" % (
        config.family, config.n_draws, config.seed)]
    lines.append(",".join(f"x{s + 1}" for s in range(d)))
    for row in draws:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if config.out:
        _atomic_write(config.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_grid(config: RunConfig) -> int:
    model = _build_model(config)
    if model.dimension != 2:
        raise ValueError("grid export requires a bivariate model")
    from .skew import skew_log_density

    res = config.resolution
    axis = -np.pi + TWO_PI * np.arange(res) / res
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=-1)
    dens = np.exp(skew_log_density(model, pts))
    modes = find_modes(model)
    lines = ["# density grid: family=%s resolution=%d" % (config.family, res)]
    for m in modes:
        ridge = f" ridge={','.join(str(i + 1) for i in m.ridge)}" if m.ridge else ""
        lines.append("# mode: %s %s density=%s%s" % (
            _fmt(m.point[0]), _fmt(m.point[1]), _fmt(m.density), ridge))
    lines.append("x1,x2,density")
    for p, v in zip(pts, dens):
        lines.append(f"{_fmt(p[0])},{_fmt(p[1])},{_fmt(v)}")
    text = "\n".join(lines) + "\n"
    if config.out:
        _atomic_write(config.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_moments(config: RunConfig) -> int:
    model = _build_model(config)
    d = model.dimension
    summary = shape_summary(model)
    moments = {}
    for s in range(d):
        e = [0] * d
        e[s] = 1
        a1, b1 = trig_moments(model, e)
        e2 = [0] * d
        e2[s] = 2
        a2, b2 = trig_moments(model, e2)
        moments[f"alpha_e{s + 1}"] = a1
        moments[f"beta_e{s + 1}"] = b1
        moments[f"alpha_2e{s + 1}"] = a2
        moments[f"beta_2e{s + 1}"] = b2
    record = {
        "family": config.family,
        "mu": list(model.mu),
        "lambda": list(model.lam),
        "moments": moments,
        "mean_direction": list(summary.mean_direction),
        "concentration": list(summary.concentration),
        "variance": list(summary.variance),
        "skewness": list(summary.skewness),
        "kurtosis": list(summary.kurtosis),
    }
    text = _json_record(record) + "\n"
    if config.out:
        _atomic_write(config.out, text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_test_symmetry(config: RunConfig) -> int:
    dataset = ingest_csv(config.input_path, config.unit, _split_columns(config.columns))
    result = symmetry_test(Family.parse(config.family), dataset.angles,
                           config.fit_options())
    record = {
        "family": config.family,
        "n": dataset.n,
        "statistic": result.statistic,
        "df": result.df,
        "p_value": result.p_value,
        "reject_at": {str(a): r for a, r in result.reject_at.items()},
    }
    text = _json_record(record) + "\n"
    if config.out:
        _atomic_write(config.out, text)
    sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _split_columns(spec):
    if spec is None:
        return None
    return [c for c in str(spec).split(",") if c.strip() != ""]


def _angles_tuple(text: str) -> tuple:
    return tuple(float(v) for v in str(text).split(","))


def _build_parser(suppress_defaults: bool = False) -> argparse.ArgumentParser:
    # with suppress_defaults the parsed namespace holds only explicitly
    # given options, which lets the config file fill in the rest
    def dflt(value):
        return argparse.SUPPRESS if suppress_defaults else value

    parser = argparse.ArgumentParser(
        prog="sineskew",
        description="Sine-skewed toroidal distributions: fitting, sampling, "
                    "density grids, moments, and symmetry tests.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model_spec=False, needs_input=False):
        p.add_argument("--model", dest="family", default=dflt("sine"),
                       choices=["uniform", "sine", "cosine", "wc"])
        p.add_argument("--seed", type=int, default=dflt(0), help="64-bit unsigned seed")
        p.add_argument("--out", default=dflt(None), help="output file path")
        p.add_argument("--config", default=dflt(None),
                       help="key=value file overriding defaults")
        if needs_input:
            p.add_argument("input", help="input CSV of angles")
            p.add_argument("--unit", choices=["rad", "deg"], default=dflt("rad"))
            p.add_argument("--columns", default=dflt(None),
                           help="comma-separated column indices or names")
            p.add_argument("--starts", type=int, default=dflt(5))
            p.add_argument("--tol", type=float, default=dflt(1e-8))
            p.add_argument("--max-iters", type=int, default=dflt(500))
        if model_spec:
            p.add_argument("--mu", type=_angles_tuple, default=dflt(()))
            p.add_argument("--kappa", type=_angles_tuple, default=dflt(()))
            p.add_argument("--r", type=float, default=dflt(0.0))
            p.add_argument("--lam", type=_angles_tuple, default=dflt(()),
                           help="skewness vector (l1 norm at most 1)")

    p_fit = sub.add_parser("fit", help="fit (mixtures of) skewed models to data")
    common(p_fit, needs_input=True)
    p_fit.add_argument("--skewed", action="store_true", default=dflt(False))
    p_fit.add_argument("--mixture", type=int, default=dflt(1), metavar="K")
    p_fit.add_argument("--compare", action="store_true", default=dflt(False),
                       help="fit all six bivariate variants S/SS/C/SC/WC/SWC")
    p_fit.add_argument("--group-by", default=dflt(None),
                       help="label column; fit each label's subset separately")

    p_sample = sub.add_parser("sample", help="draw from a specified model")
    common(p_sample, model_spec=True)
    p_sample.add_argument("--n", type=int, default=dflt(0), dest="n_draws")

    p_grid = sub.add_parser("grid", help="export a density grid and mode list")
    common(p_grid, model_spec=True)
    p_grid.add_argument("--resolution", type=int, default=dflt(200))

    p_mom = sub.add_parser("moments", help="trigonometric moments and shape summary")
    common(p_mom, model_spec=True)

    p_test = sub.add_parser("test-symmetry", help="likelihood-ratio symmetry test")
    common(p_test, needs_input=True)

    return parser


def _apply_config_file(args: argparse.Namespace, given: set):
    """Apply key=value config entries for options not given on the
    command line (precedence: defaults < config file < explicit flags)."""
    path = getattr(args, "config", None)
    if not path:
        return
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    casts = {"seed": int, "starts": int, "tol": float, "max_iters": int,
             "mixture": int, "n": int, "n_draws": int, "resolution": int,
             "skewed": lambda v: v.lower() in ("1", "true", "yes"),
             "compare": lambda v: v.lower() in ("1", "true", "yes"),
             "mu": _angles_tuple, "kappa": _angles_tuple, "lam": _angles_tuple,
             "r": float}
    renames = {"model": "family", "n": "n_draws", "mixture": "mixture"}
    for lineno, line in enumerate(lines, 1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if "=" not in text:
            raise DataError(f"config line {lineno}: expected key=value")
        key, value = (t.strip() for t in text.split("=", 1))
        key = key.replace("-", "_")
        attr = renames.get(key, key)
        if not hasattr(args, attr):
            raise DataError(f"config line {lineno}: unknown key {key!r}")
        if attr in given:
            continue
        cast = casts.get(attr, casts.get(key, str))
        setattr(args, attr, cast(value))


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    for name in ("family", "seed", "out", "unit", "columns", "starts", "tol",
                 "skewed", "compare", "group_by", "resolution", "n_draws",
                 "mu", "kappa", "r", "lam"):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    if hasattr(args, "max_iters"):
        cfg.max_iters = args.max_iters
    if hasattr(args, "mixture"):
        cfg.mixture_k = args.mixture
    if hasattr(args, "input"):
        cfg.input_path = args.input
    return cfg


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        given = set(vars(_build_parser(suppress_defaults=True).parse_args(argv)))
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        _apply_config_file(args, given)
        config = _config_from_args(args)
        handler = {
            "fit": cmd_fit,
            "sample": cmd_sample,
            "grid": cmd_grid,
            "moments": cmd_moments,
            "test-symmetry": cmd_test_symmetry,
        }[config.command]
        return handler(config)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FitError, DegenerateComponentError, SamplingError,
            SeriesConvergenceError, IntegrationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
