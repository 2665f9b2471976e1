"""Experiment orchestration and export.

Three experiment kinds share one report layout: an Ising-chain ensemble of
random states, a synthetic spectral measure, and a single user-supplied
state with a Hamiltonian or Kraus channel.  Reports round-trip through
``report.json`` and flatten into figure-ready CSV files.
"""

import csv
import json
import math
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .exceptions import ConfigError, ExportError, InsufficientAtomsError
from .models import IsingParams, ising_hamiltonian, max_hilbert_dim, mix_seed, random_density_matrix
from .operator_space import build_weighted_space, kraus_seed, unitary_seed, validate_density_matrix
from .qfi import exact_qfi, seed_report
from .spectral import chebyshev_rate, classify_measure, gapped_rate, spectral_measure
from .synthetic import (
    coefficient_tail,
    fit_decay,
    inverse_second_moment,
    make_gapped_measure,
    make_hard_edge_measure,
    stieltjes_lanczos,
)

SCHEMA = "krylov-qfi/1"
EXPERIMENTS = ("ising", "synthetic", "custom-seed")
FORMATS = ("json", "csv")
UNRESOLVED_RESIDUAL = 0.5

SYNTHETIC_DEFAULTS = {
    "gapped": {"lmin": 1.0 / 3.0, "lmax": 1.0, "atoms": 500, "window": [5, 25]},
    "hard-edge": {"alpha": 2.0, "lmax": 1.0, "atoms": 2000, "window": [8, 40]},
}


def _as_int(value, name, minimum):
    if isinstance(value, bool) or value is None:
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    try:
        as_int = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be an integer, got {value!r}") from None
    if as_int != value or as_int < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return as_int


def _as_float(value, name):
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"{name} must be finite, got {value!r}")
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved, validated experiment configuration.

    ``params`` holds the model parameters: ``length, J, g, h`` for ``ising``;
    ``regime`` plus ``alpha`` or ``lmin``/``lmax``, ``atoms`` and ``window``
    for ``synthetic``; ``rho`` and ``hamiltonian`` (or ``kraus``/``dkraus``)
    file paths for ``custom-seed``.
    """

    experiment: str
    params: dict = field(default_factory=dict)
    ensemble_size: int = 1
    rng_seed: int = 0
    max_n: int = 150
    output_dir: str = "."
    formats: tuple = FORMATS

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        object.__setattr__(self, "ensemble_size", _as_int(self.ensemble_size, "ensemble_size", 1))
        object.__setattr__(self, "max_n", _as_int(self.max_n, "max_n", 1))
        seed = _as_int(self.rng_seed, "rng_seed", 0)
        if seed >= 2**64:
            raise ConfigError(f"rng_seed must fit in 64 bits, got {seed}")
        object.__setattr__(self, "rng_seed", seed)
        formats = self.formats
        if isinstance(formats, str):
            formats = [f.strip() for f in formats.split(",") if f.strip()]
        formats = tuple(dict.fromkeys(formats))
        if not formats or any(f not in FORMATS for f in formats):
            raise ConfigError(f"formats must be a non-empty subset of {FORMATS}, got {self.formats!r}")
        object.__setattr__(self, "formats", formats)
        object.__setattr__(self, "output_dir", str(self.output_dir))
        object.__setattr__(self, "params", self._resolve_params(dict(self.params)))

    def _resolve_params(self, p):
        if self.experiment == "ising":
            out = {
                "length": _as_int(p.get("length"), "length", 2),
                "J": _as_float(p.get("J", 1.0), "J"),
                "g": _as_float(p.get("g", -1.05), "g"),
                "h": _as_float(p.get("h", 0.5), "h"),
            }
        elif self.experiment == "synthetic":
            regime = p.get("regime")
            if regime not in SYNTHETIC_DEFAULTS:
                raise ConfigError(f"regime must be 'gapped' or 'hard-edge', got {regime!r}")
            out = {"regime": regime, **SYNTHETIC_DEFAULTS[regime]}
            out.update({k: v for k, v in p.items() if v is not None})
            out["atoms"] = _as_int(out["atoms"], "atoms", 2)
            out["lmax"] = _as_float(out["lmax"], "lmax")
            if regime == "gapped":
                out["lmin"] = _as_float(out["lmin"], "lmin")
                if not 0 < out["lmin"] < out["lmax"]:
                    raise ConfigError(f"need 0 < lmin < lmax, got {out['lmin']}, {out['lmax']}")
                out.pop("alpha", None)
            else:
                out["alpha"] = _as_float(out["alpha"], "alpha")
                if not out["alpha"] > -1:
                    raise ConfigError(f"alpha must exceed -1, got {out['alpha']}")
                if out["atoms"] < 100:
                    raise ConfigError("hard-edge measures need at least 100 atoms")
                out.pop("lmin", None)
            window = out["window"]
            if len(window) != 2:
                raise ConfigError(f"window must be [n_lo, n_hi], got {window!r}")
            lo, hi = (_as_int(w, "window", 1) for w in window)
            if hi - lo < 4:
                raise ConfigError(f"window {window!r} spans fewer than 5 levels")
            out["window"] = [lo, hi]
            if self.max_n > out["atoms"]:
                raise ConfigError(f"max_n = {self.max_n} exceeds the number of atoms {out['atoms']}")
        else:
            if not p.get("rho"):
                raise ConfigError("custom-seed needs a rho file")
            has_h = bool(p.get("hamiltonian"))
            has_k = bool(p.get("kraus")) or bool(p.get("dkraus"))
            if has_h == has_k:
                raise ConfigError("custom-seed needs either a hamiltonian file or kraus and dkraus files")
            if has_k and not (p.get("kraus") and p.get("dkraus")):
                raise ConfigError("kraus and dkraus files must be given together")
            out = {k: str(p[k]) for k in ("rho", "hamiltonian", "kraus", "dkraus") if p.get(k)}
        return out

    def to_dict(self):
        d = asdict(self)
        d["formats"] = list(self.formats)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {"experiment", "params", "ensemble_size", "rng_seed", "max_n", "output_dir", "formats"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "experiment" not in d:
            raise ConfigError("config is missing 'experiment'")
        return cls(**d)


@dataclass
class ExperimentReport:
    """Everything an experiment produced, in JSON-friendly containers.

    ``members`` holds one serialized QfiReport per ensemble member plus its
    rng seed and breakdown index; ``lanczos``, ``measure`` and
    ``distribution`` describe member 0.
    """

    config: dict
    members: list
    error_curve: dict
    lanczos: dict
    measure: dict
    distribution: list
    classification: list
    d0_stats: dict
    fits: dict = field(default_factory=dict)
    references: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def to_dict(self):
        return {"schema": SCHEMA, **asdict(self)}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        schema = d.pop("schema", None)
        if schema != SCHEMA:
            raise ValueError(f"unsupported report schema {schema!r}")
        return cls(**d)


def _floats(x):
    return [float(v) for v in np.asarray(x, dtype=float)]


def _provenance(cfg, started, seeds):
    return {
        "config": cfg.to_dict(),
        "rng_seed": cfg.rng_seed,
        "member_seeds": seeds,
        "versions": {
            "krylov_qfi": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "wall_time_s": time.perf_counter() - started,
    }


def _classify(measure):
    try:
        regime = classify_measure(measure)
    except InsufficientAtomsError as exc:
        return {"kind": "unresolved", "reason": str(exc)}
    out = asdict(regime)
    if "fit_window" in out:
        out["fit_window"] = list(out["fit_window"])
    return out


def _error_curve(curves):
    """Mean/min/max over members; a member past its last level contributes 0."""
    n_rows = max(c.size for c in curves)
    table = np.zeros((len(curves), n_rows))
    for i, c in enumerate(curves):
        table[i, : c.size] = c
    return {
        "n": list(range(1, n_rows + 1)),
        "mean_rel_error": _floats(table.mean(axis=0)),
        "min_rel_error": _floats(table.min(axis=0)),
        "max_rel_error": _floats(table.max(axis=0)),
    }


def _d0_stats(d0s):
    known = [d for d in d0s if d is not None]
    return {
        "values": d0s,
        "min": min(known) if known else None,
        "max": max(known) if known else None,
        "saturated": len(known),
    }


def _member_entry(index, seed, report, kres):
    return {"index": index, "seed": seed, "d0": kres.d0, "n": report.n, "report": report.to_dict()}


def _run_members(cfg, states, make_seed):
    """Shared body of the ensemble-style experiments.

    ``states`` yields ``(index, rng_seed, state)``; ``make_seed(state)``
    returns ``(ctx, seed, f_exact)``.  A failing member aborts the run and
    its index is attached to the exception as ``member_index``.
    """
    members, curves, classes, d0s = [], [], [], []
    first = None
    for index, seed_value, state in states:
        try:
            ctx, seed, f_exact = make_seed(state)
            report, kres = seed_report(ctx, seed, max_n=cfg.max_n, f_exact=f_exact)
            measure = spectral_measure(ctx, seed.matrix / kres.seed_norm)
        except Exception as exc:
            exc.member_index = index
            raise
        members.append(_member_entry(index, seed_value, report, kres))
        curves.append(report.rel_error)
        classes.append(_classify(measure))
        d0s.append(kres.d0)
        if first is None:
            first = (report, kres, measure)
    report, kres, measure = first
    T = kres.tridiag
    return dict(
        members=members,
        error_curve=_error_curve(curves),
        lanczos={"a": _floats(T.a), "b": _floats(T.b)},
        measure={"lambda": _floats(measure.lambdas), "weight": _floats(measure.weights)},
        distribution=_floats(report.p),
        classification=classes,
        d0_stats=_d0_stats(d0s),
    )


def run_ising_experiment(cfg):
    """Random-state ensemble under the mixed-field Ising Hamiltonian."""
    if cfg.experiment != "ising":
        raise ConfigError(f"expected an ising config, got {cfg.experiment!r}")
    started = time.perf_counter()
    params = IsingParams(**cfg.params)
    H = ising_hamiltonian(params, max_dim=max_hilbert_dim())
    seeds = [mix_seed(cfg.rng_seed, i) for i in range(cfg.ensemble_size)]

    def states():
        for i, s in enumerate(seeds):
            yield i, s, random_density_matrix(params.dim, s)

    def make_seed(rho):
        ctx = build_weighted_space(rho)
        seed, _ = unitary_seed(ctx, H)
        return ctx, seed, exact_qfi(ctx, H)

    body = _run_members(cfg, states(), make_seed)
    return ExperimentReport(config=cfg.to_dict(), provenance=_provenance(cfg, started, seeds), **body)


def load_matrix(path):
    """Read a JSON matrix ``{"re": [[...]], "im": [[...]]}`` (``im`` optional).

    Rows are listed in order (row-major); a flat list is accepted when it
    has a square length.
    """
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ExportError(f"cannot read {path}: {exc.strerror}", path=str(path)) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return _matrix_from_json(data, path)


def _matrix_from_json(data, path):
    if not isinstance(data, dict) or "re" not in data:
        raise ConfigError(f"{path}: expected an object with 're' (and optionally 'im') fields")
    try:
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: matrix entries must be numbers") from exc
    if re.shape != im.shape:
        raise ConfigError(f"{path}: 're' has shape {re.shape} but 'im' has {im.shape}")
    if re.ndim == 1:
        side = math.isqrt(re.size)
        if side * side != re.size:
            raise ConfigError(f"{path}: flat matrix of length {re.size} is not square")
        re, im = re.reshape(side, side), im.reshape(side, side)
    if re.ndim != 2 or re.shape[0] != re.shape[1]:
        raise ConfigError(f"{path}: expected a square matrix, got shape {re.shape}")
    return re + 1j * im


def load_operator_list(path):
    """A JSON list of matrices in the :func:`load_matrix` format."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ExportError(f"cannot read {path}: {exc.strerror}", path=str(path)) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, list) or not data:
        raise ConfigError(f"{path}: expected a non-empty list of matrices")
    return [_matrix_from_json(m, path) for m in data]


def run_custom_experiment(cfg):
    """A single user-supplied state with a Hamiltonian or a Kraus channel."""
    if cfg.experiment != "custom-seed":
        raise ConfigError(f"expected a custom-seed config, got {cfg.experiment!r}")
    started = time.perf_counter()
    p = cfg.params
    rho = load_matrix(p["rho"])
    if rho.shape[0] > max_hilbert_dim():
        raise ConfigError(f"state dimension {rho.shape[0]} exceeds the cap {max_hilbert_dim()}")
    if "hamiltonian" in p:
        H = load_matrix(p["hamiltonian"])

        def make_seed(state):
            ctx = build_weighted_space(validate_density_matrix(state))
            seed, _ = unitary_seed(ctx, H)
            return ctx, seed, exact_qfi(ctx, H)

    else:
        kraus, dkraus = load_operator_list(p["kraus"]), load_operator_list(p["dkraus"])

        def make_seed(state):
            rho_theta, seed, _ = kraus_seed(validate_density_matrix(state), kraus, dkraus)
            return build_weighted_space(rho_theta), seed, None

    body = _run_members(cfg, [(0, None, rho)], make_seed)
    return ExperimentReport(config=cfg.to_dict(), provenance=_provenance(cfg, started, [None]), **body)


def run_synthetic_experiment(cfg):
    """Convergence study of ``1/lambda`` on a synthetic atomic measure.

    Reports the fitted decay against the closed-form references: ``2 gamma``
    (and the Chebyshev-ellipse rate) for gapped measures, ``2 alpha + 1``
    for hard-edge measures.  A fit residual above 0.5 adds the flag
    ``"regime-unresolved"``.
    """
    if cfg.experiment != "synthetic":
        raise ConfigError(f"expected a synthetic config, got {cfg.experiment!r}")
    started = time.perf_counter()
    p = cfg.params
    if p["regime"] == "gapped":
        measure = make_gapped_measure(p["lmin"], p["lmax"], p["atoms"])
        model = "exponential"
        ratio = p["lmin"] / p["lmax"]
        gamma = gapped_rate(ratio)
        references = {
            "gamma": gamma,
            "reference_rate": 2.0 * gamma,
            "chebyshev_rate": 2.0 * chebyshev_rate(ratio),
        }
    else:
        measure = make_hard_edge_measure(p["alpha"], p["atoms"], lam_max=p["lmax"])
        model = "algebraic"
        references = {"reference_exponent": 2.0 * p["alpha"] + 1.0}

    T, _ = stieltjes_lanczos(measure, cfg.max_n)
    ell, rel_error = coefficient_tail(measure, cfg.max_n)
    F = inverse_second_moment(measure)
    lo, hi = p["window"]
    fit = fit_decay(rel_error, model, (lo, min(hi, cfg.max_n)))
    reference = references.get("reference_rate", references.get("reference_exponent"))
    fits = {
        **asdict(fit),
        "window": list(fit.window),
        "relative_deviation": (fit.value - reference) / reference,
    }
    flags = ["regime-unresolved"] if fit.residual > UNRESOLVED_RESIDUAL else []

    f_series = np.cumsum(ell**2)
    member = {
        "index": 0,
        "seed": None,
        "d0": measure.size if cfg.max_n >= measure.size else None,
        "n": int(cfg.max_n),
        "report": {
            "kind": "qfi",
            "f_exact": F,
            "f_series": _floats(f_series),
            "ell": _floats(ell),
            "rel_error": _floats(rel_error),
        },
    }
    return ExperimentReport(
        config=cfg.to_dict(),
        members=[member],
        error_curve=_error_curve([rel_error]),
        lanczos={"a": _floats(T.a), "b": _floats(T.b)},
        measure={"lambda": _floats(measure.lambdas), "weight": _floats(measure.weights)},
        distribution=_floats(ell**2 / F),
        classification=[_classify(measure)],
        d0_stats=_d0_stats([member["d0"]]),
        fits=fits,
        references=references,
        flags=flags,
        provenance=_provenance(cfg, started, [None]),
    )


def run_experiment(cfg):
    runner = {
        "ising": run_ising_experiment,
        "synthetic": run_synthetic_experiment,
        "custom-seed": run_custom_experiment,
    }[cfg.experiment]
    return runner(cfg)


# -- export -------------------------------------------------------------------

def _g17(x):
    return "" if x is None else format(float(x), ".17g")


def _clip01(x):
    return min(max(float(x), 0.0), 1.0)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def export(report, formats, out_dir):
    """Write the report files into ``out_dir`` and return their paths.

    ``json`` writes ``report.json``; ``csv`` writes ``error_curve.csv``,
    ``lanczos.csv``, ``measure.csv`` and ``distribution.csv``.  CSV floats
    use 17 significant digits and relative errors are clipped to [0, 1].
    """
    if isinstance(formats, str):
        formats = [formats]
    out = Path(out_dir)
    written = []
    path = out
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "json" in formats:
            path = out / "report.json"
            with open(path, "w") as fh:
                json.dump(report.to_dict(), fh, indent=1)
                fh.write("\n")
            written.append(path)
        if "csv" in formats:
            ec = report.error_curve
            path = out / "error_curve.csv"
            _write_csv(
                path,
                ["n", "mean_rel_error", "min_rel_error", "max_rel_error"],
                [
                    [n, _g17(_clip01(m)), _g17(_clip01(lo)), _g17(_clip01(hi))]
                    for n, m, lo, hi in zip(ec["n"], ec["mean_rel_error"], ec["min_rel_error"], ec["max_rel_error"])
                ],
            )
            written.append(path)

            a, b = report.lanczos["a"], report.lanczos["b"]
            path = out / "lanczos.csv"
            _write_csv(path, ["k", "a_k", "b_k"], [[k, _g17(a[k]), _g17(b[k - 1]) if k else ""] for k in range(len(a))])
            written.append(path)

            m = report.measure
            path = out / "measure.csv"
            _write_csv(path, ["lambda", "weight"], [[_g17(x), _g17(w)] for x, w in zip(m["lambda"], m["weight"])])
            written.append(path)

            path = out / "distribution.csv"
            _write_csv(path, ["k", "p_k"], [[k, _g17(p)] for k, p in enumerate(report.distribution)])
            written.append(path)
    except OSError as exc:
        if isinstance(exc, ExportError):
            raise
        raise ExportError(f"cannot write {path}: {exc.strerror or exc}", path=str(path)) from exc
    return written


def load_report(path):
    """Read ``report.json`` back into an :class:`ExperimentReport`."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ExportError(f"cannot read {path}: {exc.strerror}", path=str(path)) from exc
    return ExperimentReport.from_dict(data)
