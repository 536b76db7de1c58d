"""Command-line front end: ``semiriesz {transform,verify,norms,simulate}``.

Configuration is a YAML file; every key is optional and defaults come from
``data/default.yaml``. Unknown keys are rejected. ``--print-config`` shows the
fully resolved configuration.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import sys
import warnings
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import analysis, verify
from .group import GroupPoint, GroupSpec, SpectralFunction, format_coefficients, grid_samples, read_coefficients
from .spectral import CoefficientMatrix, riesz2
from .stochastic import SimConfig, default_workers, format_path_dump, sample_trajectory

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


def default_config() -> dict:
    text = resources.files("semiriesz").joinpath("data/default.yaml").read_text()
    return yaml.safe_load(text)


# values validated by their own parsers rather than key by key
OPAQUE = {"functions.f", "functions.g", "simulate.start"}


def _merge(base: dict, user: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in (user or {}).items():
        where = f"{path}.{key}" if path else str(key)
        if key not in base:
            raise ConfigError(f"unknown config key '{where}'")
        nested = isinstance(base[key], dict) and base[key] and where not in OPAQUE
        if nested and not isinstance(val, dict):
            raise ConfigError(f"config key '{where}' must be a mapping")
        if nested:
            out[key] = _merge(base[key], val, where)
        else:
            out[key] = val
    return out


def _complex(v, where: str) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
        return complex(v[0], v[1])
    raise ConfigError(f"{where}: expected a number or a [re, im] pair, got {v!r}")


@dataclass
class ExperimentConfig:
    raw: dict
    spec: GroupSpec
    alphas: list[CoefficientMatrix]
    sim: SimConfig
    base: Path = Path(".")

    @property
    def alpha(self) -> CoefficientMatrix:
        return self.alphas[0]

    def config_hash(self) -> str:
        # output location does not change results, so it stays out of the hash
        core = {k: v for k, v in self.raw.items() if k != "output"}
        blob = json.dumps(core, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def function(self, key: str) -> SpectralFunction:
        return _function(self.spec, self.raw["functions"][key], f"functions.{key}", self.base)


def _alpha(spec: GroupSpec, d: dict, where: str) -> CoefficientMatrix:
    if not isinstance(d, dict) or set(d) - {"x", "y"}:
        raise ConfigError(f"{where}: expected a mapping with keys x, y")
    ax = [_complex(v, f"{where}.x") for v in (d.get("x") or [])]
    ay = [[_complex(v, f"{where}.y") for v in row] for row in (d.get("y") or [])]
    try:
        return CoefficientMatrix(np.array(ax, complex), np.array(ay, complex) if ay else np.zeros((0, 0))).check(spec)
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from e


def _function(spec: GroupSpec, d, where: str, base: Path) -> SpectralFunction:
    if not isinstance(d, dict) or len(d) != 1 or next(iter(d)) not in ("file", "terms"):
        raise ConfigError(f"{where}: expected {{file: PATH}} or {{terms: [[kx, ky, re, im], ...]}}")
    try:
        if "file" in d:
            return read_coefficients(spec, base / Path(d["file"]).expanduser())
        terms = {}
        for t in d["terms"]:
            kx, ky, re, im = t
            terms[(tuple(kx), tuple(ky))] = complex(re, im)
        return SpectralFunction.from_terms(spec, terms)
    except (OSError, ValueError, TypeError) as e:
        raise ConfigError(f"{where}: {e}") from e


def load_config(path: str | None, seed: int | None = None) -> ExperimentConfig:
    user = {}
    if path is not None:
        try:
            user = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        if not isinstance(user, dict):
            raise ConfigError("config must be a mapping at top level")
    raw = _merge(default_config(), user)
    if seed is not None:
        raw["sim"]["master_seed"] = int(seed)
    try:
        g = raw["group"]
        spec = GroupSpec(tuple(g["cyclic_orders"]), int(g["torus_dim"]), int(g["band_limit"]))
        s = raw["sim"]
        sim = SimConfig(lam=float(s["lambda"]), horizon_T=float(s["horizon_T"]), dt=float(s["dt"]),
                        n_paths=int(s["n_paths"]), master_seed=int(s["master_seed"]), refine=int(s["refine"]))
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e
    alphas = [_alpha(spec, raw["alpha"], "alpha")]
    alphas += [_alpha(spec, a, f"norms.extra_alphas[{i}]") for i, a in enumerate(raw["norms"]["extra_alphas"] or [])]
    # relative file paths in a config are taken relative to the config itself
    base = Path(path).resolve().parent if path is not None else Path(".")
    return ExperimentConfig(raw, spec, alphas, sim, base)


# commands

def _outdir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.raw["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_transform(cfg: ExperimentConfig, workers: int) -> int:
    f = cfg.function("f")
    h = riesz2(f, cfg.alpha)
    out = _outdir(cfg)
    tag = f"# config_hash={cfg.config_hash()} seed={cfg.sim.master_seed}\n"
    (out / "transform.coeffs").write_text(tag + format_coefficients(h))
    res = cfg.raw["transform"]["torus_res"] or analysis.default_torus_res(cfg.spec)
    vals = grid_samples(h, res)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    spec = cfg.spec
    w.writerow([f"x{i + 1}" for i in range(spec.m)] + [f"y{j + 1}" for j in range(spec.n)]
               + ["re", "im", "config_hash", "seed"])
    for idx, v in np.ndenumerate(vals):
        ys = [2 * np.pi * idx[spec.m + j] / res for j in range(spec.n)]
        w.writerow(list(idx[:spec.m]) + [repr(y) for y in ys]
                   + [repr(float(v.real)), repr(float(v.imag)), cfg.config_hash(), cfg.sim.master_seed])
    (out / "transform_grid.csv").write_text(buf.getvalue())
    print(f"wrote {out / 'transform.coeffs'} and {out / 'transform_grid.csv'}")
    return EXIT_OK


VERIFY_CHECKS = ("weak_identity", "representation", "subordination", "conditional", "sensitivity")


def _excess_z(excess: float, se: float) -> float:
    # one-sided: only an excess of the left side counts against the contract
    if excess <= 0:
        return 0.0
    return excess / se if se > 0 else float("inf")


def cmd_verify(cfg: ExperimentConfig, workers: int) -> int:
    vcfg = cfg.raw["verify"]
    if cfg.sim.n_paths < 1:
        raise ConfigError("sim.n_paths must be >= 1 for verify")
    unknown = set(vcfg["checks"] or []) - set(VERIFY_CHECKS)
    if unknown or not vcfg["checks"]:
        raise ConfigError(f"verify.checks must be a nonempty subset of {list(VERIFY_CHECKS)}")
    f, g = cfg.function("f"), cfg.function("g")
    alpha, sim, thr = cfg.alpha, cfg.sim, float(vcfg["z_threshold"])
    extra = {"config_hash": cfg.config_hash(), "seed": sim.master_seed}
    params = verify.pairing_record_params(f, alpha, sim)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", verify.HorizonBiasWarning)
        records = _run_checks(cfg, workers, f, g, params, thr)
    for msg in dict.fromkeys(str(w.message) for w in caught):
        print(f"warning: {msg}", file=sys.stderr)
    lines = [r.to_json(**extra) for r in records]
    (_outdir(cfg) / "verify.jsonl").write_text("\n".join(lines) + "\n")
    for line in lines:
        print(line)
    failed = [r for r in records if not r.passed]
    for r in failed:
        print(f"FAILED: {r.to_json(**extra)}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def _run_checks(cfg, workers, f, g, params, thr) -> list:
    vcfg, alpha, sim = cfg.raw["verify"], cfg.alpha, cfg.sim
    records = []
    for check in vcfg["checks"]:
        if check == "weak_identity":
            dev = verify.weak_identity_check(f, g)
            records.append(verify.VerifyRecord(check, {"group": cfg.spec.as_dict()}, dev, 0.0, 0.0, 0.0,
                                               bool(dev <= float(vcfg["weak_identity_tol"]))))
        elif check == "representation":
            est = verify.representation_pairing(f, g, alpha, sim, workers)
            records.append(est.record(check, params, thr))
        elif check == "subordination":
            n = int(vcfg["subordination_paths"])
            rep = verify.subordination_ensemble(f, alpha, replace(sim, n_paths=n), workers=workers)
            records.append(verify.VerifyRecord(check, {**params, "n_paths": n, "violations": rep.violations},
                                               rep.min_gap, 0.0, 0.0, 0.0, not rep.violations))
            for c in rep.lp:
                records.append(verify.VerifyRecord(f"lp_contract_p{c.p:g}", {**params, "n_paths": n},
                                                   c.lhs, c.rhs, c.std_error,
                                                   _excess_z(c.lhs - c.rhs, c.std_error),
                                                   c.passed))
        elif check == "conditional":
            cmap = verify.conditional_expectation_map(f, alpha, sim, int(vcfg["torus_bins"]), workers)
            records.append(verify.VerifyRecord(check, {**params, "chi2": cmap.chi2, "dof": cmap.dof,
                                                       "empty_bins": cmap.empty_bins},
                                               cmap.max_z, 0.0, 0.0, cmap.max_z, cmap.passed(thr)))
        elif check == "sensitivity":
            rep = verify.sensitivity_check(f, g, alpha, sim, workers)
            records.append(verify.VerifyRecord(check, {**params, "step_shift": rep.step_shift},
                                               rep.horizon_shift, 0.0, 0.0, max(rep.horizon_shift, rep.step_shift),
                                               rep.passed()))
        else:
            raise ConfigError(f"unknown verify check '{check}'")
    return records


def cmd_norms(cfg: ExperimentConfig, workers: int) -> int:
    ncfg = cfg.raw["norms"]
    ps = ncfg["p"] or []
    if not ps:
        raise ConfigError("norms.p must list at least one exponent")
    ps = [float(p) for p in ps]
    if any(not p > 1 for p in ps):
        raise ConfigError("every exponent in norms.p must exceed 1")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha_index", "p", "lower_bound", "upper_bound", "choi_bound", "iterations",
                "config_hash", "seed"])
    for ai, alpha in enumerate(cfg.alphas):
        for p in ps:
            rep = analysis.operator_norm_lower_bound(
                cfg.spec, alpha, p, torus_res=ncfg["torus_res"], max_iter=int(ncfg["max_iter"]),
                tol=float(ncfg["tol"]), seed=cfg.sim.master_seed, real=bool(ncfg["real"]))
            choi = rep.choi_bound if isinstance(rep.choi_bound, float) else "NA"
            w.writerow([ai, repr(p), repr(rep.lower_bound), repr(rep.upper_bound),
                        repr(choi) if choi != "NA" else choi, rep.iterations, cfg.config_hash(),
                        cfg.sim.master_seed])
    (_outdir(cfg) / "norms.csv").write_text(buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_simulate(cfg: ExperimentConfig, workers: int) -> int:
    scfg = cfg.raw["simulate"]
    start = scfg["start"]
    if start == "stationary":
        z0 = "stationary"
    elif isinstance(start, dict) and set(start) <= {"x", "y"}:
        z0 = GroupPoint.make(cfg.spec, start.get("x") or (), start.get("y") or ())
    else:
        raise ConfigError("simulate.start must be 'stationary' or {x: [...], y: [...]}")
    out = _outdir(cfg)
    for k in scfg["paths"]:
        traj = sample_trajectory(cfg.spec, cfg.sim, z0, int(k))
        text = f"# config_hash={cfg.config_hash()}\n" + format_path_dump(traj, cfg.sim.master_seed)
        (out / f"path_{int(k)}.txt").write_text(text)
        print(f"wrote {out / f'path_{int(k)}.txt'} ({traj.n_jumps} jumps)")
    return EXIT_OK


COMMANDS = {"transform": cmd_transform, "verify": cmd_verify, "norms": cmd_norms, "simulate": cmd_simulate}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML configuration file")
    common.add_argument("--seed", type=int, metavar="U64", help="override sim.master_seed")
    common.add_argument("--workers", type=int, metavar="N", help="worker processes (default: CPU count)")
    common.add_argument("--out", metavar="DIR", help="override output.dir")
    common.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
    parser = argparse.ArgumentParser(prog="semiriesz", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg = load_config(args.config, args.seed)
        if args.out:
            cfg.raw["output"]["dir"] = args.out
        if args.print_config:
            sys.stdout.write(yaml.safe_dump(cfg.raw, sort_keys=False))
            return EXIT_OK
        workers = args.workers if args.workers else default_workers()
        if workers < 1:
            raise ConfigError("--workers must be >= 1")
        return COMMANDS[args.command](cfg, workers)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
