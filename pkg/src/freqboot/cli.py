"""Batch experiment runner.

Configuration is a flat key=value file (``#`` comments, dotted keys)
plus ``--set key=value`` overrides.  Experiments fan replicates out over
a process pool; every replicate draws from counter-based streams
addressed by its index, so reports are byte-identical for a given seed
regardless of worker count.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .bootstrap import fdwb_draws, fdwb_variance
from .density import kernel_density_estimate
from .errors import ConfigError, FreqbootError, NumericalError
from .infer import (CI_METHODS, TEST_METHODS, p_value_from_replicates,
                    sample_variogram)
from .lattice import (LatticeField, load_field_binary, load_field_csv,
                      periodogram, save_field_binary, save_field_csv)
from .simulate import (MaternSpectral, SeparableARMA, SphericalAniso,
                       TransformedGaussian, WhiteNoise, matern_model,
                       model_autocovariance, simulate_process)
from .spectral import psi_from_name, quadrature, spectral_mean
from .subsample import (BlockSpec, bias_estimate, block_variogram_contrast,
                        default_block_candidates,
                        select_block_size_min_volatility, subsample_edf,
                        subsample_ensemble, variance_estimates)

SCHEMA_VERSION = 1

PROCESS_KINDS = ("white_noise", "matern", "spherical", "separable",
                 "matern_quartic", "exp_cholesky")

KNOWN_KEYS = frozenset({
    "process.kind", "process.variance", "process.alpha", "process.nu",
    "process.phi", "process.sigma2", "process.range", "process.eta",
    "process.tau_a", "process.tau_r", "process.tau_r_list", "process.ar",
    "process.ma", "process.innov1", "process.innov2",
    "grid.sizes", "psi",
    "block.b1", "block.b2", "block.sizes", "block.auto", "block.window",
    "methods", "boot.B", "boot.kind", "boot.seed",
    "ci.level", "test.h1", "test.h2", "test.method", "test.level",
    "pvalue.plus_one",
    "density.bandwidth1", "density.bandwidth2", "density.auto",
    "replicates", "seed", "workers", "out", "format",
    "truth.value", "truth.fixture",
})


# ---------------------------------------------------------------------------
# configuration

def parse_config_file(path) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


class Settings:
    """Typed access to the flat key-value map with key diagnostics."""

    def __init__(self, values: dict[str, str]):
        self.values = dict(values)

    def raw(self, key: str, default=None):
        return self.values.get(key, default)

    def _parse(self, key, caster, default, kind):
        raw = self.raw(key)
        if raw is None:
            if default is None:
                raise ConfigError(f"missing required config key {key!r}")
            return default
        try:
            return caster(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as {kind}") from exc

    def get_float(self, key, default=None) -> float:
        return self._parse(key, float, default, "a number")

    def get_int(self, key, default=None) -> int:
        return self._parse(key, lambda s: int(s, 0), default, "an integer")

    def get_str(self, key, default=None) -> str:
        return self._parse(key, str, default, "a string")

    def get_bool(self, key, default=False) -> bool:
        def cast(s):
            t = s.strip().lower()
            if t in ("1", "true", "yes", "on"):
                return True
            if t in ("0", "false", "no", "off"):
                return False
            raise ValueError(t)
        return self._parse(key, cast, default, "a boolean")

    def get_pair(self, key, default=None) -> tuple[int, int]:
        def cast(s):
            t = s.strip().strip("()")
            a, b = t.split(",")
            return (int(a), int(b))
        return self._parse(key, cast, default, "a pair like (1,0)")

    def get_floats(self, key, default=None) -> tuple[float, ...]:
        def cast(s):
            return tuple(float(x) for x in s.split(",") if x.strip())
        return self._parse(key, cast, default, "a comma list of numbers")

    def get_sizes(self, key, default=None) -> tuple[tuple[int, int], ...]:
        def cast(s):
            out = []
            for part in s.split(","):
                part = part.strip()
                if not part:
                    continue
                a, _, b = part.partition("x")
                out.append((int(a), int(b if b else a)))
            if not out:
                raise ValueError(s)
            return tuple(out)
        return self._parse(key, cast, default, "sizes like 50x50,30x30")


def build_model(st: Settings):
    """Resolve the process descriptor into (model, generator)."""
    kind = st.get_str("process.kind", "white_noise")
    if kind not in PROCESS_KINDS:
        raise ConfigError(f"process.kind must be one of {PROCESS_KINDS}, got {kind!r}")
    if kind == "white_noise":
        return WhiteNoise(st.get_float("process.variance", 1.0)), "default"
    if kind == "matern":
        phi = st.raw("process.phi")
        return matern_model(st.get_float("process.alpha", 1.0 / 3.0),
                            st.get_float("process.nu", 1.0),
                            None if phi is None else float(phi)), "default"
    if kind == "spherical":
        return SphericalAniso(sigma2=st.get_float("process.sigma2", 1.0),
                              range_=st.get_float("process.range", 5.0),
                              eta=st.get_float("process.eta", 0.0),
                              tau_a=st.get_float("process.tau_a", 0.0),
                              tau_r=st.get_float("process.tau_r", 1.0)), "default"
    if kind == "separable":
        return SeparableARMA(ar=st.get_float("process.ar", 0.2),
                             ma=st.get_float("process.ma", -0.7),
                             innov1=st.get_str("process.innov1", "gaussian"),
                             innov2=st.get_str("process.innov2", "gaussian")), "default"
    if kind == "matern_quartic":
        phi = st.raw("process.phi")
        base = matern_model(st.get_float("process.alpha", 1.0 / 3.0),
                            st.get_float("process.nu", 1.0),
                            None if phi is None else float(phi))
        return TransformedGaussian(base=base, transform="quartic"), "default"
    # exp_cholesky: Matern-as-covariance driven by centered exponentials
    phi = st.raw("process.phi")
    base = matern_model(st.get_float("process.alpha", 1.0 / 3.0),
                        st.get_float("process.nu", 1.0),
                        None if phi is None else float(phi))
    return base, "exp_cholesky"


def build_bandwidth(st: Settings):
    b1 = st.raw("density.bandwidth1")
    b2 = st.raw("density.bandwidth2")
    st.get_bool("density.auto", True)
    if b1 is None and b2 is None:
        return None
    if b1 is None or b2 is None:
        raise ConfigError("set both density.bandwidth1 and density.bandwidth2")
    return (float(b1), float(b2))


def build_blocks(st: Settings) -> tuple[tuple[int, int], ...]:
    sizes = st.raw("block.sizes")
    if sizes is not None:
        return st.get_sizes("block.sizes")
    b1 = st.raw("block.b1")
    b2 = st.raw("block.b2")
    if b1 is None and b2 is None:
        return ()
    if b1 is None or b2 is None:
        raise ConfigError("set both block.b1 and block.b2 (or block.sizes)")
    return ((int(b1), int(b2)),)


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved description of a Monte Carlo run (picklable)."""

    kind: str
    model: object
    generator: str
    sizes: tuple[tuple[int, int], ...]
    psi_name: str
    blocks: tuple[tuple[int, int], ...]
    methods: tuple[str, ...]
    level: float
    test_level: float
    replicates: int
    B: int
    master_seed: int
    workers: int
    bandwidth: tuple[float, float] | None
    tau_r_list: tuple[float, ...]
    h1: tuple[int, int]
    h2: tuple[int, int]
    plus_one: bool
    truth: float | None

    def __post_init__(self):
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if not 0.0 < self.level < 1.0:
            raise ConfigError(f"ci.level must be in (0, 1), got {self.level}")
        boot = [m for m in self.methods if m != "subsample"]
        if boot and self.B < 100:
            raise ConfigError("boot.B must be >= 100 for bootstrap methods")
        for m in self.methods:
            if m not in CI_METHODS:
                raise ConfigError(f"unknown method {m!r}, expected subset of {CI_METHODS}")
        if not self.methods:
            raise ConfigError("no methods configured")
        if not self.sizes:
            raise ConfigError("no grid sizes configured")
        if not self.blocks and any(m != "fdwb" for m in self.methods):
            raise ConfigError(
                "subsample-based methods need block.b1/block.b2 or block.sizes")
        for (n1, n2) in self.sizes:
            for (b1, b2) in self.blocks:
                if b1 > n1 or b2 > n2:
                    raise ConfigError(f"block {b1}x{b2} does not fit grid {n1}x{n2}")


def experiment_config(st: Settings, kind: str, seed, workers) -> ExperimentConfig:
    model, generator = build_model(st)
    methods = tuple(m.strip() for m in
                    st.get_str("methods", "fdwb,hfdb,subsample").split(",") if m.strip())
    tau_raw = st.raw("process.tau_r_list")
    tau_list = (tuple(float(x) for x in tau_raw.split(",") if x.strip())
                if tau_raw is not None else (st.get_float("process.tau_r", 1.0),))
    if generator == "exp_cholesky" and any(t != 1.0 for t in tau_list):
        raise ConfigError(
            "exp_cholesky supports tau_r = 1 only (anisotropic Matern "
            "covariance is out of scope)")
    truth_raw = st.raw("truth.value")
    truth = float(truth_raw) if truth_raw is not None else None
    fixture = st.raw("truth.fixture")
    if fixture is not None:
        if truth is not None:
            raise ConfigError("give truth.value or truth.fixture, not both")
        with open(fixture) as fh:
            truth = float(json.load(fh)["value"])
    cfg = ExperimentConfig(
        kind=kind, model=model, generator=generator,
        sizes=st.get_sizes("grid.sizes", ((50, 50),)),
        psi_name=st.get_str("psi", "cos_lag{h=(1,0)}"),
        blocks=build_blocks(st),
        methods=methods,
        level=st.get_float("ci.level", 0.9),
        test_level=st.get_float("test.level", 0.1),
        replicates=st.get_int("replicates", 500),
        B=st.get_int("boot.B", 500),
        master_seed=int(seed),
        workers=int(workers),
        bandwidth=build_bandwidth(st),
        tau_r_list=tau_list,
        h1=st.get_pair("test.h1", (1, 0)),
        h2=st.get_pair("test.h2", (0, 1)),
        plus_one=st.get_bool("pvalue.plus_one", False),
        truth=truth,
    )
    psi_from_name(cfg.psi_name)  # validate early
    return cfg


# ---------------------------------------------------------------------------
# truth values

def true_spectral_mean(model, psi_name: str) -> float:
    """Analytic spectral mean for the configured psi, where available."""
    psi = psi_from_name(psi_name)
    name = psi.name
    if name.startswith("cos_lag"):
        h = tuple(int(float(x)) for x in re.findall(r"-?[0-9.]+", name))
        return model_autocovariance(model, h)
    if name.startswith("iso_contrast"):
        nums = [int(float(x)) for x in re.findall(r"-?[0-9.]+", name)]
        return (2.0 * model_autocovariance(model, (nums[0], nums[1]))
                - 2.0 * model_autocovariance(model, (nums[2], nums[3])))
    from .simulate import model_spectral_density

    def integrand(w1, w2):
        return psi.fn(w1, w2) * model_spectral_density(model, w1, w2)

    return quadrature(integrand)


# ---------------------------------------------------------------------------
# replicate workers (module level so the pool can pickle them)

def _coverage_replicate(cfg: ExperimentConfig, i: int, truth: float) -> list[dict]:
    psi = psi_from_name(cfg.psi_name)
    need_boot = any(m != "subsample" for m in cfg.methods)
    records = []
    for size_idx, (n1, n2) in enumerate(cfg.sizes):
        field = simulate_process(
            cfg.model, n1, n2,
            rngmod.stream(cfg.master_seed, rngmod.TAG_FIELD, i, size_idx),
            generator=cfg.generator)
        pg = periodogram(field)
        mhat = spectral_mean(pg, psi)
        root_n = np.sqrt(mhat.n)
        draws = var_star = None
        if need_boot:
            fhat = kernel_density_estimate(pg, bandwidth=cfg.bandwidth)
            var_star = fdwb_variance(fhat, psi)
            draws = fdwb_draws(fhat, psi, cfg.B, cfg.master_seed, i)
        alpha = 1.0 - cfg.level
        for (b1, b2) in cfg.blocks or ((0, 0),):
            ens = est = None
            if (b1, b2) != (0, 0) and any(m != "fdwb" for m in cfg.methods):
                ens = subsample_ensemble(field, BlockSpec(b1, b2), psi)
                est = variance_estimates(ens)
            for method in cfg.methods:
                sigma2_raw = sigma2 = bias = 0.0
                if method == "subsample":
                    vals = subsample_edf(ens).values
                else:
                    vals = draws
                    if method in ("hfdb", "hfdb_bias"):
                        sigma2_raw = est.sigma2_sq_hat
                        sigma2 = est.floored_sigma2
                        if not var_star > 0.0:
                            raise NumericalError("degenerate bootstrap: Var* <= 0")
                        vals = np.sqrt((var_star + sigma2) / var_star) * vals
                        if method == "hfdb_bias":
                            bias = bias_estimate(ens, mhat)
                            vals = vals + bias
                lower = mhat.value - float(np.quantile(vals, 1.0 - alpha / 2.0)) / root_n
                upper = mhat.value - float(np.quantile(vals, alpha / 2.0)) / root_n
                records.append({
                    "replicate": i, "method": method, "n1": n1, "n2": n2,
                    "b1": b1, "b2": b2, "mhat": mhat.value,
                    "lower": lower, "upper": upper,
                    "covered": int(lower <= truth <= upper),
                    "var_star": 0.0 if var_star is None else var_star,
                    "sigma2_raw": sigma2_raw, "sigma2_floored": sigma2,
                    "bias_sub": bias,
                })
    return records


def _isotropy_replicate(cfg: ExperimentConfig, i: int) -> list[dict]:
    from .spectral import psi_isotropy_contrast
    psi = psi_isotropy_contrast(cfg.h1, cfg.h2)
    need_boot = any(m != "subsample" for m in cfg.methods)
    records = []
    for t_idx, tau in enumerate(cfg.tau_r_list):
        model = cfg.model
        if isinstance(model, SphericalAniso):
            model = dataclasses.replace(model, tau_r=tau)
        for size_idx, (n1, n2) in enumerate(cfg.sizes):
            stream_id = t_idx * len(cfg.sizes) + size_idx
            field = simulate_process(
                model, n1, n2,
                rngmod.stream(cfg.master_seed, rngmod.TAG_FIELD, i, stream_id),
                generator=cfg.generator)
            pg = periodogram(field)
            mhat = spectral_mean(pg, psi)
            ts = float(mhat.n * mhat.value ** 2)
            contrast = (sample_variogram(field, cfg.h1)
                        - sample_variogram(field, cfg.h2))
            ts_vario = float(mhat.n * contrast ** 2)
            draws_sq = var_star = None
            if need_boot:
                fhat = kernel_density_estimate(pg, bandwidth=cfg.bandwidth)
                var_star = fdwb_variance(fhat, psi)
                draws_sq = fdwb_draws(fhat, psi, cfg.B, cfg.master_seed,
                                      i * len(cfg.tau_r_list) + t_idx) ** 2
            for (b1, b2) in cfg.blocks:
                spec = BlockSpec(b1, b2)
                est = None
                if any(m == "hfdb" for m in cfg.methods):
                    est = variance_estimates(subsample_ensemble(field, spec, psi))
                for method in cfg.methods:
                    sigma2_raw = sigma2 = 0.0
                    if method == "subsample":
                        copies = block_variogram_contrast(field, spec, cfg.h1, cfg.h2)
                        stats = spec.b * (copies - copies.mean()) ** 2
                        p = p_value_from_replicates(stats, ts_vario, cfg.plus_one)
                    elif method == "fdwb":
                        p = p_value_from_replicates(draws_sq, ts, cfg.plus_one)
                    elif method == "hfdb":
                        sigma2_raw = est.sigma2_sq_hat
                        sigma2 = est.floored_sigma2
                        if not var_star > 0.0:
                            raise NumericalError("degenerate bootstrap: Var* <= 0")
                        scaled = (var_star + sigma2) / var_star * draws_sq
                        p = p_value_from_replicates(scaled, ts, cfg.plus_one)
                    else:
                        raise ConfigError(
                            f"isotropy experiments support methods {TEST_METHODS}, "
                            f"got {method!r}")
                    records.append({
                        "replicate": i, "method": method, "tau_r": tau,
                        "n1": n1, "n2": n2, "b1": b1, "b2": b2,
                        "ts": ts, "p_value": p,
                        "reject": int(p < cfg.test_level),
                        "var_star": 0.0 if var_star is None else var_star,
                        "sigma2_raw": sigma2_raw, "sigma2_floored": sigma2,
                    })
    return records


def _coverage_chunk(args) -> list[dict]:
    cfg, indices, truth = args
    out = []
    for i in indices:
        out.extend(_coverage_replicate(cfg, i, truth))
    return out


def _isotropy_chunk(args) -> list[dict]:
    cfg, indices = args
    out = []
    for i in indices:
        out.extend(_isotropy_replicate(cfg, i))
    return out


# ---------------------------------------------------------------------------
# experiment drivers and reports

@dataclass
class ExperimentReport:
    kind: str
    config: dict
    summary: list[dict]
    replicates: list[dict]
    schema_version: int = SCHEMA_VERSION


def _run_chunks(worker, payloads, workers: int) -> list[dict]:
    if workers <= 1 or len(payloads) <= 1:
        results = [worker(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(worker, payloads))
    records = []
    for chunk in results:
        records.extend(chunk)
    return records


def _chunk_indices(R: int, workers: int) -> list[list[int]]:
    if workers <= 1:
        return [list(range(R))]
    n_chunks = min(R, workers * 4)
    return [list(range(R))[k::n_chunks] for k in range(n_chunks)]


def _config_echo(cfg: ExperimentConfig) -> dict:
    echo = dataclasses.asdict(cfg)
    echo["model"] = repr(cfg.model)
    # execution detail, not part of the experiment: reports must be
    # byte-identical across worker counts
    del echo["workers"]
    return echo


def _summarize(records: list[dict], keys: tuple[str, ...], flag: str) -> list[dict]:
    cells: dict[tuple, list[int]] = {}
    for rec in records:
        cells.setdefault(tuple(rec[k] for k in keys), []).append(rec[flag])
    out = []
    for cell in sorted(cells):
        flags = cells[cell]
        p = sum(flags) / len(flags)
        row = dict(zip(keys, cell))
        row["proportion"] = p
        row["mc_se"] = float(np.sqrt(p * (1.0 - p) / len(flags)))
        row["replicates"] = len(flags)
        out.append(row)
    return out


def run_coverage_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Coverage of the true spectral mean by each method's interval.

    Replicate i simulates its field from stream (seed, FIELD, i, size)
    and draws bootstrap weights from streams (seed, BOOT, i, r), so the
    report is identical for any worker count.
    """
    truth = cfg.truth
    if truth is None:
        truth = true_spectral_mean(cfg.model, cfg.psi_name)
    payloads = [(cfg, idx, truth) for idx in _chunk_indices(cfg.replicates, cfg.workers)]
    records = _run_chunks(_coverage_chunk, payloads, cfg.workers)
    records.sort(key=lambda r: (r["replicate"], r["n1"], r["n2"],
                                r["b1"], r["b2"], r["method"]))
    summary = _summarize(records, ("method", "n1", "n2", "b1", "b2"), "covered")
    echo = _config_echo(cfg)
    echo["truth"] = truth
    return ExperimentReport(kind="coverage", config=echo, summary=summary,
                            replicates=records)


def run_isotropy_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Rejection rate of the isotropy test per (tau_r, method) cell."""
    if not isinstance(cfg.model, (SphericalAniso, MaternSpectral)):
        raise ConfigError(
            "isotropy experiments need a spherical or exp-Cholesky (Matern) process")
    payloads = [(cfg, idx) for idx in _chunk_indices(cfg.replicates, cfg.workers)]
    records = _run_chunks(_isotropy_chunk, payloads, cfg.workers)
    records.sort(key=lambda r: (r["replicate"], r["tau_r"], r["n1"], r["n2"],
                                r["b1"], r["b2"], r["method"]))
    summary = _summarize(records, ("method", "tau_r", "n1", "n2", "b1", "b2"),
                         "reject")
    return ExperimentReport(kind="isotropy", config=_config_echo(cfg),
                            summary=summary, replicates=records)


# ---------------------------------------------------------------------------
# report emission

def _csv_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(rows: list[dict], columns: list[str], path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_csv_cell(row[c]) for c in columns) + "\n")


def report_to_json(report: ExperimentReport) -> str:
    payload = {"schema_version": report.schema_version, "kind": report.kind,
               "config": report.config, "summary": report.summary,
               "replicates": report.replicates}
    return json.dumps(payload, sort_keys=True, indent=1, default=repr)


def report_from_json(text: str) -> ExperimentReport:
    payload = json.loads(text)
    return ExperimentReport(kind=payload["kind"], config=payload["config"],
                            summary=payload["summary"],
                            replicates=payload["replicates"],
                            schema_version=payload["schema_version"])


def emit_report(report: ExperimentReport, out_prefix: str,
                fmt: str = "csv") -> list[str]:
    """Write the summary and per-replicate files; returns written paths."""
    if fmt not in ("csv", "json", "both"):
        raise ConfigError(f"format must be csv, json or both, got {fmt!r}")
    parent = os.path.dirname(out_prefix)
    if parent:
        os.makedirs(parent, exist_ok=True)
    written = []
    if fmt in ("csv", "both"):
        if report.kind == "coverage":
            sum_cols = ["method", "n1", "n2", "b1", "b2",
                        "proportion", "mc_se", "replicates"]
            rep_cols = ["replicate", "method", "n1", "n2", "b1", "b2", "mhat",
                        "lower", "upper", "covered", "var_star", "sigma2_raw",
                        "sigma2_floored", "bias_sub"]
        else:
            sum_cols = ["method", "tau_r", "n1", "n2", "b1", "b2",
                        "proportion", "mc_se", "replicates"]
            rep_cols = ["replicate", "method", "tau_r", "n1", "n2", "b1", "b2",
                        "ts", "p_value", "reject", "var_star", "sigma2_raw",
                        "sigma2_floored"]
        try:
            _write_csv(report.summary, sum_cols, out_prefix + "_summary.csv")
            _write_csv(report.replicates, rep_cols, out_prefix + "_replicates.csv")
        except OSError as exc:
            raise ConfigError(f"cannot write report near {out_prefix!r}: {exc}") from exc
        written += [out_prefix + "_summary.csv", out_prefix + "_replicates.csv"]
    if fmt in ("json", "both"):
        path = out_prefix + ".json"
        try:
            with open(path, "w") as fh:
                fh.write(report_to_json(report))
                fh.write("\n")
        except OSError as exc:
            raise ConfigError(f"cannot write report {path!r}: {exc}") from exc
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# single-shot helpers

def _load_field(st: Settings, path: str | None, seed: int) -> LatticeField:
    if path is not None:
        if path.endswith(".bin"):
            return load_field_binary(path)
        return load_field_csv(path)
    model, generator = build_model(st)
    (n1, n2) = st.get_sizes("grid.sizes", ((50, 50),))[0]
    gen = rngmod.stream(seed, rngmod.TAG_GENERIC, 0, 0)
    return simulate_process(model, n1, n2, gen, generator=generator)


def _single_block(st: Settings, fieldz: LatticeField, psi) -> BlockSpec:
    auto = st.get_str("block.auto", "")
    if auto == "minvol":
        window = st.get_int("block.window", 3)
        cands = default_block_candidates(fieldz.n1, fieldz.n2)
        return select_block_size_min_volatility(fieldz, psi, cands, window)
    if auto:
        raise ConfigError(f"block.auto supports only 'minvol', got {auto!r}")
    blocks = build_blocks(st)
    if not blocks:
        raise ConfigError("set block.b1/block.b2, block.sizes, or block.auto=minvol")
    return BlockSpec(*blocks[0])


def _print_json(obj) -> None:
    print(json.dumps(obj, sort_keys=True, indent=1, default=repr))


# ---------------------------------------------------------------------------
# entry point

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="freqboot",
        description="Frequency-domain resampling experiments for gridded "
                    "spatial data")
    ap.add_argument("--config", help="key=value configuration file")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a configuration key (repeatable)")
    ap.add_argument("--seed", type=int, help="master seed (overrides 'seed' key)")
    ap.add_argument("--workers", type=int, help="worker processes")
    ap.add_argument("--out", help="output path or prefix")
    ap.add_argument("--format", dest="fmt", help="report format: csv, json, both")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", help="simulate one field and write it")
    for name in ("estimate", "ci", "isotropy", "blocksize"):
        p = sub.add_parser(name)
        p.add_argument("--in", dest="infile", help="field file (.csv or .bin)")
    sub.add_parser("coverage", help="Monte Carlo coverage experiment")
    sub.add_parser("isotropy-experiment", help="Monte Carlo isotropy size/power")
    p = sub.add_parser("oracle", help="long-run Monte Carlo truth fixture")
    return ap


def _settings_from_args(args) -> Settings:
    values: dict[str, str] = {}
    if args.config:
        values.update(parse_config_file(args.config))
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        values[key.strip()] = val.strip()
    unknown = sorted(set(values) - KNOWN_KEYS)
    if unknown:
        raise ConfigError("unknown config keys: " + ", ".join(unknown))
    return Settings(values)


def _dispatch(args) -> int:
    st = _settings_from_args(args)
    if args.seed is not None:
        seed = args.seed
    else:
        seed = st.get_int("boot.seed", st.get_int("seed", 0))
    workers = args.workers if args.workers is not None else st.get_int("workers", 1)
    out = args.out if args.out is not None else st.get_str("out", "freqboot_out")
    fmt = args.fmt if args.fmt is not None else st.get_str("format", "csv")

    if args.command == "simulate":
        model, generator = build_model(st)
        (n1, n2) = st.get_sizes("grid.sizes", ((50, 50),))[0]
        fieldz = simulate_process(model, n1, n2,
                                  rngmod.stream(seed, rngmod.TAG_GENERIC, 0, 0),
                                  generator=generator)
        if fmt in ("bin", "binary"):
            save_field_binary(fieldz, out)
        else:
            save_field_csv(fieldz, out)
        print(out)
        return 0

    if args.command == "estimate":
        fieldz = _load_field(st, args.infile, seed)
        psi = psi_from_name(st.get_str("psi", "cos_lag{h=(1,0)}"))
        pg = periodogram(fieldz)
        mhat = spectral_mean(pg, psi)
        result = {"n1": fieldz.n1, "n2": fieldz.n2, "psi": psi.name,
                  "mhat": mhat.value}
        blocks = build_blocks(st)
        if blocks or st.raw("block.auto"):
            spec = _single_block(st, fieldz, psi)
            est = variance_estimates(subsample_ensemble(fieldz, spec, psi))
            result.update({"b1": spec.b1, "b2": spec.b2,
                           "sigma_sq": est.sigma_sq_hat,
                           "sigma1_sq": est.sigma1_sq_hat,
                           "sigma2_sq": est.sigma2_sq_hat,
                           "sigma2_floored": est.floored_sigma2})
        fhat = kernel_density_estimate(pg, bandwidth=build_bandwidth(st))
        result["var_star"] = fdwb_variance(fhat, psi)
        result["bandwidth"] = list(fhat.bandwidth)
        _print_json(result)
        return 0

    if args.command == "ci":
        from .bootstrap import bootstrap_distribution
        from .infer import confidence_interval, subsample_confidence_interval
        fieldz = _load_field(st, args.infile, seed)
        psi = psi_from_name(st.get_str("psi", "cos_lag{h=(1,0)}"))
        method = st.get_str("boot.kind", "hfdb")
        level = st.get_float("ci.level", 0.9)
        mhat = spectral_mean(periodogram(fieldz), psi)
        if method == "subsample":
            spec = _single_block(st, fieldz, psi)
            ci = subsample_confidence_interval(
                mhat, subsample_ensemble(fieldz, spec, psi), level)
        else:
            spec = None
            if method in ("hfdb", "hfdb_bias"):
                spec = _single_block(st, fieldz, psi)
            draws = bootstrap_distribution(fieldz, psi, spec,
                                           st.get_int("boot.B", 500), method,
                                           seed, bandwidth=build_bandwidth(st))
            ci = confidence_interval(mhat, draws, level)
        _print_json({"method": ci.method, "level": ci.level, "mhat": mhat.value,
                     "lower": ci.lower, "upper": ci.upper})
        return 0

    if args.command == "isotropy":
        from .infer import isotropy_test
        fieldz = _load_field(st, args.infile, seed)
        method = st.get_str("test.method", "hfdb")
        h1 = st.get_pair("test.h1", (1, 0))
        h2 = st.get_pair("test.h2", (0, 1))
        spec = None
        if method in ("hfdb", "subsample"):
            from .spectral import psi_isotropy_contrast
            spec = _single_block(st, fieldz, psi_isotropy_contrast(h1, h2))
        res = isotropy_test(fieldz, h1, h2, method=method, spec=spec,
                            B=st.get_int("boot.B", 500), master_seed=seed,
                            bandwidth=build_bandwidth(st),
                            plus_one=st.get_bool("pvalue.plus_one", False))
        _print_json({"ts": res.ts, "p_value": res.p_value, "method": res.method,
                     "h1": list(res.h1), "h2": list(res.h2)})
        return 0

    if args.command == "blocksize":
        fieldz = _load_field(st, args.infile, seed)
        psi = psi_from_name(st.get_str("psi", "cos_lag{h=(1,0)}"))
        window = st.get_int("block.window", 3)
        cands = default_block_candidates(fieldz.n1, fieldz.n2)
        spec = select_block_size_min_volatility(fieldz, psi, cands, window)
        _print_json({"b1": spec.b1, "b2": spec.b2,
                     "candidates": [[c.b1, c.b2] for c in cands],
                     "window": window})
        return 0

    if args.command == "oracle":
        model, generator = build_model(st)
        psi = psi_from_name(st.get_str("psi", "cos_lag{h=(1,0)}"))
        (n1, n2) = st.get_sizes("grid.sizes", ((50, 50),))[0]
        R = st.get_int("replicates", 2000)
        vals = np.empty(R)
        for i in range(R):
            f = simulate_process(model, n1, n2,
                                 rngmod.stream(seed, rngmod.TAG_ORACLE, i, 0),
                                 generator=generator)
            vals[i] = spectral_mean(periodogram(f), psi).value
        fixture = {"schema_version": SCHEMA_VERSION,
                   "kind": "spectral_mean_oracle", "model": repr(model),
                   "generator": generator, "psi": psi.name,
                   "n1": n1, "n2": n2, "replicates": R, "seed": seed,
                   "value": float(np.mean(vals)),
                   "se": float(np.std(vals, ddof=1) / np.sqrt(R)),
                   "var_h": float(n1 * n2 * np.var(vals, ddof=1))}
        with open(out, "w") as fh:
            json.dump(fixture, fh, sort_keys=True, indent=1)
            fh.write("\n")
        print(out)
        return 0

    if args.command == "coverage":
        cfg = experiment_config(st, "coverage", seed, workers)
        report = run_coverage_experiment(cfg)
    else:  # isotropy-experiment
        cfg = experiment_config(st, "isotropy", seed, workers)
        report = run_isotropy_experiment(cfg)
    paths = emit_report(report, out, fmt)
    for row in report.summary:
        print(" ".join(f"{k}={_csv_cell(v)}" for k, v in row.items()))
    for p in paths:
        print("wrote", p, file=sys.stderr)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except FreqbootError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
