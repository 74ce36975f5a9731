"""Experiment configuration, chain running, persistence and reports.

Every output is a pure function of (config, dataset bytes): seeds are
mandatory, random streams are derived per role (core sampler = child 0,
augmentation = child 1), and no wall-clock state is written to any output
file.

Chain files are delimited text with the fixed column schema
``iter,K,D,theta1,r1,w1,m1,w_r1``; functionals a sampler does not produce
(stick-breaking quantities of a core-only run) are written as ``nan``.  A
JSON sidecar carries the config echo, versions and acceptance counters;
sequential importance runs additionally write one log weight per row to a
``.weights.txt`` file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .acceptreject import _batch_pattern_mask
from .augment import run_transcoding_sampler
from .datasets import load_dataset
from .diagnostics import (FUNCTIONAL_NAMES, deviance_core, ess,
                          extract_functionals, iat_info)
from .errors import ConfigError, DatasetError
from .model import ModelSpec
from .priors import stick_breaking_paths
from .rng import RngStream
from .samplers import CollapsedGibbs, SisS2, SliceSampler
from .transcode import transcode

SAMPLER_IDS = ("collapsed2", "sis_s2", "slice", "collapsed2+transcoding",
               "sis_s2+transcoding")

CHAIN_COLUMNS = ("iter",) + FUNCTIONAL_NAMES


@dataclass(frozen=True)
class ExperimentConfig:
    sampler: str
    dataset: str
    seed: int
    outdir: str = "."
    iterations: int = 100_000
    burn_in: float = 0.1
    alpha: float = 1.0
    base_a: float = 1.0
    base_b: float = 1.0
    trials: int | None = None
    moves: tuple = ()
    transcode_every: int = 1

    def __post_init__(self):
        if self.sampler not in SAMPLER_IDS:
            raise ConfigError(f"unknown sampler {self.sampler!r}; "
                              f"choose from {', '.join(SAMPLER_IDS)}")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if not 0.0 <= self.burn_in < 1.0:
            raise ConfigError("burn_in must lie in [0, 1)")
        if self.seed is None:
            raise ConfigError("seed is required; runs never use wall-clock seeds")
        if self.transcode_every < 1:
            raise ConfigError("transcode_every must be >= 1")
        if any(m not in (1, 2, 3) for m in self.moves):
            raise ConfigError("moves must be a subset of {1,2,3}")

    @property
    def burn_iters(self) -> int:
        return int(self.burn_in * self.iterations)


_CONFIG_TYPES = {
    "sampler": str, "dataset": str, "outdir": str,
    "seed": int, "iterations": int, "trials": int, "transcode_every": int,
    "burn_in": float, "alpha": float, "base_a": float, "base_b": float,
    "moves": "moves",
}


def parse_config_file(path) -> dict:
    """Read ``key = value`` lines (``#`` comments allowed) into a dict."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    out = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


def build_config(mapping: dict) -> ExperimentConfig:
    """Validate and convert raw string/typed values into a config."""
    kwargs = {}
    for key, value in mapping.items():
        if value is None:
            continue
        if key not in _CONFIG_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        kind = _CONFIG_TYPES[key]
        if kind == "moves":
            kwargs[key] = _parse_moves(value)
            continue
        try:
            kwargs[key] = kind(value)
        except (TypeError, ValueError):
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    for required in ("sampler", "dataset", "seed"):
        if required not in kwargs:
            raise ConfigError(f"missing required config key {required!r}")
    return ExperimentConfig(**kwargs)


def _parse_moves(value) -> tuple:
    if isinstance(value, (tuple, list)):
        return tuple(sorted(set(int(v) for v in value)))
    text = str(value).strip().lower()
    if text in ("", "none"):
        return ()
    return tuple(sorted(set(int(tok) for tok in text.split(","))))


@dataclass
class ChainData:
    """In-memory result of one run: functional rows plus bookkeeping."""

    config: ExperimentConfig
    rows: np.ndarray  # (kept, 7) functional values, NaN where undefined
    iters: np.ndarray
    log_weights: np.ndarray | None
    counters: dict = field(default_factory=dict)

    def series(self, name: str) -> np.ndarray:
        return self.rows[:, FUNCTIONAL_NAMES.index(name)]


def model_from_config(config: ExperimentConfig, trials: int) -> ModelSpec:
    if config.trials is not None and config.trials != trials:
        raise ConfigError(f"config declares trials={config.trials} but the "
                          f"dataset header says trials={trials}")
    return ModelSpec(alpha=config.alpha, base_a=config.base_a,
                     base_b=config.base_b, trials=trials)


def run_chain(config: ExperimentConfig, y=None, trials=None) -> ChainData:
    """Run the configured sampler and collect per-iteration functionals."""
    if y is None:
        y, trials = load_dataset(config.dataset)
    model = model_from_config(config, trials)
    stream = RngStream(config.seed)
    burn = config.burn_iters
    keep = config.iterations - burn
    rows = np.full((keep, len(FUNCTIONAL_NAMES)), np.nan)
    log_weights = None
    counters: dict = {}

    if config.sampler in ("collapsed2+transcoding", "sis_s2+transcoding"):
        core_id = config.sampler.split("+", 1)[0]
        gen = run_transcoding_sampler(core_id, y, model, config.iterations,
                                      stream, config.transcode_every)
        if core_id == "sis_s2":
            log_weights = np.empty(keep)
        for it, draw in enumerate(gen):
            if it < burn:
                continue
            f = extract_functionals(draw, y, model)
            rows[it - burn] = f.as_row()
            if log_weights is not None:
                log_weights[it - burn] = draw.log_weight
    elif config.sampler == "collapsed2":
        sampler = CollapsedGibbs(y, model)
        rng = stream.child(0).generator()
        state = sampler.init_state(rng)
        for it in range(config.iterations):
            state = sampler.sweep(state, rng)
            if it < burn:
                continue
            rows[it - burn] = _core_only_row(state.s, state.theta, y, model)
    elif config.sampler == "sis_s2":
        sampler = SisS2(y, model)
        rng = stream.child(0).generator()
        log_weights = np.empty(keep)
        for it in range(config.iterations):
            draw = sampler.draw(rng)
            if it < burn:
                continue
            rows[it - burn] = _core_only_row(draw.s, draw.theta, y, model)
            log_weights[it - burn] = draw.log_weight
    else:  # slice
        sampler = SliceSampler(y, model, moves=config.moves)
        rng = stream.child(0).generator()
        state = sampler.init_state(rng)
        for it in range(config.iterations):
            state = sampler.sweep(state, rng)
            if it < burn:
                continue
            f = extract_functionals(state, y, model)
            rows[it - burn] = f.as_row()
        counters = {"move_proposals": dict(sampler.proposals),
                    "move_accepts": dict(sampler.accepts)}

    iters = np.arange(burn + 1, config.iterations + 1)
    return ChainData(config, rows, iters, log_weights, counters)


def _core_only_row(s, theta, y, model) -> tuple:
    sizes = np.bincount(s)[1:]
    atoms = np.array([theta[s == j + 1][0] for j in range(len(sizes))])
    d = deviance_core(y, sizes, atoms, model)
    return (len(sizes), d, float(theta[0]), np.nan, np.nan, np.nan, np.nan)


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if np.isnan(value):
        return "nan"
    if float(value) == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def write_chain(data: ChainData, outdir) -> dict:
    """Persist chain, metadata sidecar and (for SIS) log weights."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    chain_path = outdir / "chain.csv"
    with chain_path.open("w") as fh:
        fh.write(",".join(CHAIN_COLUMNS) + "\n")
        for it, row in zip(data.iters, data.rows):
            fh.write(",".join([str(int(it))] + [_fmt(v) for v in row]) + "\n")
    paths = {"chain": str(chain_path)}
    if data.log_weights is not None:
        wpath = outdir / "chain.weights.txt"
        with wpath.open("w") as fh:
            for lw in data.log_weights:
                fh.write(repr(float(lw)) + "\n")
        paths["weights"] = str(wpath)
    meta = chain_metadata(data)
    meta_path = outdir / "chain.meta.json"
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    paths["meta"] = str(meta_path)
    return paths


def chain_metadata(data: ChainData) -> dict:
    import scipy

    config = asdict(data.config)
    config["moves"] = list(data.config.moves)
    dataset_path = Path(data.config.dataset)
    digest = (hashlib.sha256(dataset_path.read_bytes()).hexdigest()
              if dataset_path.exists() else None)
    return {
        "config": config,
        "dataset_sha256": digest,
        "rows": int(len(data.rows)),
        "columns": list(CHAIN_COLUMNS),
        "counters": data.counters,
        "versions": {"dptrans": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__},
    }


def read_chain(path) -> tuple[np.ndarray, np.ndarray]:
    """Load (iters, functional matrix) from a chain file."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"chain file not found: {path}")
    with path.open() as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != CHAIN_COLUMNS:
            raise DatasetError(f"unexpected chain columns {header}")
        body = np.loadtxt(fh, delimiter=",", ndmin=2)
    if body.size == 0:
        raise DatasetError(f"chain file has no rows: {path}")
    return body[:, 0].astype(np.int64), body[:, 1:]


def diagnose_chain(chain_path, weights_path=None) -> dict:
    """IAT per functional column; ESS when log weights are available."""
    _, rows = read_chain(chain_path)
    out: dict = {"iat": {}, "skipped": []}
    for idx, name in enumerate(FUNCTIONAL_NAMES):
        col = rows[:, idx]
        if np.isnan(col).any():
            out["skipped"].append(name)
            continue
        if np.ptp(col) == 0.0:
            out["skipped"].append(name)
            continue
        info = iat_info(col)
        out["iat"][name] = {"tau": info.tau, "window": info.window,
                            "truncated": info.truncated}
    if weights_path is None:
        guess = Path(chain_path).parent / "chain.weights.txt"
        weights_path = guess if guess.exists() else None
    if weights_path is not None and Path(weights_path).exists():
        lw = np.loadtxt(weights_path, ndmin=1)
        out["ess"] = float(ess(lw))
        out["draws"] = int(len(lw))
    return out


# ----------------------------------------------------------------------
# Report computations (delimited outputs; figures rendered separately)
# ----------------------------------------------------------------------

TABLE1_S = (1, 1, 1, 1, 2)
TABLE1_JOINT_PATTERNS = (
    (1, 1, 1, 1, 2), (1, 1, 1, 1, 3), (2, 2, 2, 2, 1), (1, 1, 1, 1, 4),
    (2, 2, 2, 2, 3), (1, 1, 1, 1, 5), (2, 2, 2, 2, 4), (3, 3, 3, 3, 1),
)


def table1_data(trans_draws: int, prior_sims: int, alpha: float,
                seed: int, h_max: int = 8) -> dict:
    """Marginal and joint conditional label distributions, two ways.

    Column one re-encodes via the transcoding algorithm; column two filters
    one million prior stick paths down to those matching the conditioning
    pattern.  The two columns estimate the same distribution.
    """
    stream = RngStream(seed)
    rng_t = stream.child(0).generator()
    target = np.asarray(TABLE1_S, dtype=np.int64)
    n = len(target)
    r1 = np.zeros(trans_draws, dtype=np.int64)
    r5 = np.zeros(trans_draws, dtype=np.int64)
    joints: dict = {}
    for i in range(trans_draws):
        draw = transcode(target, alpha, rng_t)
        r1[i] = draw.r[0]
        r5[i] = draw.r[n - 1]
        key = tuple(int(v) for v in draw.r)
        joints[key] = joints.get(key, 0) + 1

    rng_p = stream.child(1).generator()
    mat = stick_breaking_paths(prior_sims, n, alpha, rng_p)
    mask = _batch_pattern_mask(mat, target)
    kept = mat[mask]
    e_r1 = kept[:, 0]
    e_r5 = kept[:, n - 1]
    e_joints: dict = {}
    for row in kept:
        key = tuple(int(v) for v in row)
        e_joints[key] = e_joints.get(key, 0) + 1

    def marginal(vals, total, h):
        return float((vals == h).sum() / total)

    rows_r1 = [(h, marginal(r1, trans_draws, h), marginal(e_r1, len(kept), h))
               for h in range(1, h_max + 1)]
    rows_r5 = [(h, marginal(r5, trans_draws, h), marginal(e_r5, len(kept), h))
               for h in range(1, h_max + 1)]
    rows_joint = [(pat, joints.get(pat, 0) / trans_draws,
                   e_joints.get(pat, 0) / len(kept))
                  for pat in TABLE1_JOINT_PATTERNS]
    return {"r1": rows_r1, "r5": rows_r5, "joint": rows_joint,
            "trans_draws": trans_draws, "prior_sims": prior_sims,
            "prior_kept": int(len(kept)), "alpha": alpha, "seed": seed}


def write_table1(data: dict, outdir) -> list:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for key, header in (("r1", "h"), ("r5", "h"), ("joint", "pattern")):
        path = outdir / f"table1_{key}.csv"
        with path.open("w") as fh:
            fh.write(f"{header},transcoding,empirical\n")
            for label, a, b in data[key]:
                tag = (label if isinstance(label, int)
                       else " ".join(str(v) for v in label))
                fh.write(f"{tag},{a!r},{b!r}\n")
        written.append(str(path))
    meta = {k: data[k] for k in ("trans_draws", "prior_sims", "prior_kept",
                                 "alpha", "seed")}
    meta_path = outdir / "table1.meta.json"
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    written.append(str(meta_path))
    return written


TABLE2_ROWS = ("sis_s2+transcoding", "collapsed2+transcoding",
               "slice", "slice+move1", "slice+move2", "slice+move3")


def table2_data(dataset: str, iterations: int, seed: int,
                alpha: float = 1.0, base_a: float = 1.0, base_b: float = 1.0,
                rows=TABLE2_ROWS) -> dict:
    """IAT of every monitored functional (and ESS for weighted draws) for
    each sampler configuration, one independent stream per row."""
    out = {"iterations": iterations, "seed": seed, "rows": []}
    y, trials = load_dataset(dataset)
    for idx, row_id in enumerate(rows):
        sampler, moves = _row_sampler(row_id)
        config = ExperimentConfig(sampler=sampler, dataset=dataset,
                                  seed=seed + idx, iterations=iterations,
                                  alpha=alpha, base_a=base_a, base_b=base_b,
                                  moves=moves)
        data = run_chain(config, y=y, trials=trials)
        entry = {"algorithm": row_id, "ess": None, "iat": {}}
        if data.log_weights is not None:
            entry["ess"] = float(ess(data.log_weights))
        for name in FUNCTIONAL_NAMES:
            col = data.series(name)
            entry["iat"][name] = (float(iat_info(col).tau)
                                  if np.ptp(col[~np.isnan(col)]) > 0 else None)
        out["rows"].append(entry)
    return out


def _row_sampler(row_id: str) -> tuple[str, tuple]:
    if row_id.startswith("slice"):
        if "+move" in row_id:
            return "slice", (int(row_id[-1]),)
        return "slice", ()
    return row_id, ()


def write_table2(data: dict, outdir) -> list:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "table2.csv"
    cols = ["algorithm", "ESS"] + [f"IAT_{n}" for n in FUNCTIONAL_NAMES]
    with path.open("w") as fh:
        fh.write(",".join(cols) + "\n")
        for entry in data["rows"]:
            cells = [entry["algorithm"],
                     "NA" if entry["ess"] is None else repr(entry["ess"])]
            for name in FUNCTIONAL_NAMES:
                tau = entry["iat"][name]
                cells.append("NA" if tau is None else repr(tau))
            fh.write(",".join(cells) + "\n")
    meta_path = outdir / "table2.meta.json"
    meta_path.write_text(json.dumps(
        {k: data[k] for k in ("iterations", "seed")},
        indent=2, sort_keys=True) + "\n")
    return [str(path), str(meta_path)]


def figure1_data(dataset: str, iterations: int, seed: int,
                 alpha: float = 1.0, base_a: float = 1.0, base_b: float = 1.0,
                 bins: int = 100) -> dict:
    """Binned posterior histograms of the first two stick weights in both
    orders (stick order w, appearance order w~), from an augmented
    collapsed chain."""
    y, trials = load_dataset(dataset)
    model = ModelSpec(alpha=alpha, base_a=base_a, base_b=base_b, trials=trials)
    stream = RngStream(seed)
    burn = int(0.1 * iterations)
    series = {"w1": [], "wtilde1": [], "w2": [], "wtilde2": []}
    for it, draw in enumerate(run_transcoding_sampler(
            "collapsed2", y, model, iterations, stream)):
        if it < burn:
            continue
        w = draw.trans.w_prefix.weights
        wt = draw.trans.wtilde.weights
        series["w1"].append(w[0])
        series["wtilde1"].append(wt[0])
        series["w2"].append(w[1] if len(w) > 1 else np.nan)
        series["wtilde2"].append(wt[1] if len(wt) > 1 else np.nan)
    edges = np.linspace(0.0, 1.0, bins + 1)
    hists = {}
    dropped = {}
    for name, vals in series.items():
        arr = np.asarray(vals)
        finite = arr[~np.isnan(arr)]
        hists[name] = np.histogram(finite, bins=edges)[0]
        dropped[name] = int(len(arr) - len(finite))
    return {"edges": edges, "hists": hists, "dropped": dropped,
            "kept": iterations - burn, "iterations": iterations,
            "seed": seed, "series": series}


def write_figure1(data: dict, outdir) -> list:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "figure1_hist.csv"
    names = ("w1", "wtilde1", "w2", "wtilde2")
    edges = data["edges"]
    with path.open("w") as fh:
        fh.write("bin_lo,bin_hi," + ",".join(names) + "\n")
        for i in range(len(edges) - 1):
            counts = ",".join(str(int(data["hists"][n][i])) for n in names)
            fh.write(f"{float(edges[i])!r},{float(edges[i + 1])!r},{counts}\n")
    meta_path = outdir / "figure1.meta.json"
    meta_path.write_text(json.dumps(
        {"kept": data["kept"], "iterations": data["iterations"],
         "seed": data["seed"], "dropped": data["dropped"]},
        indent=2, sort_keys=True) + "\n")
    return [str(path), str(meta_path)]
