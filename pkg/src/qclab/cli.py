"""``qclab`` command line.

Every command takes ``--config FILE`` (JSON; either a flat parameter object
or a run manifest written by a previous run), ``--out DIR``, ``--seed``,
``--jobs`` and ``--force``.  Parameter precedence is flags, then the
``QCLAB_SEED`` environment variable (seed only), then the config file, then
defaults.  The merged parameters are written to ``DIR/run-manifest.json``
before any work starts; feeding that file back through ``--config``
reproduces the run.

Exit codes: 0 success, 2 user error, 3 numerical failure, 4 refusal to
overwrite an existing output directory.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import __version__, arrayio, plotting
from .errors import NumericalError, QclabError, ValidationError

log = logging.getLogger("qclab")

EXIT_OK, EXIT_USER, EXIT_NUMERIC, EXIT_EXISTS = 0, 2, 3, 4


class OverwriteRefused(QclabError):
    pass


@dataclass
class Param:
    name: str
    type: Callable = str
    default: Any = None
    help: str = ""
    choices: Optional[tuple] = None
    nargs: Optional[str] = None
    positional: bool = False
    flag: bool = False

    @property
    def option(self) -> str:
        return "--" + self.name.replace("_", "-")


@dataclass
class Command:
    name: str
    func: Callable
    help: str
    params: list = field(default_factory=list)


COMMON = [
    Param("seed", int, 0, "global seed (QCLAB_SEED overrides the config value)"),
    Param("jobs", int, 1, "worker processes for parallel stages"),
]


# ------------------------------------------------------------------ helpers


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _write_series_svg(path: Path, series, **kw) -> None:
    arrayio.write_text(path, plotting.svg_series(series, **kw))


def _load_any_solution(path: Path):
    from . import billiards, spinchain

    meta = arrayio.read_json(path / "solution.json")
    if "shape" in meta:
        return "billiard", billiards.load_solution(path)
    if "sector" in meta:
        return "chain", spinchain.load_chain(path)
    raise ValidationError(f"{path}: not a solution directory")


def _billiard_solutions(p: dict, lambdas: list[float]):
    """Solutions from explicit ``--solution`` directories, else from the cache."""
    from . import billiards, store

    if p.get("solution"):
        sols = [billiards.load_solution(Path(d)) for d in p["solution"]]
        kinds = {s.shape.kind for s in sols}
        if kinds != {p["kind"]}:
            raise ValidationError(f"solutions are for {sorted(kinds)}, expected {p['kind']}")
        return sols
    return [store.billiard_solution(p["kind"], lam, n_grid=p.get("grid"), n_levels=p["levels"]) for lam in lambdas]


# ----------------------------------------------------------------- commands


def cmd_solve(p: dict, out: Path) -> dict:
    from . import billiards, spinchain

    if p["target"] == "billiard":
        shape = billiards.BilliardShape(p["kind"], p["lambda"])
        sol = billiards.solve_billiard(shape, p["grid"], p["levels"], seed=p["seed"])
        states = tuple(p["states"]) if p.get("states") else None
        billiards.save_solution(sol, out, states=states)
        return {"n_levels": len(sol.energies), "n_interior": sol.grid.n_interior}
    params = spinchain.ChainParams(N=p["N"], Jzz=p["Jzz"], perturbation=p["perturb"], lam=p["lambda"], pauli=p["pauli"])
    sol = spinchain.solve_chain(params, seed=p["seed"], check=True)
    spinchain.save_chain(sol, out)
    return {"dimension": sol.basis.dimension}


def cmd_dataset(p: dict, out: Path) -> dict:
    from . import dataset

    if p["target"] == "billiard":
        lam0 = p["lambda0"] if p.get("lambda0") is not None else dataset.BILLIARD_ANCHORS[p["kind"]]
        if p.get("lambdas"):
            lams = _floats(p["lambdas"])
            sols = _billiard_solutions(p, lams)
            ds = dataset.build_billiard_grid(sols, lams, p["per_class"], seed=p["seed"], window=tuple(p["window"]))
        else:
            sols = _billiard_solutions(p, [0.0, lam0])
            ds = dataset.build_billiard_dataset(sols, lam0, p["per_class"], seed=p["seed"], window=tuple(p["window"]))
    else:
        lams = _floats(p["lambdas"] or "0,0.05,0.1,0.15,0.2,0.25,0.3")
        if p.get("grid_mode"):
            ds = dataset.build_chain_grid(
                p["perturb"], lams, p["n_test"], seed=p["seed"], N=p["N"], jobs=p["jobs"], pauli=p["pauli"]
            )
        else:
            ds = dataset.build_chain_dataset(
                p["perturb"], lams, p["n_train"], p["n_test"], seed=p["seed"], N=p["N"], jobs=p["jobs"], pauli=p["pauli"]
            )
    ds.save(out)
    return {"samples": len(ds), "train": len(ds.split.train), "test": len(ds.split.test)}


def cmd_stats(p: dict, out: Path) -> dict:
    from . import spectral

    rows, hists = [], []
    for d in p["solution"]:
        kind, sol = _load_any_solution(Path(d))
        e = sol.energies[: p["levels"]] if kind == "billiard" else sol.energies
        st = spectral.level_statistics(e)
        lam = sol.shape.lam if kind == "billiard" else sol.params.lam
        rows.append((lam, st.n_levels, st.r_mean, st.kl_poisson, st.kl_wd))
        hists.append((lam, st.histogram))
    arrayio.write_csv(out / "stats.csv", ["lambda", "n_levels", "r_mean", "kl_poisson", "kl_wd"], rows)
    series = []
    for lam, h in hists:
        arrayio.write_csv(out / f"histogram_lambda{lam:g}.csv", ["edge", "mass"], zip(h.edges[:-1], h.masses))
        series.append({"label": f"lambda={lam:g}", "x": 0.5 * (h.edges[1:] + h.edges[:-1]), "y": h.density()})
    s = np.linspace(0, 4, 81)
    series.append({"label": "Poisson", "x": s, "y": spectral.POISSON.pdf(s), "color": "#7f7f7f"})
    series.append({"label": "Wigner-Dyson", "x": s, "y": spectral.WIGNER_DYSON.pdf(s), "color": "#000000"})
    _write_series_svg(out / "spacings.svg", series, title="spacing distribution", xlabel="s", ylabel="P(s)")
    if len(rows) >= 3:
        lams = [r[0] for r in rows]
        _write_series_svg(
            out / "kl.svg",
            [
                {"label": "D(P||Poisson)", "x": lams, "y": [r[3] for r in rows]},
                {"label": "D(P||WD)", "x": lams, "y": [r[4] for r in rows]},
            ],
            title="KL divergence",
            xlabel="lambda",
            ylabel="KL",
        )
    return {"rows": len(rows)}


def _model_factory(arch: str, n_inputs: int):
    from .neuralnet import build_cnn, build_mlp

    if arch == "cnn":
        return lambda seed: build_cnn(seed=seed)
    if arch == "mlp":
        return lambda seed: build_mlp(n_inputs, seed=seed)
    raise ValidationError(f"unknown architecture {arch!r}")


def _hyper(p: dict, arch: str):
    from .neuralnet import Hyper

    defaults = {"cnn": (50, 60, 5e-4), "mlp": (20, 10, 1e-3)}[arch]
    epochs = p.get("epochs") or defaults[0]
    if p.get("paper_scale") and arch == "cnn":
        epochs = 500
    return Hyper(
        epochs=epochs,
        batch_size=p.get("batch_size") or defaults[1],
        lr=p.get("lr") or defaults[2],
        seed=p["seed"],
    )


def _arch_for(ds) -> str:
    return "mlp" if ds.kind == "chain" else "cnn"


def cmd_train(p: dict, out: Path) -> dict:
    from .dataset import LabeledSet
    from .neuralnet import save_model, train_classifier

    ds = LabeledSet.load(p["dataset"])
    arch = p.get("arch") or _arch_for(ds)
    hyper = _hyper(p, arch)
    x = ds.network_input()
    tr = ds.split.train
    te = ds.split.test[ds.labels[ds.split.test] >= 0]
    if np.any(ds.labels[tr] < 0):
        raise ValidationError("training samples must be labeled")
    model = _model_factory(arch, x.shape[1])(hyper.seed)
    res = train_classifier(model, x[tr], ds.labels[tr], x[te], ds.labels[te], hyper)
    save_model(res.model, out / "model", {"arch": arch, "hyper": hyper.to_dict()})
    h = res.history
    arrayio.write_csv(out / "history.csv", ["epoch", "loss", "train_acc", "test_acc"], [(r["epoch"], r["loss"], r["train_acc"], r["test_acc"]) for r in h])
    ep = [r["epoch"] for r in h]
    _write_series_svg(
        out / "accuracy.svg",
        [{"label": "train", "x": ep, "y": [r["train_acc"] for r in h]}, {"label": "test", "x": ep, "y": [r["test_acc"] for r in h]}],
        title="training accuracy",
        xlabel="epoch",
        ylabel="accuracy",
    )
    return {"test_accuracy": res.test_accuracy}


def cmd_activation(p: dict, out: Path) -> dict:
    from .dataset import LabeledSet
    from .experiments import activation_curve, critical_region
    from .neuralnet import load_model

    model = load_model(Path(p["model"]) / "model" if (Path(p["model"]) / "model").exists() else p["model"])
    ds = LabeledSet.load(p["dataset"])
    test = ds.test if ds.split is not None else ds
    curve = activation_curve(model, test)
    region = critical_region(curve, p["confidence"])
    arrayio.write_csv(out / "activation.csv", ["lambda", "value", "stderr"], curve.rows())
    info = {"lo": region.lo, "hi": region.hi, "open_lo": region.open_lo, "open_hi": region.open_hi, "confidence": p["confidence"]}
    arrayio.write_json(out / "critical_region.json", info)
    _write_series_svg(
        out / "activation.svg",
        [{"label": "p2", "x": curve.lambdas, "y": curve.p2, "yerr": curve.stderr}],
        title="network output",
        xlabel="lambda",
        ylabel="p2",
        ylim=(-0.05, 1.05),
        vspan=(region.lo, region.hi),
    )
    return info


def cmd_confuse(p: dict, out: Path) -> dict:
    from .dataset import LabeledSet
    from .experiments import confusion_scan, find_w_peak

    ds = LabeledSet.load(p["dataset"])
    arch = p.get("arch") or _arch_for(ds)
    hyper = _hyper(p, arch)
    factory = _model_factory(arch, ds.network_input().shape[1])
    curve = confusion_scan(ds, factory, hyper, jobs=p["jobs"])
    arrayio.write_csv(out / "wcurve.csv", ["lambda", "value", "stderr"], curve.rows())
    peak = find_w_peak(curve)
    info = {"lambda_c": peak.lam, "has_peak": peak.has_peak, "endpoints": [curve.accuracy[0], curve.accuracy[-1]]}
    arrayio.write_json(out / "peak.json", info)
    ok = np.isfinite(curve.accuracy)
    _write_series_svg(
        out / "wcurve.svg",
        [{"label": "test accuracy", "x": curve.trials[ok], "y": curve.accuracy[ok]}],
        title="confusion scan",
        xlabel="trial lambda",
        ylabel="accuracy",
    )
    return info


def cmd_vae(p: dict, out: Path) -> dict:
    from .dataset import LabeledSet
    from .experiments import latent_scan, mosaic, vae_cluster
    from .neuralnet import VAE
    from .rng import RngStream

    ds = LabeledSet.load(p["dataset"])
    train = ds.train if ds.split is not None else ds
    test = ds.test if ds.split is not None else ds
    vae = VAE(seed=p["seed"]).fit(train.x, epochs=p["epochs"] or 50, batch_size=p["batch_size"] or 40, lr=p["lr"] or 1e-3)
    vae.save(out / "vae")
    cloud, sep = vae_cluster(vae, test, RngStream(p["seed"]).spawn(0xC1), use_mean=p["use_mean"])
    arrayio.write_csv(out / "cloud.csv", ["z1", "z2", "class", "lambda"], cloud.rows())
    info = {"separation": sep.score, "degenerate": sep.degenerate}
    arrayio.write_json(out / "separation.json", info)
    arrayio.write_text(
        out / "latent.svg",
        plotting.svg_scatter(cloud.z, cloud.classes, ["regular", "chaotic"], title="latent space"),
    )
    if p.get("latent_scan"):
        k = p["latent_scan"]
        g = np.linspace(-p["latent_range"], p["latent_range"], k)
        tiles = latent_scan(vae, g, g)
        arrayio.write_array(out / "mosaic.qarr", tiles)
        arrayio.write_text(out / "mosaic.svg", plotting.svg_heatmap(mosaic(tiles, k), "latent scan", mode="raster", scale=1.0))
        info["tiles"] = len(tiles)
    return info


def cmd_anomaly(p: dict, out: Path) -> dict:
    from .dataset import LabeledSet
    from .experiments import detect_anomalies
    from .neuralnet import VAE
    from .rng import RngStream

    vae = VAE.load(p["vae"])
    ref = LabeledSet.load(p["reference"])
    cand = LabeledSet.load(p["candidates"])
    res = detect_anomalies(vae, ref, cand, p["threshold"], RngStream(p["seed"]).spawn(0xA0), use_mean=p["use_mean"])
    arrayio.write_csv(
        out / "flags.csv",
        ["index", "lambda", "state", "distance", "flag"],
        [(i, cand.lambdas[i], cand.states[i], d, int(f)) for i, (d, f) in enumerate(zip(res.distance, res.flags))],
    )
    info = {"flag_rate": float(res.flags.mean()), "threshold_sigma": p["threshold"]}
    arrayio.write_json(out / "anomaly.json", info)
    return info


def cmd_latent_scan(p: dict, out: Path) -> dict:
    from .experiments import latent_scan, mosaic
    from .neuralnet import VAE

    vae = VAE.load(p["vae"])
    k = p["n"]
    g = np.linspace(-p["latent_range"], p["latent_range"], k)
    tiles = latent_scan(vae, g, g)
    arrayio.write_array(out / "mosaic.qarr", tiles)
    arrayio.write_text(out / "mosaic.svg", plotting.svg_heatmap(mosaic(tiles, k), "latent scan", mode="raster", scale=1.0))
    return {"tiles": len(tiles)}


def cmd_plot(p: dict, out: Path) -> dict:
    rows = arrayio.read_csv(p["input"])
    if not rows:
        raise ValidationError(f"{p['input']}: no data rows")
    name = Path(p["input"]).stem
    if p["style"] == "series":
        cols = list(rows[0])
        x = [float(r[cols[0]]) for r in rows]
        series = [{"label": c, "x": x, "y": [float(r[c]) for r in rows]} for c in cols[1 : 2 if "stderr" in cols else None]]
        if "stderr" in cols:
            series[0]["yerr"] = [float(r["stderr"]) for r in rows]
        svg = plotting.svg_series(series, title=name, xlabel=cols[0], ylabel=cols[1])
    elif p["style"] == "scatter":
        names = sorted({r["class"] for r in rows})
        z = [[float(r["z1"]), float(r["z2"])] for r in rows]
        svg = plotting.svg_scatter(z, [names.index(r["class"]) for r in rows], names, title=name)
    else:
        arr = np.array([[float(v) for v in r.values()] for r in rows])
        svg = plotting.svg_heatmap(arr, name, mode=p["heatmap_mode"])
    arrayio.write_text(out / f"{name}.svg", svg)
    return {}


COMMANDS = [
    Command(
        "solve",
        cmd_solve,
        "solve a billiard or spin chain",
        [
            Param("target", str, None, "billiard or chain", choices=("billiard", "chain"), positional=True),
            Param("kind", str, "sinai", "billiard family", choices=("sinai", "stadium", "pascal")),
            Param("lambda", float, 0.0, "chaoticity parameter"),
            Param("grid", int, 300, "lattice points across the billiard"),
            Param("levels", int, 500, "number of eigenpairs"),
            Param("states", int, None, "store eigenvectors lo..hi-1 only", nargs=2),
            Param("N", int, 13, "chain length (odd)"),
            Param("Jzz", float, 1.0, "anisotropy"),
            Param("perturb", str, "nnn", "integrability breaking term", choices=("nnn", "impurity")),
            Param("pauli", bool, False, "Pauli matrices instead of spin-1/2 operators", flag=True),
        ],
    ),
    Command(
        "dataset",
        cmd_dataset,
        "build a labeled dataset",
        [
            Param("target", str, None, "billiard or chain", choices=("billiard", "chain"), positional=True),
            Param("kind", str, "sinai", "billiard family", choices=("sinai", "stadium", "pascal")),
            Param("lambda0", float, None, "chaotic anchor (billiards)"),
            Param("lambdas", str, None, "comma-separated lambda grid"),
            Param("per_class", int, 800, "crops per class (per lambda with --lambdas)"),
            Param("window", int, [300, 500], "source state window lo hi", nargs=2),
            Param("solution", str, None, "solution directories (default: cache)", nargs="+"),
            Param("grid", int, None, "lattice size for cached solves"),
            Param("levels", int, 500, "levels for cached solves"),
            Param("perturb", str, "nnn", "chain perturbation", choices=("nnn", "impurity")),
            Param("N", int, 13, "chain length"),
            Param("n_train", int, 400, "chain training samples"),
            Param("n_test", int, 100, "chain test samples per lambda"),
            Param("grid_mode", bool, False, "chain: unlabeled 70/30 grid for confusion scans", flag=True),
            Param("pauli", bool, False, "chain: Pauli matrices instead of spin-1/2 operators", flag=True),
        ],
    ),
    Command(
        "stats",
        cmd_stats,
        "level statistics of solved spectra",
        [
            Param("solution", str, None, "solution directories", nargs="+"),
            Param("levels", int, 400, "lowest levels used (billiards)"),
        ],
    ),
    Command(
        "train",
        cmd_train,
        "train a classifier on anchor classes",
        [
            Param("dataset", str, None, "dataset directory"),
            Param("arch", str, None, "cnn or mlp (default by dataset kind)", choices=("cnn", "mlp")),
            Param("epochs", int, None, "epochs"),
            Param("batch_size", int, None, "batch size"),
            Param("lr", float, None, "Adam step size"),
            Param("paper_scale", bool, False, "500 CNN epochs", flag=True),
        ],
    ),
    Command(
        "activation",
        cmd_activation,
        "activation curve and critical region",
        [
            Param("model", str, None, "model directory (train output)"),
            Param("dataset", str, None, "dataset with samples over lambda"),
            Param("confidence", float, 0.9, "confidence threshold"),
        ],
    ),
    Command(
        "confuse",
        cmd_confuse,
        "confusion scan over a lambda grid",
        [
            Param("dataset", str, None, "grid dataset directory"),
            Param("arch", str, None, "cnn or mlp", choices=("cnn", "mlp")),
            Param("epochs", int, None, "epochs per trial"),
            Param("batch_size", int, None, "batch size"),
            Param("lr", float, None, "Adam step size"),
            Param("paper_scale", bool, False, "500 CNN epochs", flag=True),
        ],
    ),
    Command(
        "vae",
        cmd_vae,
        "train a VAE and report latent clustering",
        [
            Param("dataset", str, None, "anchor dataset directory"),
            Param("epochs", int, 50, "epochs"),
            Param("batch_size", int, 40, "batch size"),
            Param("lr", float, 1e-3, "Adam step size"),
            Param("use_mean", bool, False, "plot posterior means instead of samples", flag=True),
            Param("latent_scan", int, 0, "also decode a K x K latent lattice"),
            Param("latent_range", float, 3.0, "lattice half-width"),
        ],
    ),
    Command(
        "anomaly",
        cmd_anomaly,
        "flag latent outliers of the chaotic cluster",
        [
            Param("vae", str, None, "VAE directory"),
            Param("reference", str, None, "reference (chaotic) dataset"),
            Param("candidates", str, None, "candidate dataset"),
            Param("threshold", float, 3.0, "Mahalanobis threshold in sigma"),
            Param("use_mean", bool, False, "use posterior means", flag=True),
        ],
    ),
    Command(
        "latent-scan",
        cmd_latent_scan,
        "decode a latent lattice",
        [
            Param("vae", str, None, "VAE directory"),
            Param("n", int, 5, "lattice points per axis"),
            Param("latent_range", float, 3.0, "lattice half-width"),
        ],
    ),
    Command(
        "plot",
        cmd_plot,
        "render a CSV as SVG",
        [
            Param("input", str, None, "CSV file"),
            Param("style", str, "series", "series, scatter or heatmap", choices=("series", "scatter", "heatmap")),
            Param("heatmap_mode", str, "rects", "one rect per pixel or an embedded raster", choices=("rects", "raster")),
        ],
    ),
]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qclab", description="quantum chaos detection toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd.name, help=cmd.help)
        sp.add_argument("--config", help="JSON config or run manifest")
        sp.add_argument("--out", help="output directory", default=None)
        sp.add_argument("--force", action="store_true", help="overwrite an existing output directory")
        for prm in cmd.params + COMMON:
            kw = {"help": prm.help, "default": argparse.SUPPRESS}
            if prm.flag:
                sp.add_argument(prm.option, action="store_true", **kw)
                continue
            if prm.choices:
                kw["choices"] = prm.choices
            if prm.nargs:
                kw["nargs"] = prm.nargs
            if prm.positional:
                # argparse validates a positional's default against its choices
                kw["default"] = None
                sp.add_argument(prm.name, type=prm.type, nargs="?", **kw)
            else:
                sp.add_argument(prm.option, dest=prm.name, type=prm.type, **kw)
    return ap


def resolve(cmd: Command, ns: argparse.Namespace) -> dict:
    cfg: dict = {}
    if getattr(ns, "config", None):
        try:
            raw = arrayio.read_json(ns.config)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {ns.config}: {exc}") from None
        if "params" in raw and "command" in raw:
            if raw["command"] != cmd.name:
                raise ValidationError(f"manifest is for {raw['command']!r}, not {cmd.name!r}")
            raw = raw["params"]
        cfg = dict(raw)
    known = {prm.name for prm in cmd.params + COMMON}
    unknown = set(cfg) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    p = {prm.name: prm.default for prm in cmd.params + COMMON}
    p.update(cfg)
    if "QCLAB_SEED" in os.environ:
        try:
            p["seed"] = int(os.environ["QCLAB_SEED"])
        except ValueError:
            raise ValidationError("QCLAB_SEED must be an integer") from None
    for prm in cmd.params + COMMON:
        if getattr(ns, prm.name, None) is not None or (hasattr(ns, prm.name) and not prm.positional):
            p[prm.name] = getattr(ns, prm.name)
    for prm in cmd.params:
        if prm.positional and p.get(prm.name) is None:
            raise ValidationError(f"{cmd.name}: missing {prm.name} ({'|'.join(prm.choices or ())})")
    return p


def prepare_out(path: Path, force: bool) -> None:
    if path.exists() and (not path.is_dir() or any(path.iterdir())):
        if not force:
            raise OverwriteRefused(f"{path} exists; pass --force to overwrite")
    path.mkdir(parents=True, exist_ok=True)


def main(argv: Optional[list] = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USER
    logging.basicConfig(
        level=logging.WARNING - 10 * min(ns.verbose, 2), format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    cmd = next(c for c in COMMANDS if c.name == ns.command)
    try:
        p = resolve(cmd, ns)
        out = Path(ns.out or f"qclab-{cmd.name}")
        prepare_out(out, ns.force)
        arrayio.write_json(out / "run-manifest.json", {"command": cmd.name, "version": __version__, "params": p})
        result = cmd.func(p, out)
        arrayio.write_json(out / "result.json", result or {})
        print(json.dumps(arrayio._jsonable(result or {}), sort_keys=True))
        return EXIT_OK
    except OverwriteRefused as exc:
        print(f"qclab: {exc}", file=sys.stderr)
        return EXIT_EXISTS
    except (ValidationError, FileNotFoundError, KeyError) as exc:
        print(f"qclab {cmd.name}: error: {exc}", file=sys.stderr)
        return EXIT_USER
    except NumericalError as exc:
        print(f"qclab {cmd.name}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
