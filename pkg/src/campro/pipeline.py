"""Batch commands: dataset pairing, prompt precomputation, generated
boundaries, subband dumps, evaluation, ablation sweeps and the fusion
smoke run.

Every command is deterministic for a fixed (manifest, config, seed): items
are processed by a worker pool but results are merged in manifest order.
"""
from __future__ import annotations

import hashlib
import logging
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import boundary, cache, fusion, plotting, raster, report, wavelet
from .errors import CamproError, EmptyReportError, ManifestError, ShapeError
from .metrics import DEFAULT_CONFIG, METRIC_FIELDS, MetricConfig, PairRecord, aggregate, evaluate_pair

log = logging.getLogger(__name__)

IMAGE_EXTS = (".png", ".jpg", ".jpeg", ".pgm", ".bmp", ".tif", ".tiff")
RESIZE_POLICY = "predictions resized bilinearly (half-pixel centres) to native GT resolution"
CANNY_POLICY = "Canny runs at native GT resolution"
AXES = ("dilate", "offset", "subband")


# --------------------------------------------------------------------------
# dataset pairing
# --------------------------------------------------------------------------

def index_dir(path) -> dict[str, Path]:
    """Map basename-without-extension to file for every image in ``path``."""
    path = Path(path)
    if not path.is_dir():
        raise ManifestError(f"not a directory: {path}")
    out: dict[str, Path] = {}
    for p in sorted(path.iterdir()):
        if p.is_file() and p.suffix.lower() in IMAGE_EXTS:
            if p.stem in out:
                raise ManifestError(f"duplicate stem {p.stem!r} in {path}: {out[p.stem].name}, {p.name}")
            out[p.stem] = p
    return out


@dataclass
class DatasetManifest:
    name: str
    gt_dir: Path
    image_dir: Path | None = None
    pred_dir: Path | None = None
    edge_dir: Path | None = None

    def __post_init__(self):
        self.gt_dir = Path(self.gt_dir)
        for attr in ("image_dir", "pred_dir", "edge_dir"):
            value = getattr(self, attr)
            if value is not None:
                setattr(self, attr, Path(value))

    def gts(self) -> dict[str, Path]:
        return index_dir(self.gt_dir)

    def images(self) -> dict[str, Path]:
        """GT-stem -> image path; any GT without an image is a pre-flight error."""
        if self.image_dir is None:
            raise ManifestError("this command needs --images")
        imgs = index_dir(self.image_dir)
        missing = sorted(set(self.gts()) - set(imgs))
        if missing:
            raise ManifestError(f"{len(missing)} GT stem(s) have no image: {', '.join(missing[:10])}")
        return imgs

    def optional(self, attr: str) -> dict[str, Path]:
        d = getattr(self, attr)
        return index_dir(d) if d is not None else {}


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

@dataclass
class RunConfig:
    mode: str = "binary"
    d1: int = 3
    d2: int = 5
    offset: int = boundary.DEFAULT_OFFSET
    subband: str = "HH"
    metrics: MetricConfig = DEFAULT_CONFIG
    canny_sigma: float = raster.CANNY_SIGMA
    canny_low: float = raster.CANNY_LOW
    canny_high: float = raster.CANNY_HIGH
    box_jitter: int = 0
    seed: int = 0
    workers: int = 1
    fmt: str = "csv"
    cache_root: Path = Path(".campro-cache")
    out_dir: Path = Path("campro-out")
    write_png: bool = False
    polyp: bool = False

    @property
    def pair(self) -> boundary.DilatePair:
        return boundary.DilatePair(self.d1, self.d2)

    def canny_params(self) -> dict:
        return {"sigma": self.canny_sigma, "low": self.canny_low, "high": self.canny_high}

    def egem_params(self) -> dict:
        return {"d1": self.d1, "d2": self.d2, "mode": self.mode, "canny": self.canny_params()}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["metrics"] = self.metrics.to_dict()
        d["cache_root"] = str(self.cache_root)
        d["out_dir"] = str(self.out_dir)
        return d

    def fingerprint(self) -> str:
        # output locations and worker count never change a value
        d = self.to_dict()
        for k in ("cache_root", "out_dir", "workers", "fmt", "write_png"):
            d.pop(k)
        return cache.fingerprint(d)


@dataclass
class Summary:
    command: str
    dataset: str = ""
    seed: int = 0
    total: int = 0
    produced: int = 0
    cached: int = 0
    skipped: int = 0
    failed: int = 0
    notes: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def count(self, status: str) -> None:
        self.total += 1
        if status == "produced":
            self.produced += 1
        elif status == "cached":
            self.cached += 1
        elif status == "skipped":
            self.skipped += 1
        else:
            self.failed += 1

    def to_text(self) -> str:
        lines = [
            f"# {self.command} dataset={self.dataset or '-'} seed={self.seed}",
            f"total={self.total} produced={self.produced} cached={self.cached} "
            f"skipped={self.skipped} failed={self.failed}",
        ]
        for k, v in self.extra.items():
            lines.append(f"{k}={v}")
        lines += [f"note: {n}" for n in self.notes]
        lines += [f"wrote {p}" for p in self.outputs]
        return "\n".join(lines)


def _run(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def stem_rng(seed: int, stem: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(stem.encode("utf-8"))])


# --------------------------------------------------------------------------
# precompute: EGEM prompt + box prompt
# --------------------------------------------------------------------------

def egem_key(dataset, stem, cfg: RunConfig, digest: str) -> cache.CacheKey:
    return cache.CacheKey(dataset, stem, "egem-prompt", {**cfg.egem_params(), "input": digest})


def box_key(dataset, stem, cfg: RunConfig, digest: str) -> cache.CacheKey:
    params = {"jitter": cfg.box_jitter, "seed": cfg.seed if cfg.box_jitter else None, "input": digest}
    return cache.CacheKey(dataset, stem, "box-prompt", params)


def compute_box(gt, stem: str, cfg: RunConfig) -> boundary.BoundingBox:
    if cfg.box_jitter:
        return boundary.jittered_box(gt, cfg.box_jitter, stem_rng(cfg.seed, stem))
    return boundary.extract_box(gt)


def _precompute_item(job):
    dataset, stem, gt_path, img_path, cfg = job
    try:
        digest = file_digest(gt_path) + file_digest(img_path)
        ekey = egem_key(dataset, stem, cfg, digest)
        bkey = box_key(dataset, stem, cfg, file_digest(gt_path))
        if cache.lookup(ekey, cfg.cache_root) is not None and cache.lookup(bkey, cfg.cache_root) is not None:
            return stem, "cached", ""
        gt = raster.read_mask(gt_path)
        img = raster.read_gray(img_path)
        prompt = boundary.egem(gt, img, cfg.pair, cfg.mode, **cfg.canny_params())
        box = compute_box(gt, stem, cfg)
        cache.store(ekey, prompt.astype(np.float32), cfg.cache_root)
        cache.store(bkey, np.asarray(box.as_tuple(), dtype=np.float64), cfg.cache_root)
        if cfg.write_png:
            raster.write_png(Path(cfg.out_dir) / "prompts" / dataset / f"{stem}.png", prompt)
        return stem, "produced", ""
    except (CamproError, OSError, ValueError) as exc:
        return stem, "failed", f"{stem}: {exc}"


def cmd_precompute(manifest: DatasetManifest, cfg: RunConfig) -> Summary:
    imgs = manifest.images()
    gts = manifest.gts()
    jobs = [(manifest.name, s, gts[s], imgs[s], cfg) for s in sorted(gts)]
    summary = Summary("precompute", manifest.name, cfg.seed)
    summary.extra["egem"] = cache.canonical_json(cfg.egem_params())
    summary.notes.append(CANNY_POLICY)
    for stem, status, msg in _run(_precompute_item, jobs, cfg.workers):
        summary.count(status)
        if msg:
            summary.notes.append(msg)
    return summary


# --------------------------------------------------------------------------
# prompt-gen: inference-time generated boundary
# --------------------------------------------------------------------------

def generated_boundary(edge_map, gt, img, stem: str, cfg: RunConfig, offset=None) -> np.ndarray:
    spec = boundary.ThresholdSpec(offset=cfg.offset if offset is None else offset)
    box = compute_box(gt, stem, cfg)
    _, gradient = raster.canny(img, **cfg.canny_params())
    return boundary.generate_inference_boundary(edge_map, box, gradient, spec)


def _prompt_gen_item(job):
    dataset, stem, gt_path, img_path, edge_path, cfg = job
    if edge_path is None:
        return stem, "skipped", f"{stem}: no edge map", None
    try:
        digest = file_digest(gt_path) + file_digest(img_path) + file_digest(edge_path)
        params = {"offset": cfg.offset, "jitter": cfg.box_jitter, "seed": cfg.seed,
                  "canny": cfg.canny_params(), "input": digest}
        key = cache.CacheKey(dataset, stem, "generated-boundary", params)
        hit = cache.lookup(key, cfg.cache_root)
        if hit is not None:
            return stem, "cached", "", bool(np.any(hit))
        out = generated_boundary(raster.read_gray(edge_path), raster.read_mask(gt_path),
                                 raster.read_gray(img_path), stem, cfg)
        cache.store(key, out.astype(np.float32), cfg.cache_root)
        if cfg.write_png:
            raster.write_png(Path(cfg.out_dir) / "generated" / dataset / f"{stem}.png", out)
        return stem, "produced", "", bool(np.any(out))
    except (CamproError, OSError, ValueError) as exc:
        return stem, "failed", f"{stem}: {exc}", None


def cmd_prompt_gen(manifest: DatasetManifest, cfg: RunConfig) -> Summary:
    if manifest.edge_dir is None:
        raise ManifestError("prompt-gen needs --edges")
    imgs = manifest.images()
    gts = manifest.gts()
    edges = manifest.optional("edge_dir")
    jobs = [(manifest.name, s, gts[s], imgs[s], edges.get(s), cfg) for s in sorted(gts)]
    summary = Summary("prompt-gen", manifest.name, cfg.seed)
    summary.extra["offset"] = cfg.offset
    empty = 0
    done = 0
    for stem, status, msg, nonempty in _run(_prompt_gen_item, jobs, cfg.workers):
        summary.count(status)
        if msg:
            summary.notes.append(msg)
        if nonempty is not None:
            done += 1
            empty += not nonempty
    summary.extra["empty_prompts"] = f"{empty}/{done}"
    if done:
        summary.extra["empty_fraction"] = f"{empty / done:.3f}"
        if empty == done:
            summary.notes.append("all generated prompts are empty")
    return summary


# --------------------------------------------------------------------------
# dwt: subband dumps
# --------------------------------------------------------------------------

def _dwt_item(job):
    dataset, stem, img_path, cfg = job
    try:
        plane = raster.truncate_normalize(raster.read_gray(img_path))
        sb = wavelet.dwt2_haar(plane)
        bands = {name: wavelet.select_subband(sb, name) for name in wavelet.SUBBANDS}
        digest = file_digest(img_path)
        for name, arr in bands.items():
            key = cache.CacheKey(dataset, stem, f"dwt-{name}", {"input": digest, "normalize": [0.5, 99.5]})
            cache.store(key, arr, cfg.cache_root)
            raster.write_png(Path(cfg.out_dir) / "dwt" / dataset / f"{stem}_{name}.png", plotting.stretch(arr))
        plotting.subband_panel(bands, Path(cfg.out_dir) / "dwt" / dataset / f"{stem}_panel.png", stem)
        return stem, "produced", ""
    except (CamproError, OSError, ValueError) as exc:
        return stem, "failed", f"{stem}: {exc}"


def cmd_dwt(manifest: DatasetManifest, cfg: RunConfig) -> Summary:
    if manifest.image_dir is None:
        raise ManifestError("dwt needs --images")
    imgs = index_dir(manifest.image_dir)
    jobs = [(manifest.name, s, imgs[s], cfg) for s in sorted(imgs)]
    summary = Summary("dwt", manifest.name, cfg.seed)
    for stem, status, msg in _run(_dwt_item, jobs, cfg.workers):
        summary.count(status)
        if msg:
            summary.notes.append(msg)
    summary.outputs.append(str(Path(cfg.out_dir) / "dwt" / manifest.name))
    return summary


# --------------------------------------------------------------------------
# eval
# --------------------------------------------------------------------------

def load_prediction(path, shape) -> np.ndarray:
    pred = raster.read_float_map(path)
    if pred.shape != shape:
        pred = np.clip(raster.resize_bilinear(pred, shape[1], shape[0]), 0.0, 1.0)
    return pred


def _eval_item(job) -> PairRecord:
    stem, gt_path, pred_path, mcfg = job
    if pred_path is None:
        rec = PairRecord(image_id=stem, config=mcfg.fingerprint)
        rec.skipped = {name: "missing prediction" for name in METRIC_FIELDS}
        return rec
    try:
        gt = raster.read_mask(gt_path)
        pred = load_prediction(pred_path, gt.shape)
    except (OSError, ValueError) as exc:
        rec = PairRecord(image_id=stem, config=mcfg.fingerprint)
        rec.skipped = {name: f"unreadable: {exc}" for name in METRIC_FIELDS}
        return rec
    return evaluate_pair(pred, gt, mcfg, image_id=stem)


def evaluate_dir(gts: dict, preds: dict, mcfg: MetricConfig, workers: int):
    jobs = [(s, gts[s], preds.get(s), mcfg) for s in sorted(gts)]
    return _run(_eval_item, jobs, workers)


def _header(command, dataset, cfg: RunConfig, **more) -> dict:
    h = {
        "command": command,
        "dataset": dataset,
        "seed": cfg.seed,
        "metric_config": cache.canonical_json(cfg.metrics.to_dict()),
        "metric_fingerprint": cfg.metrics.fingerprint,
    }
    h.update(more)
    return h


def cmd_eval(manifest: DatasetManifest, cfg: RunConfig):
    """Evaluate ``pred_dir`` against ``gt_dir``; returns (report, summary)."""
    if manifest.pred_dir is None:
        raise ManifestError("eval needs --preds")
    gts = manifest.gts()
    preds = manifest.optional("pred_dir")
    records = evaluate_dir(gts, preds, cfg.metrics, cfg.workers)
    summary = Summary("eval", manifest.name, cfg.seed)
    for rec in records:
        if rec.fully_skipped:
            summary.count("skipped")
            summary.notes.append(f"{rec.image_id}: {next(iter(rec.skipped.values()))}")
        else:
            summary.count("produced")
    try:
        rep = aggregate(records, cfg.metrics.fingerprint)
    except EmptyReportError as exc:
        summary.failed += 1
        summary.notes.append(str(exc))
        return None, summary

    out = Path(cfg.out_dir)
    header = _header("eval", manifest.name, cfg, resize_policy=RESIZE_POLICY)
    columns = ("dataset", "count", "skipped") + report.metric_columns(cfg.polyp)
    table = report.render(cfg.fmt, header, columns, [report.dataset_row(manifest.name, rep, cfg.polyp)],
                          report.COLUMN_TITLES)
    paths = [
        report.write_text(out / f"eval_{manifest.name}.{cfg.fmt}", table),
        report.write_text(
            out / f"eval_{manifest.name}_per_image.csv",
            report.render_csv(header, report.PER_IMAGE_COLUMNS, report.per_image_rows(rep)),
        ),
        plotting.metric_distributions(report.per_image_rows(rep), report.metric_columns(cfg.polyp),
                                      out / f"eval_{manifest.name}.png", manifest.name),
    ]
    summary.outputs += [str(p) for p in paths]
    summary.extra.update({k: v for k, v in rep.aggregate.items() if v is not None})
    return rep, summary


# --------------------------------------------------------------------------
# ablate
# --------------------------------------------------------------------------

def ablation_grid(axis: str) -> list[tuple[str, dict]]:
    """(label, parameters) for each grid point of an ablation axis."""
    if axis == "dilate":
        return [(label, {"dilate1": f"{p.d1}x{p.d1}", "dilate2": f"{p.d2}x{p.d2}", "d1": p.d1, "d2": p.d2})
                for label, p in boundary.DILATE_GRID.items()]
    if axis == "offset":
        return [(f"+{o}", {"offset": o}) for o in boundary.OFFSET_GRID]
    if axis == "subband":
        return [(name, {"subband": name}) for name in wavelet.SUBBANDS]
    raise ValueError(f"unknown ablation axis {axis!r}; expected one of {AXES}")


ABLATION_COLUMNS = {
    "dilate": ("setting", "dilate1", "dilate2"),
    "offset": ("setting", "offset"),
    "subband": ("setting", "subband"),
}
PROMPT_STATS = {
    "dilate": ("prompt_coverage", "edge_density"),
    "offset": ("prompt_coverage", "band_precision"),
    "subband": ("mean_abs", "energy_share"),
}


def _ablate_item(job):
    """Prompt-side statistics of one image at every grid point of an axis."""
    axis, stem, gt_path, img_path, edge_path, cfg = job
    try:
        img = raster.read_gray(img_path)
        if axis == "subband":
            sb = wavelet.dwt2_haar(raster.truncate_normalize(img))
            total = sum(float(np.sum(wavelet.select_subband(sb, n) ** 2)) for n in wavelet.SUBBANDS)
            stats = {}
            for label, params in ablation_grid(axis):
                band = wavelet.select_subband(sb, params["subband"])
                stats[label] = {
                    "mean_abs": float(np.mean(np.abs(band))),
                    "energy_share": float(np.sum(band**2)) / total if total > 0 else 0.0,
                }
            return stem, stats, ""
        gt = raster.read_mask(gt_path)
        if axis == "dilate":
            edges, _ = raster.canny(img, **cfg.canny_params())
            stats = {}
            for label, params in ablation_grid(axis):
                band = boundary.edge_band(gt, boundary.DilatePair(params["d1"], params["d2"]))
                prompt = band & edges
                stats[label] = {
                    "prompt_coverage": float(np.mean(prompt)),
                    "edge_density": float(prompt.sum() / band.sum()) if band.any() else 0.0,
                }
            return stem, stats, ""
        if edge_path is None:
            return stem, None, f"{stem}: no edge map"
        edge_map = raster.read_gray(edge_path)
        band = boundary.edge_band(gt, cfg.pair)
        stats = {}
        for label, params in ablation_grid(axis):
            out = generated_boundary(edge_map, gt, img, stem, cfg, offset=params["offset"])
            on = out > 0
            stats[label] = {
                "prompt_coverage": float(np.mean(on)),
                "band_precision": float((on & band).sum() / on.sum()) if on.any() else 0.0,
            }
        return stem, stats, ""
    except (CamproError, OSError, ValueError) as exc:
        return stem, None, f"{stem}: {exc}"


def cmd_ablate(manifest: DatasetManifest, cfg: RunConfig, axis: str):
    """One row per grid point with all other parameters fixed.

    Metric columns come from predictions under ``<pred_dir>/<label>/`` when
    present (one model run per setting); prompt statistics are always
    computed from the data.
    """
    grid = ablation_grid(axis)
    if not grid:
        raise ValueError("empty ablation grid")
    gts = manifest.gts()
    imgs = manifest.images()
    edges = manifest.optional("edge_dir")
    if axis == "offset" and manifest.edge_dir is None:
        raise ManifestError("offset ablation needs --edges")
    jobs = [(axis, s, gts[s], imgs[s], edges.get(s), cfg) for s in sorted(gts)]
    summary = Summary(f"ablate-{axis}", manifest.name, cfg.seed)

    per_label: dict[str, dict[str, list]] = {label: {} for label, _ in grid}
    for stem, stats, msg in _run(_ablate_item, jobs, cfg.workers):
        if stats is None:
            summary.count("skipped" if "no edge map" in msg else "failed")
            summary.notes.append(msg)
            continue
        summary.count("produced")
        for label, vals in stats.items():
            for k, v in vals.items():
                per_label[label].setdefault(k, []).append(v)

    metric_cols = report.metric_columns(cfg.polyp)
    rows = []
    for label, params in grid:
        row = {"setting": label, **{k: v for k, v in params.items() if k in ABLATION_COLUMNS[axis]}}
        for k in PROMPT_STATS[axis]:
            vals = per_label[label].get(k, [])
            row[k] = float(np.mean(vals)) if vals else None
        pred_sub = manifest.pred_dir / label if manifest.pred_dir is not None else None
        if pred_sub is not None and pred_sub.is_dir():
            recs = evaluate_dir(gts, index_dir(pred_sub), cfg.metrics, cfg.workers)
            try:
                rep = aggregate(recs, cfg.metrics.fingerprint)
                row.update({c: rep.aggregate.get(c) for c in metric_cols})
                row["note"] = f"{rep.count - rep.skipped}/{rep.count} predictions"
            except EmptyReportError as exc:
                row["note"] = f"error: {exc}"
        else:
            row["note"] = "no predictions"
        rows.append(row)

    columns = ABLATION_COLUMNS[axis] + metric_cols + PROMPT_STATS[axis] + ("note",)
    titles = {**report.COLUMN_TITLES, "dilate1": "Dilate1", "dilate2": "Dilate2", "offset": "Offset",
              "subband": "Subband", "setting": "Setting"}
    header = _header(f"ablate-{axis}", manifest.name, cfg, fixed=cache.canonical_json(_fixed_params(cfg, axis)))
    out = Path(cfg.out_dir)
    table_path = report.write_text(out / f"ablate_{axis}_{manifest.name}.{cfg.fmt}",
                                   report.render(cfg.fmt, header, columns, rows, titles))
    plot_cols = [c for c in metric_cols + PROMPT_STATS[axis] if any(r.get(c) is not None for r in rows)]
    fig_path = plotting.ablation_lines([r["setting"] for r in rows], rows, plot_cols,
                                       out / f"ablate_{axis}_{manifest.name}.png", f"{axis} ablation")
    summary.outputs += [str(table_path), str(fig_path)]
    return rows, summary


def _fixed_params(cfg: RunConfig, axis: str) -> dict:
    fixed = {"mode": cfg.mode, "d1": cfg.d1, "d2": cfg.d2, "offset": cfg.offset, "subband": cfg.subband,
             "canny": cfg.canny_params(), "box_jitter": cfg.box_jitter}
    for k in {"dilate": ("d1", "d2"), "offset": ("offset",), "subband": ("subband",)}[axis]:
        fixed.pop(k)
    return fixed


# --------------------------------------------------------------------------
# fuse-smoke
# --------------------------------------------------------------------------

def checksum(arr) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr, dtype="<f8").tobytes()).hexdigest()[:16]


def _expect(stage, arr, shape):
    if arr.shape != tuple(shape):
        raise ShapeError(f"expected {tuple(shape)}, got {arr.shape}", stage)
    if not np.all(np.isfinite(arr)):
        raise ShapeError("non-finite values", stage)


def weights_dir(cfg: RunConfig, c, c_hf, c_out) -> Path:
    fp = cache.fingerprint({"channels": c, "hf": c_hf, "out": c_out, "seed": cfg.seed})
    return Path(cfg.cache_root) / "_weights" / "fusion-weights" / fp


def cmd_fuse_smoke(cfg: RunConfig, shape=(8, 16, 16), hf_channels=None, out_channels=None) -> Summary:
    """Run BBMG + diagonal HF + ODE on seeded synthetic embeddings and check
    the full channel chain 2C -> C -> 2C -> C_hf + 2C -> C_out."""
    c, h, w = shape
    c_hf = c if hf_channels is None else hf_channels
    c_out = c if out_channels is None else out_channels
    summary = Summary("fuse-smoke", seed=cfg.seed)
    wdir = weights_dir(cfg, c, c_hf, c_out)
    try:
        weights = fusion.load_weights(wdir)
        summary.count("cached")
    except (CamproError, OSError, KeyError):
        weights = fusion.random_weights(c, c_hf, c_out, seed=cfg.seed)
        fusion.save_weights(weights, wdir)
        summary.count("produced")

    rng = np.random.default_rng(cfg.seed)
    e_box = rng.standard_normal((c, h, w))
    e_boundary = rng.standard_normal((c, h, w))
    image_emb = rng.standard_normal((c_hf, h, w))

    cat = fusion.concat_channels(e_box, e_boundary, "bbmg.concat")
    _expect("bbmg.concat", cat, (2 * c, h, w))
    em = fusion.pointwise_conv(cat, weights.dc1, "bbmg.dc1")
    _expect("bbmg.dc1", em, (c, h, w))
    obb = fusion.bbmg_forward(e_box, e_boundary, weights.dc1, weights.cbr)
    _expect("bbmg.obb", obb, (2 * c, h, w))
    if not np.array_equal(obb[c:], em):
        raise ShapeError("residual half of OBB differs from EM", "bbmg.residual")
    hf = wavelet.diagonal_hf(image_emb)
    _expect("dwt.hf", hf, (c_hf, h, w))
    joined = fusion.concat_channels(hf, obb, "ode.concat")
    _expect("ode.concat", joined, (c_hf + 2 * c, h, w))
    ode = fusion.ode_forward(hf, obb, weights.dc2)
    _expect("ode.dc2", ode, (c_out, h, w))

    summary.extra.update({
        "shape": f"{c}x{h}x{w}",
        "chain": f"{2 * c}->{c}->{2 * c}->{c_hf + 2 * c}->{c_out}",
        "checksum.em": checksum(em),
        "checksum.obb": checksum(obb),
        "checksum.hf": checksum(hf),
        "checksum.ode": checksum(ode),
    })
    summary.outputs.append(str(wdir))
    return summary


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    return replace(cfg, **kw)
