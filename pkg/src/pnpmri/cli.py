"""``pnpmri`` command line: simulate, train, reconstruct, evaluate, compare.

Exit codes: 0 success, 2 configuration or input error, 3 I/O error,
4 numerical non-convergence (outputs are still written).
"""

import argparse
import json
import os
import sys

import numpy as np

from . import benchmark as bench
from .config import ConfigError, ExperimentConfig, apply_overrides, load_config
from .core import SensitivityMaps
from .denoiser.checkpoint import CheckpointError, dumps, load_weights
from .denoiser.estimators import CnnDenoiser
from .exceptions import EmptyDatasetError
from .fileio import (
    FileFormatError,
    image_from_bytes,
    image_to_bytes,
    kspace_to_bytes,
    load_image,
    load_kspace,
)
from .grappa import GrappaKernelGeometry, grappa_reconstruct
from .metrics import evaluate
from .operators import EncodingOperator, zero_filled_recon
from .pnp_admm import PnpConfig, pnp_reconstruct
from .prox import CgConfig
from .simulate import object_support

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NONCONVERGED = 0, 2, 3, 4
SCHEMA_VERSION = 1


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _json_bytes(doc):
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def _write_all(out_dir, files):
    """Write ``{relative path: bytes}`` once everything has been computed."""
    for rel, blob in files.items():
        path = os.path.join(out_dir, rel)
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(blob)


def _config(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {
        "seed": args.seed,
        "out_dir": args.out_dir,
        "method": getattr(args, "method", None),
        "lam": getattr(args, "lam", None),
        "iters": getattr(args, "iters", None),
        "checkpoint": getattr(args, "checkpoint", None),
    }
    return apply_overrides(cfg, overrides)


def _load_checkpoint(path):
    if path is None:
        raise CliError("method pnp needs a denoiser checkpoint (--checkpoint)", EXIT_CONFIG)
    weights, _ = load_weights(path)
    return CnnDenoiser.from_weights(weights)


def _stored(blob):
    return image_from_bytes(blob)[0]


def _maps_from_image(values):
    rss = np.sqrt(np.sum(np.abs(values) ** 2, axis=0))
    return SensitivityMaps.from_raw(values) if np.any(rss > 0) else None


# -- simulate -------------------------------------------------------------


def simulate_files(cfg):
    case = bench.make_case(cfg, cfg.seed)
    maps = case.op.maps
    files = {
        "kspace.ksp": kspace_to_bytes(case.kspace, seed=cfg.seed, sigma=cfg.noise_sigma),
        "truth.img": image_to_bytes(case.truth, seed=cfg.seed),
        "maps.img": image_to_bytes(maps.values, seed=cfg.maps_seed),
    }
    return files, case.kspace.mask.acceleration()


def cmd_simulate(args):
    cfg = _config(args)
    files, accel = simulate_files(cfg)
    _write_all(cfg.out_dir, files)
    print(f"effective acceleration {accel:.4f} ({cfg.mask_label()}, acs={cfg.acs})")
    return EXIT_OK


# -- train ----------------------------------------------------------------


def train_files(cfg):
    if cfg.num_train == 0:
        raise EmptyDatasetError("num_train is 0: no training pairs")
    X, y = bench.training_pairs(cfg)
    den = bench.make_denoiser(cfg).fit(X, y)
    loss = {
        "schema_version": SCHEMA_VERSION,
        "num_pairs": int(len(X)),
        "epochs": cfg.epochs,
        "seed": cfg.seed,
        "initial_loss": den.initial_loss_,
        "final_loss": den.final_loss_,
        "epoch_losses": list(den.loss_curve_),
    }
    extra = {"epochs": cfg.epochs, "num_pairs": len(X), "mask": cfg.mask_label()}
    files = {
        "denoiser.pnpw": dumps(den.weights_, seed=cfg.seed, extra=extra),
        "loss.json": _json_bytes(loss),
    }
    return files, den


def cmd_train(args):
    cfg = _config(args)
    files, den = train_files(cfg)
    _write_all(cfg.out_dir, files)
    print(f"training loss {den.initial_loss_:.6g} -> {den.final_loss_:.6g}")
    return EXIT_OK if den.final_loss_ <= den.initial_loss_ else EXIT_NONCONVERGED


# -- reconstruct ----------------------------------------------------------


def _reconstruct(kspace, maps, cfg, denoiser):
    """Returns ``(image, history or None)`` for ``cfg.method``."""
    if cfg.method == "grappa":
        geom = GrappaKernelGeometry(
            cfg.num_source_lines, cfg.kernel_readout_width, calibration_shifts=cfg.calibration_shifts
        )
        return grappa_reconstruct(kspace, geom, cfg.tikhonov), None
    if maps is None:
        raise CliError(f"method {cfg.method} needs coil maps (--maps)", EXIT_CONFIG)
    op = EncodingOperator(maps, kspace.mask)
    if cfg.method == "zero-filled":
        return zero_filled_recon(op, kspace), None
    pnp_cfg = PnpConfig(cfg.lam, cfg.iters, CgConfig(cfg.cg_tol, cfg.cg_max_iters))
    return pnp_reconstruct(op, kspace, denoiser, pnp_cfg)


def _history_doc(history, cfg):
    return {
        "schema_version": SCHEMA_VERSION,
        "method": cfg.method,
        "lambda": cfg.lam,
        "iterations": [r.to_dict() for r in history],
    }


def cmd_reconstruct(args):
    cfg = _config(args)
    kspace, _ = load_kspace(args.kspace)
    maps = _maps_from_image(load_image(args.maps)[0]) if args.maps else None
    denoiser = _load_checkpoint(cfg.checkpoint) if cfg.method == "pnp" else None
    image, history = _reconstruct(kspace, maps, cfg, denoiser)
    files = {"recon.img": image_to_bytes(image, method=cfg.method)}
    code = EXIT_OK
    if history is not None:
        files["history.json"] = _json_bytes(_history_doc(history, cfg))
        if not all(r.prox_converged for r in history):
            code = EXIT_NONCONVERGED
    _write_all(cfg.out_dir, files)
    print(f"{cfg.method}: wrote {os.path.join(cfg.out_dir, 'recon.img')}")
    return code


# -- evaluate -------------------------------------------------------------


def evaluate_arrays(reference, test, region="support", **annotations):
    reference = np.abs(reference)
    test = np.abs(test)
    support = None
    if region == "support" and reference.shape == test.shape:
        support = object_support(reference)
        if not support.any():
            support = None
    return evaluate(reference, test, support, **annotations)


def cmd_evaluate(args):
    cfg = _config(args)
    reference, _ = load_image(args.reference)
    test, _ = load_image(args.test)
    if reference.shape != test.shape:
        raise CliError(
            f"reference shape {reference.shape} does not match test shape {test.shape}", EXIT_CONFIG
        )
    report = evaluate_arrays(reference, test, cfg.region)
    doc = report.to_dict()
    doc["region"] = cfg.region
    blob = _json_bytes(doc)
    _write_all(cfg.out_dir, {"report.json": blob})
    sys.stdout.write(blob.decode("utf-8"))
    return EXIT_OK


# -- compare --------------------------------------------------------------


def _png_bytes(image, vmax):
    from io import BytesIO

    from PIL import Image

    scale = 255.0 / vmax if vmax > 0 else 0.0
    pixels = np.clip(np.rint(np.abs(image) * scale), 0, 255).astype(np.uint8)
    buf = BytesIO()
    Image.fromarray(pixels, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def _mask_dir(factors):
    return "R" + ("x".join(str(f) for f in factors) if np.ndim(factors) else str(factors))


def compare_files(cfg, denoiser=None, log=print):
    """Every ``method x mask`` cell over the test phantoms.

    Metrics are computed from the stored (float32) images so that
    ``evaluate`` on the same files reproduces them exactly.
    """
    files, cases, table = {}, [], []
    nonconverged = 0
    for factors in cfg.masks:
        sub = cfg.with_factors(factors)
        mdir = _mask_dir(factors)
        den = denoiser
        if "pnp" in sub.methods and den is None:
            if sub.checkpoint is not None:
                den = _load_checkpoint(sub.checkpoint)
            else:
                log(f"[{mdir}] training denoiser on {sub.num_train} phantoms")
                tfiles, den = train_files(sub)
                for name, blob in tfiles.items():
                    files[f"{mdir}/{name}"] = blob
        results = []
        for seed in bench.test_seeds(sub):
            case = bench.make_case(sub, seed)
            truth_blob = image_to_bytes(case.truth, seed=seed)
            files[f"{mdir}/truth/case_{seed}.img"] = truth_blob
            truth = _stored(truth_blob)
            recons = {}
            for method in sub.methods:
                image, history = bench.reconstruct(case, method, sub, den)
                blob = image_to_bytes(image, method=method, seed=seed)
                cell = f"{mdir}/{method}/case_{seed}"
                files[f"{cell}/recon.img"] = blob
                stored = _stored(blob)
                report = evaluate_arrays(
                    truth, stored, sub.region, method=method, mask=sub.mask_label(),
                    lam=sub.lam if method == "pnp" else None,
                    iterations=sub.iters if method == "pnp" else None,
                )
                doc = report.to_dict()
                doc["seed"] = seed
                doc["region"] = sub.region
                files[f"{cell}/metrics.json"] = _json_bytes(doc)
                if history is not None:
                    files[f"{cell}/history.json"] = _json_bytes(_history_doc(history, sub))
                    nonconverged += sum(not r.prox_converged for r in history)
                cases.append(doc)
                results.append(bench.CaseResult(seed, method, report.psnr_db, report.ssim))
                recons[method] = np.abs(stored)
            if sub.png:
                ref = np.abs(truth)
                errors = {m: np.abs(r - ref) for m, r in recons.items()}
                err_max = max(float(e.max()) for e in errors.values())
                ref_max = float(ref.max())
                for method, err in errors.items():
                    cell = f"{mdir}/{method}/case_{seed}"
                    files[f"{cell}/error.png"] = _png_bytes(err, err_max)
                    files[f"{cell}/recon.png"] = _png_bytes(recons[method], ref_max)
                    files[f"{cell}/png.json"] = _json_bytes(
                        {
                            "schema_version": SCHEMA_VERSION,
                            "error_window": [0.0, err_max],
                            "recon_window": [0.0, ref_max],
                            "bit_depth": 8,
                        }
                    )
        for row in bench.summarize(results):
            table.append({"mask": sub.mask_label(), **row})
            log(
                f"[{mdir}] {row['method']:>11}: PSNR {row['psnr_mean']:.2f} ± {row['psnr_std']:.2f} dB, "
                f"SSIM {row['ssim_mean']:.4f} ± {row['ssim_std']:.4f}"
            )
    # the output location is left out so reruns elsewhere stay byte-identical
    settings = {k: v for k, v in cfg.to_dict().items() if k != "out_dir"}
    files["summary.json"] = _json_bytes(
        {"schema_version": SCHEMA_VERSION, "config": settings, "table": table}
    )
    files["cases.json"] = _json_bytes({"schema_version": SCHEMA_VERSION, "cases": cases})
    return files, table, nonconverged


def cmd_compare(args):
    cfg = _config(args)
    if args.method is not None:
        cfg = apply_overrides(cfg, {"methods": [args.method]})
    if cfg.png:
        import PIL  # noqa: F401  fail before any work if Pillow is missing
    if "pnp" in cfg.methods and cfg.checkpoint is not None and not os.path.exists(cfg.checkpoint):
        raise CliError(f"checkpoint {cfg.checkpoint} does not exist", EXIT_IO)
    files, _, nonconverged = compare_files(cfg)
    _write_all(cfg.out_dir, files)
    return EXIT_NONCONVERGED if nonconverged else EXIT_OK


# -- entry point ----------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--out-dir", dest="out_dir")

    method = argparse.ArgumentParser(add_help=False)
    method.add_argument("--method", choices=bench.METHODS)
    method.add_argument("--lambda", dest="lam", type=float)
    method.add_argument("--iters", type=int)
    method.add_argument("--checkpoint")

    parser = argparse.ArgumentParser(prog="pnpmri", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="write k-space, truth and coil maps")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", parents=[common], help="train the CNN denoiser")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("reconstruct", parents=[common, method], help="reconstruct one k-space file")
    p.add_argument("--kspace", required=True)
    p.add_argument("--maps")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", parents=[common], help="PSNR/SSIM of a test image")
    p.add_argument("reference")
    p.add_argument("test")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", parents=[common, method], help="method x mask benchmark table")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, EmptyDatasetError, CheckpointError, FileFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
