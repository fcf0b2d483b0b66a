"""Command-line surface binding the library into reproducible runs.

Every subcommand resolves its effective configuration as defaults,
overridden by ``--config`` (JSON), overridden by explicit flags, and
writes a manifest recording that configuration, the seed, and the
SHA-256 of each artifact. Re-running a command with the same inputs and
seed reproduces all artifacts bit-exactly. Environment variables are
never consulted.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .attention import AttentionBatch, DropoutConfig, resample_mask, warp_guided_attention
from .geometry import CameraIntrinsics, OrbitSpec, make_orbit_poses
from .io import (
    RunConfig,
    load_depth,
    load_image,
    load_poses,
    load_tensor,
    save_image,
    save_pfm,
    save_poses,
    save_tensor,
    write_manifest,
)
from .metrics import (
    FeatureDistanceProvider,
    PixelDistanceProvider,
    camera_accuracy_report,
    camera_translation_xz,
    sequence_consistency,
)
from .noiseinit import NoiseSchedule, PatchMeanEncoder, SpectralMixConfig, pani_pipeline
from .scene import make_checkerboard_scene
from .viewrange import IoUMatrix, RangeSelection, adaptive_range, iou_matrix, mask_from_image
from .warp import warp_batch

_SCENE_SIZE = 64


def _effective_config(args, **overrides) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides["seed"] = getattr(args, "seed", None)
    return cfg.updated(**overrides)


def _sorted_pngs(directory: Path) -> list[Path]:
    files = sorted(Path(directory).glob("*.png"))
    if not files:
        raise FileNotFoundError(f"no PNG files in {directory}")
    return files


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _intrinsics_from_args(args) -> CameraIntrinsics:
    return CameraIntrinsics(
        fx=args.fx, fy=args.fy, cx=args.cx, cy=args.cy, width=args.width, height=args.height
    )


# ---------------------------------------------------------------------------
# subcommand handlers


def cmd_scene(args) -> int:
    cfg = _effective_config(args)
    out = _out_dir(args)
    img, depth, _ = make_checkerboard_scene(size=args.size)
    image_path = out / "scene.png"
    depth_path = out / "scene_depth.pfm"
    save_image(img, image_path)
    save_pfm(depth_path, depth.values)
    write_manifest(out / "manifest.json", "scene", cfg, [image_path, depth_path])
    return 0


def cmd_orbit(args) -> int:
    cfg = _effective_config(
        args,
        orbit_count=args.count,
        orbit_radius=args.radius,
        orbit_half_angle_deg=args.half_angle,
    )
    spec = OrbitSpec(cfg.orbit_count, cfg.orbit_radius, cfg.orbit_half_angle_deg)
    poses = make_orbit_poses(spec)
    out = Path(args.out)
    save_poses(out, poses, _intrinsics_from_args(args), convention=args.convention)
    write_manifest(Path(str(out) + ".manifest.json"), "orbit", cfg, [out])
    return 0


def cmd_warp(args) -> int:
    cfg = _effective_config(args)
    out = _out_dir(args)
    img = load_image(args.image, lift_zeros=True)
    depth = load_depth(args.depth)
    poses, intrinsics = load_poses(args.poses)
    results = warp_batch(img, depth, intrinsics, poses)
    outputs = []
    for i, res in enumerate(results):
        path = out / f"warp_{i:03d}.png"
        save_image(res.image, path)
        outputs.append(path)
    write_manifest(
        out / "manifest.json",
        "warp",
        cfg,
        outputs,
        extra={"coverage": [res.coverage for res in results]},
    )
    return 0


def cmd_masks(args) -> int:
    cfg = _effective_config(args)
    out = _out_dir(args)
    outputs = []
    for i, path in enumerate(_sorted_pngs(Path(args.in_dir))):
        mask = mask_from_image(load_image(path))
        dest = out / f"mask_{i:03d}.png"
        save_image(mask.astype(np.float64)[..., None], dest)
        outputs.append(dest)
    write_manifest(out / "manifest.json", "masks", cfg, outputs)
    return 0


def cmd_iou(args) -> int:
    cfg = _effective_config(args)
    masks = [mask_from_image(load_image(p)) for p in _sorted_pngs(Path(args.masks))]
    matrix = iou_matrix(masks)
    out = Path(args.out)
    doc = {
        "n": matrix.n,
        "values": matrix.values.tolist(),
        "empty_union": matrix.empty_union.tolist(),
    }
    out.write_text(json.dumps(doc, indent=2) + "\n")
    write_manifest(Path(str(out) + ".manifest.json"), "iou", cfg, [out])
    return 0


def cmd_range(args) -> int:
    cfg = _effective_config(
        args,
        interval_mode=args.interval_mode,
        include_self_in_stats=args.include_self_in_stats,
    )
    doc = json.loads(Path(args.iou).read_text())
    matrix = IoUMatrix(np.array(doc["values"]), np.array(doc["empty_union"], dtype=bool))
    sel = adaptive_range(
        matrix, include_self_in_stats=cfg.include_self_in_stats, mode=cfg.interval_mode
    )
    out = Path(args.out)
    out.write_text(
        json.dumps(
            {
                "sets": [s.tolist() for s in sel.sets],
                "mu": sel.mu.tolist(),
                "sigma": sel.sigma.tolist(),
                "interval_mode": cfg.interval_mode,
            },
            indent=2,
        )
        + "\n"
    )
    write_manifest(Path(str(out) + ".manifest.json"), "range", cfg, [out])
    return 0


def _load_range(path) -> RangeSelection:
    doc = json.loads(Path(path).read_text())
    return RangeSelection(
        sets=[np.array(s, dtype=np.int64) for s in doc["sets"]],
        mu=np.array(doc["mu"]),
        sigma=np.array(doc["sigma"]),
    )


def cmd_attn(args) -> int:
    cfg = _effective_config(
        args,
        dropout_ratio=args.dropout_ratio,
        dropout_enabled=True if args.dropout else None,
        renormalize_attention=True if args.renormalize else None,
    )
    batch = AttentionBatch(
        np.asarray(load_tensor(args.q), np.float64),
        np.asarray(load_tensor(args.k), np.float64),
        np.asarray(load_tensor(args.v), np.float64),
    )
    if args.token_masks:
        token_masks = np.asarray(load_tensor(args.token_masks), np.float64)
    else:
        grid = (args.grid[0], args.grid[1])
        rows = [
            resample_mask(mask_from_image(load_image(p)), grid)
            for p in _sorted_pngs(Path(args.mask_dir))
        ]
        token_masks = np.stack(rows).astype(np.float64)
    sel = _load_range(args.ranges) if args.ranges else RangeSelection.full(batch.n)
    drop = DropoutConfig(ratio=cfg.dropout_ratio, seed=cfg.seed, enabled=cfg.dropout_enabled)
    hidden = warp_guided_attention(
        batch, token_masks, sel, drop, renormalize=cfg.renormalize_attention
    )
    out = Path(args.out)
    save_tensor(out, hidden)
    write_manifest(Path(str(out) + ".manifest.json"), "attn", cfg, [out])
    return 0


def cmd_pani(args) -> int:
    cfg = _effective_config(
        args,
        d0=args.d0,
        t_noise=args.t_noise,
        fill_sigma=args.fill_sigma,
        mean_mode=args.mean_mode,
        patch_size=args.patch_size,
    )
    out = _out_dir(args)
    img = load_image(args.image, lift_zeros=True)
    depth = load_depth(args.depth)
    poses, intrinsics = load_poses(args.poses)
    mix = SpectralMixConfig(
        d0=cfg.d0, t_noise=cfg.t_noise, fill_sigma=cfg.fill_sigma, mean_mode=cfg.mean_mode
    )
    schedule = NoiseSchedule.linear(cfg.schedule_steps, cfg.beta_start, cfg.beta_end)
    latents = pani_pipeline(
        img,
        depth,
        intrinsics,
        poses,
        PatchMeanEncoder(cfg.patch_size),
        mix,
        cfg.seed,
        schedule=schedule,
    )
    outputs = []
    for i, latent in enumerate(latents):
        path = out / f"latent_{i:03d}.wavt"
        save_tensor(path, latent)
        outputs.append(path)
    write_manifest(out / "manifest.json", "pani", cfg, outputs)
    return 0


def cmd_metrics_pose(args) -> int:
    cfg = _effective_config(args, penalty_mode=args.penalty_mode)
    est, _ = load_poses(args.est)
    gt, _ = load_poses(args.gt)
    required = args.required_n if args.required_n is not None else len(gt)
    report = camera_accuracy_report(est, gt, required, cfg.penalty_mode)
    out = Path(args.out)
    out.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    outputs = [out]
    if args.translation_csv:
        xz = camera_translation_xz(est)
        csv_path = Path(args.translation_csv)
        lines = ["x,z"] + [f"{x!r},{z!r}" for x, z in xz]
        csv_path.write_text("\n".join(lines) + "\n")
        outputs.append(csv_path)
    write_manifest(Path(str(out) + ".manifest.json"), "metrics-pose", cfg, outputs)
    return 0


def cmd_metrics_consistency(args) -> int:
    cfg = _effective_config(args, ref_index=args.ref_index)
    if args.features:
        features = load_tensor(args.features)
        provider = FeatureDistanceProvider(features)
        n = features.shape[0]
    else:
        images = [load_image(p) for p in _sorted_pngs(Path(args.images))]
        provider = PixelDistanceProvider(images)
        n = len(images)
    report = sequence_consistency(n, provider, scheme=args.scheme, ref_index=cfg.ref_index)
    out = Path(args.out)
    out.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    write_manifest(Path(str(out) + ".manifest.json"), "metrics-consistency", cfg, [out])
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON run configuration file")
    p.add_argument("--seed", type=int, default=None, help="override the configured seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="warpview",
        description="Depth-based view warping, adaptive masked attention, "
        "spectral noise re-initialization, and view-consistency metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scene", help="emit the bundled synthetic scene (PNG + PFM)")
    _add_common(p)
    p.add_argument("--size", type=int, default=_SCENE_SIZE)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_scene)

    p = sub.add_parser("orbit", help="write an orbit pose file")
    _add_common(p)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--half-angle", type=float, default=None, dest="half_angle")
    p.add_argument("--convention", choices=["opengl", "opencv"], default="opengl")
    p.add_argument("--fx", type=float, default=float(_SCENE_SIZE))
    p.add_argument("--fy", type=float, default=float(_SCENE_SIZE))
    p.add_argument("--cx", type=float, default=(_SCENE_SIZE - 1) / 2.0)
    p.add_argument("--cy", type=float, default=(_SCENE_SIZE - 1) / 2.0)
    p.add_argument("--width", type=int, default=_SCENE_SIZE)
    p.add_argument("--height", type=int, default=_SCENE_SIZE)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("warp", help="warp an image to every pose in a pose file")
    _add_common(p)
    p.add_argument("--image", required=True)
    p.add_argument("--depth", required=True)
    p.add_argument("--poses", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_warp)

    p = sub.add_parser("masks", help="covered-region masks of warped PNGs")
    _add_common(p)
    p.add_argument("--in-dir", required=True, dest="in_dir")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_masks)

    p = sub.add_parser("iou", help="pairwise IoU matrix of mask PNGs")
    _add_common(p)
    p.add_argument("--masks", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_iou)

    p = sub.add_parser("range", help="adaptive reference ranges from an IoU matrix")
    _add_common(p)
    p.add_argument("--iou", required=True)
    p.add_argument("--interval-mode", choices=["interval", "lower-bound"], default=None)
    p.add_argument(
        "--include-self-in-stats", action="store_const", const=True, default=None
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_range)

    p = sub.add_parser("attn", help="warp-guided masked batch attention on tensor files")
    _add_common(p)
    p.add_argument("--q", required=True)
    p.add_argument("--k", required=True)
    p.add_argument("--v", required=True)
    p.add_argument("--token-masks", default=None, help="rank-2 (views, tokens) tensor file")
    p.add_argument("--mask-dir", default=None, help="mask PNGs to resample instead")
    p.add_argument("--grid", type=int, nargs=2, default=None, metavar=("H", "W"))
    p.add_argument("--ranges", default=None, help="range-selection JSON (default: all views)")
    p.add_argument("--dropout", action="store_true", help="enable mask dropout")
    p.add_argument("--dropout-ratio", type=float, default=None)
    p.add_argument("--renormalize", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_attn)

    p = sub.add_parser("pani", help="pose-aware re-initialized noise per pose")
    _add_common(p)
    p.add_argument("--image", required=True)
    p.add_argument("--depth", required=True)
    p.add_argument("--poses", required=True)
    p.add_argument("--d0", type=float, default=None)
    p.add_argument("--t-noise", type=int, default=None, dest="t_noise")
    p.add_argument("--fill-sigma", type=float, default=None, dest="fill_sigma")
    p.add_argument("--mean-mode", choices=["all", "passband"], default=None, dest="mean_mode")
    p.add_argument("--patch-size", type=int, default=None, dest="patch_size")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_pani)

    metrics = sub.add_parser("metrics", help="view-consistency metric reports")
    msub = metrics.add_subparsers(dest="metrics_command", required=True)

    p = msub.add_parser("pose", help="rotation accuracy of estimated vs reference poses")
    _add_common(p)
    p.add_argument("--est", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--required-n", type=int, default=None, dest="required_n")
    p.add_argument("--penalty-mode", choices=["duplicate", "max-error"], default=None)
    p.add_argument("--translation-csv", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_metrics_pose)

    p = msub.add_parser("consistency", help="first/next sequence consistency")
    _add_common(p)
    p.add_argument("--images", default=None, help="directory of PNGs")
    p.add_argument("--features", default=None, help="rank-2 (images, dim) tensor file")
    p.add_argument("--scheme", choices=["first", "next"], default="next")
    p.add_argument("--ref-index", type=int, default=None, dest="ref_index")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_metrics_consistency)

    return parser


def run_cli(argv) -> int:
    """Parse and execute; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "command", None) == "attn":
            if not args.token_masks and not (args.mask_dir and args.grid):
                parser.error("attn needs --token-masks or both --mask-dir and --grid")
        if getattr(args, "metrics_command", None) == "consistency":
            if bool(args.images) == bool(args.features):
                parser.error("consistency needs exactly one of --images / --features")
    except SystemExit as exc:  # argparse already printed usage
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - boundary: report and exit nonzero
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


def main() -> int:
    return run_cli(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
