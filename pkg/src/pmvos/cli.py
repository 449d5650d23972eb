"""Command-line entry point: ``pmvos <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 failed check.
"""
import argparse
import sys
from pathlib import Path

import numpy as np

from . import io as pio
from . import selftest as _selftest
from .errors import PMVOSError
from .fusion import grad_check
from .grid import FeatureGrid, resize_probability
from .matching import KINDS, match_all
from .metrics import evaluate_sequence, jf_mean, upsample_labels
from .synth import gen_sequence
from .tracker import MODES, TrackerConfig, init, labels_from_foreground, step

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CHECK = 0, 1, 2, 3
GRADCHECK_TOL = 1e-4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _frame_name(i, ext):
    return f"{i:05d}{ext}"


def _sorted_files(directory, ext):
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"{directory} is not a directory")
    return sorted(p for p in directory.iterdir() if p.suffix == ext and not p.name.startswith("."))


def cmd_synth(args):
    spec = pio.synth_spec_from_config(Path(args.spec).read_text())
    frames, labels = gen_sequence(spec)
    out = Path(args.out)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    for t in range(len(frames)):
        pio.write_tensor(out / "frames" / _frame_name(t, ".pmt"), frames[t])
        pio.write_mask(out / "masks" / _frame_name(t, ".pgm"), labels[t], num_objects=len(spec.objects))
    print(f"wrote {len(frames)} frames to {out}")
    return EXIT_OK


def _tracker_config(args):
    fusion = args.fusion
    if fusion not in ("default", "fit"):
        fusion = pio.fusion_params_from_config(Path(fusion).read_text())
    return TrackerConfig(mode=args.mode, alpha=args.alpha, gamma_spatial=args.gamma_spatial,
                         gamma_channel=args.gamma_channel, fusion=fusion)


def cmd_track(args):
    config = _tracker_config(args)
    paths = _sorted_files(args.frames, ".pmt")
    if not paths:
        raise PMVOSError(f"no .pmt frames in {args.frames}")
    frames = [pio.read_tensor(p).astype(np.float64) for p in paths]
    labels0 = pio.read_mask(args.init_mask)
    n_obj = int(labels0.max())
    if n_obj == 0:
        raise PMVOSError("initial mask has no objects")
    h, w = frames[0].shape[1:]
    fg = [[] for _ in frames]
    states = []
    for obj in range(1, n_obj + 1):
        mask0 = (labels0 == obj).astype(np.float64)
        state = init(frames[0], mask0, config)
        fg[0].append(resize_probability(np.stack([1 - mask0, mask0]), h, w).foreground)
        for t in range(1, len(frames)):
            probs, state = step(state, frames[t], config)
            fg[t].append(probs.foreground)
        states.append(state)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for t, path in enumerate(paths):
        pio.write_mask(out / (path.stem + ".pgm"), labels_from_foreground(fg[t]), num_objects=n_obj)
    if args.state_out:
        target = Path(args.state_out)
        for obj, state in enumerate(states, 1):
            dest = target if n_obj == 1 else target.with_name(f"{target.stem}.obj{obj}{target.suffix}")
            pio.save_state(dest, state)
    print(f"tracked {n_obj} object(s) over {len(frames)} frames in mode {config.mode}")
    return EXIT_OK


def cmd_match(args):
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    state = pio.load_state(args.state)
    frame = FeatureGrid(pio.read_tensor(args.frame).astype(np.float64))
    stack = match_all(frame, state.bank, kinds)
    out = Path(args.dump)
    out.mkdir(parents=True, exist_ok=True)
    for j, kind in enumerate(stack.kinds):
        pio.write_tensor(out / f"{kind}.pmt", stack.maps[:, j])
    print(f"wrote {', '.join(stack.kinds)} maps to {out}")
    return EXIT_OK


def _sequences(pred_dir, gt_dir):
    gt_dir, pred_dir = Path(gt_dir), Path(pred_dir)
    subdirs = sorted(p for p in gt_dir.iterdir() if p.is_dir()) if gt_dir.is_dir() else []
    if subdirs:
        return [(d.name, pred_dir / d.name, d) for d in subdirs]
    return [(gt_dir.name, pred_dir, gt_dir)]


def cmd_eval(args):
    rows = []
    for name, pdir, gdir in _sequences(args.pred, args.gt):
        gt_paths = _sorted_files(gdir, ".pgm")
        if not gt_paths:
            raise PMVOSError(f"no ground-truth masks in {gdir}")
        gts, preds = [], []
        for gp in gt_paths:
            pp = pdir / gp.name
            if not pp.exists():
                raise PMVOSError(f"missing prediction {pp}")
            gt = pio.read_mask(gp)
            pred = pio.read_mask(pp)
            if pred.shape != gt.shape:
                pred = upsample_labels(pred, *gt.shape)
            gts.append(gt)
            preds.append(pred)
        frames = [int(p.stem) if p.stem.isdigit() else i for i, p in enumerate(gt_paths)]
        seq_rows = evaluate_sequence(name, np.stack(preds), np.stack(gts), tolerance_px=args.tolerance)
        rows += [r.__class__(r.sequence, r.object, frames[r.frame], r.J, r.F) for r in seq_rows]
    report = jf_mean(rows)
    pio.write_text(args.report, pio.report_to_csv(report))
    print(f"J = {report.J:.6f}  F = {report.F:.6f}  J&F = {report.JF:.6f}")
    return EXIT_OK


def cmd_gradcheck(args):
    worst = max(grad_check(seed) for seed in range(args.seeds))
    ok = worst < GRADCHECK_TOL
    print(f"max relative error over {args.seeds} seeds: {worst:.3e} ({'ok' if ok else 'FAILED'})")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_selftest(args):
    results = _selftest.run_all(quick=not args.full)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_CHECK


def build_parser():
    parser = _Parser(prog="pmvos", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic sequence")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("track", help="segment a sequence from its first-frame mask")
    p.add_argument("--frames", required=True)
    p.add_argument("--init-mask", required=True)
    p.add_argument("--mode", choices=sorted(MODES), default="GLM")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--gamma-spatial", type=float, default=1.0)
    p.add_argument("--gamma-channel", type=float, default=1.0)
    p.add_argument("--fusion", default="default", help="default, fit, or a params config file")
    p.add_argument("--state-out", help="write the final tracker state snapshot here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("match", help="dump similarity maps for one frame")
    p.add_argument("--frame", required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--kinds", default=",".join(KINDS))
    p.add_argument("--dump", required=True)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("eval", help="score predicted masks against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--tolerance", type=float, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="check fusion-head gradients")
    p.add_argument("--seeds", type=int, default=100)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("selftest", help="run the oracle-equivalence suites")
    p.add_argument("--full", action="store_true", help="acceptance-sized instance counts")
    p.set_defaults(func=cmd_selftest)
    return parser


def run_cli(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (PMVOSError, OSError) as exc:
        print(f"pmvos {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
