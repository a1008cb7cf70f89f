"""Command-line interface.

Subcommands:

* ``run`` — execute one scenario config; writes ``trajectory.csv``,
  ``summary.json``, and figures into ``--out``.
* ``sweep`` — rerun a scenario with one config field swept over a value
  list; writes ``sweep.csv`` and a figure.
* ``gradcheck`` — compare closed-form gradients against central finite
  differences for the configured loss and for the box loss.
* ``nms-demo`` — run the canonical three-box suppression fixture and print
  (optionally render) the kept set.
* ``eval`` — score a JSON detections file and print the evaluation report.

Exit codes: 0 on success, 2 on malformed configuration, 3 on training
divergence. ``RANKPAIR_SEED`` overrides the configured scenario seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, DivergenceError, RankPairError
from .geometry import NMS_IOU_THRESH, NMS_SCORE_THRESH, iou, nms
from .harness import evaluate_detections_file, grad_check, run_experiment, sweep_experiment
from .rankloss import LossConfig, loss_config_from_dict

EXIT_OK = 0
EXIT_BAD_CONFIG = 2
EXIT_DIVERGED = 3

#: Three-box fixture: box 1 heavily overlaps box 0 (IoU 3.3/4.7 ~ 0.70,
#: above the 0.6 suppression threshold), box 2 is disjoint from both, and
#: scores rank 0 > 1 > 2 — so suppression keeps exactly {0, 2}.
NMS_DEMO_BOXES = np.array(
    [
        [0.0, 0.0, 2.0, 2.0],
        [0.0, 0.35, 2.0, 2.35],
        [3.0, 3.0, 4.0, 4.0],
    ]
)
NMS_DEMO_SCORES = np.array([0.9, 0.75, 0.6])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankpair",
        description="Pairwise ranking losses for dense detection at desk scale.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario and write its report files")
    run_p.add_argument("--config", required=True, help="path to a scenario JSON config")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    sweep_p = sub.add_parser("sweep", help="sweep one config field over a value list")
    sweep_p.add_argument("--config", required=True, help="path to a scenario JSON config")
    sweep_p.add_argument(
        "--param", required=True, help="dotted config path, e.g. loss.distance.delta"
    )
    sweep_p.add_argument(
        "--values",
        required=True,
        help="comma-separated JSON scalars, e.g. 1,0.5,0.25,0.125",
    )
    sweep_p.add_argument("--out", required=True, help="output directory")
    sweep_p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    gc_p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    gc_p.add_argument("--config", help="optional path to a loss JSON config")
    gc_p.add_argument("--trials", type=int, default=100)
    gc_p.add_argument("--seed", type=int, default=0)

    nms_p = sub.add_parser("nms-demo", help="run the canonical suppression fixture")
    nms_p.add_argument("--out", help="optional directory for a rendered figure")

    eval_p = sub.add_parser("eval", help="score a JSON detections file")
    eval_p.add_argument("--input", required=True, help="path to the detections JSON file")
    eval_p.add_argument(
        "--iou-floor",
        type=float,
        default=0.5,
        help="only detections above this best-IoU enter the correlations",
    )
    return parser


def _parse_sweep_values(text: str) -> list:
    values = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            raise ConfigError("empty entry in --values")
        try:
            values.append(json.loads(chunk))
        except json.JSONDecodeError:
            values.append(chunk)  # bare strings are legal values
    return values


def _cmd_run(args) -> int:
    result = run_experiment(args.config, args.out, make_figures=not args.no_figures)
    print(f"wrote {result['trajectory_csv']}")
    print(f"wrote {result['summary_json']}")
    for fig in result["figures"]:
        print(f"wrote {fig}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    values = _parse_sweep_values(args.values)
    rows = sweep_experiment(
        args.config, args.param, values, args.out, make_figures=not args.no_figures
    )
    out = Path(args.out)
    print(f"wrote {out / 'sweep.csv'} ({len(rows)} settings)")
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    if args.config:
        path = Path(args.config)
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        cfg = loss_config_from_dict(obj)
    else:
        cfg = LossConfig()
    report = grad_check(cfg, trials=args.trials, seed=args.seed)
    if report.skipped:
        print(report.notice)
    else:
        print(f"loss gradient: max relative error {report.loss_max_rel_error:.3e}")
    print(f"giou gradient: max relative error {report.giou_max_rel_error:.3e}")
    return EXIT_OK


def _cmd_nms_demo(args) -> int:
    kept = nms(NMS_DEMO_BOXES, NMS_DEMO_SCORES, NMS_SCORE_THRESH, NMS_IOU_THRESH)
    print(f"boxes: {NMS_DEMO_BOXES.tolist()}")
    print(f"scores: {NMS_DEMO_SCORES.tolist()}")
    print(f"iou(0, 1) = {iou(NMS_DEMO_BOXES[0], NMS_DEMO_BOXES[1]):.4f}")
    print(f"kept: {kept}")
    if args.out:
        from . import plots

        path = plots.render_nms_figure(
            NMS_DEMO_BOXES, NMS_DEMO_SCORES, kept, Path(args.out) / "nms.png"
        )
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    report = evaluate_detections_file(args.input, correlation_iou_floor=args.iou_floor)
    print(report.to_json(indent=2))
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "gradcheck": _cmd_gradcheck,
    "nms-demo": _cmd_nms_demo,
    "eval": _cmd_eval,
}


def entrypoint(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except RankPairError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(entrypoint())


if __name__ == "__main__":
    main()
