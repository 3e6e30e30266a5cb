"""Command-line entry point: ``cats-hoi {synth,train,eval,ablate-depth,ablate-independent,render}``.

Any config key can be overridden with ``--key=value`` (or ``--section.key=value``).
Failures print one line ``error: <CODE>: <message>`` to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .config import ConfigError, apply_overrides, load_config
from .data import DatasetParseError, default_scenario, hard_scenario, save_dataset, synthesize
from .experiment import (RunConfig, TrainingError, ablate_gcn_depth, ablate_independent_entity, evaluate,
                         train, write_report)
from .metrics import Segment, timeline_from_labels

EXIT_CODES = {"USAGE": 2, "CONFIG": 3, "DATA": 4, "TRAIN": 5, "CHECKPOINT": 6, "INTERNAL": 1}


class CliError(Exception):
    def __init__(self, code: str, msg: str):
        super().__init__(msg)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("USAGE", message)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cats-hoi", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed_required=False):
        sp.add_argument("--config", help="INI run configuration")
        sp.add_argument("--seed", type=int, required=seed_required)
        sp.add_argument("--output-dir", dest="output_dir")
        sp.add_argument("--preset", choices=("default", "hard"), default=None,
                        help="replace the [scenario] section with a built-in scenario")

    s = sub.add_parser("synth", help="write a synthetic dataset")
    common(s)
    s.add_argument("--out", required=True)
    common(sub.add_parser("train", help="cross-validated training"), seed_required=True)
    e = sub.add_parser("eval", help="evaluate saved fold checkpoints")
    common(e)
    e.add_argument("--checkpoint", required=True)
    common(sub.add_parser("ablate-depth", help="GCN depth comparison (1..5 layers)"), seed_required=True)
    common(sub.add_parser("ablate-independent", help="independent-entity vs CATS"), seed_required=True)
    r = sub.add_parser("render", help="render gt/pred timelines as SVG + text")
    r.add_argument("--gt", required=True, help="frame labels, comma separated, or 'label:start-end,...'")
    r.add_argument("--pred", required=True)
    r.add_argument("--out", required=True, help="output path stem")
    r.add_argument("--k", type=float, default=0.5)
    return p


def parse_timeline(text: str) -> List[Segment]:
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        segs = []
        for tok in text.split(","):
            lab, rng = tok.split(":")
            a, b = rng.split("-")
            segs.append(Segment(int(lab), int(a), int(b)))
        return segs
    return timeline_from_labels([int(v) for v in text.split(",")])


def _config(args, overrides: List[str]) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "preset", None):
        preset = hard_scenario if args.preset == "hard" else default_scenario
        config = dataclasses.replace(config, scenario=preset(config.scenario.seed))
    config = apply_overrides(config, overrides)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if args.output_dir:
        config = dataclasses.replace(config, output_dir=args.output_dir)
    return config


def run(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    args, extra = parser.parse_known_args(argv)
    bad = [x for x in extra if not (x.startswith("--") and "=" in x)]
    if bad:
        raise CliError("USAGE", f"unrecognised arguments: {' '.join(bad)}")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    if args.command == "render":
        from .render import render_timeline
        bad_pred, bad_gt = render_timeline(parse_timeline(args.gt), parse_timeline(args.pred), args.out, args.k)
        print(json.dumps({"flagged_pred": bad_pred, "flagged_gt": bad_gt}))
        return 0

    config = _config(args, extra)
    if args.command == "synth":
        data = synthesize(config.scenario)
        save_dataset(args.out, data)
        print(f"wrote {len(data)} videos to {args.out}")
        return 0
    if config.output_dir:
        Path(config.output_dir).mkdir(parents=True, exist_ok=True)
    if args.command == "train":
        arts = train(config)
        print(arts.report.to_table("CATS"))
    elif args.command == "eval":
        report = evaluate(config, args.checkpoint)
        if config.output_dir:
            write_report(Path(config.output_dir), report, "CATS (re-evaluated)")
        print(report.to_table("CATS"))
    elif args.command == "ablate-depth":
        print(ablate_gcn_depth(config).to_text(), end="")
    elif args.command == "ablate-independent":
        print(ablate_independent_entity(config).to_text(), end="")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    try:
        return run(argv)
    except CliError as exc:
        code, msg = exc.code, str(exc)
    except ConfigError as exc:
        code, msg = "CONFIG", str(exc)
    except (DatasetParseError, FileNotFoundError) as exc:
        code, msg = "DATA", str(exc)
    except TrainingError as exc:
        code, msg = "TRAIN", str(exc)
    except ValueError as exc:
        code, msg = ("CHECKPOINT" if "checkpoint" in str(exc) else "DATA"), str(exc)
    msg = " ".join(msg.split())
    print(f"error: {code}: {msg}", file=sys.stderr)
    return EXIT_CODES[code]


if __name__ == "__main__":
    sys.exit(main())
