"""Command-line entry point.

Subcommands: run a scenario (from a JSON file or a named preset), dump a
preset's expanded scenario, print the analytic bounds, check admission,
and list the available presets.  Exit status: 0 on success, 1 on a
configuration problem (including a failed admission check), 2 on an
unexpected runtime failure.
"""

import argparse
import json
import os
import sys

from . import presets
from .config import ConfigError, Mode, dump_scenario, load_scenario, to_json
from .engine import run as run_engine
from .engine import scenario_analytics
from .exports import analytics_document, write_outputs


def _add_scenario_args(p: argparse.ArgumentParser, for_run: bool = False):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", metavar="FILE",
                     help="scenario JSON document")
    src.add_argument("--preset", metavar="NAME",
                     help="named preset (see list-presets)")
    p.add_argument("--scale", type=int, default=1, metavar="N",
                   help="divide preset flow counts and link rate by N")
    p.add_argument("--seed", type=int, default=None,
                   help="override the scenario seed")
    if for_run:
        p.add_argument("--mode", choices=[m.value for m in Mode], default=None,
                       help="override the metering mode")


def _load(args):
    if args.scenario:
        cfg = load_scenario(args.scenario)
        if args.scale != 1:
            raise ConfigError("--scale applies to presets only")
    else:
        cfg = presets.build(args.preset, scale=args.scale, seed=args.seed)
    if args.seed is not None:
        cfg.seed = args.seed
    mode = getattr(args, "mode", None)
    if mode is not None:
        cfg.mode = Mode(mode)
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qosplane",
        description="QoS-aware 5G transport data-plane simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario, write metrics")
    _add_scenario_args(p_run, for_run=True)
    p_run.add_argument("--out", default=os.environ.get("QOSPLANE_OUT", "."),
                       metavar="DIR", help="output directory "
                       "(default: $QOSPLANE_OUT or the current directory)")
    p_run.add_argument("--format", choices=["csv", "json"], default="csv",
                       help="flow/queue table format")

    p_preset = sub.add_parser("preset", help="expand a preset to JSON")
    p_preset.add_argument("name")
    p_preset.add_argument("--scale", type=int, default=1)
    p_preset.add_argument("--seed", type=int, default=None)
    p_preset.add_argument("-o", "--output", default=None,
                          help="write to a file instead of stdout")

    p_analyze = sub.add_parser("analyze",
                               help="print the analytic model outputs")
    _add_scenario_args(p_analyze)

    p_check = sub.add_parser("check", help="print the admission verdict")
    _add_scenario_args(p_check)

    sub.add_parser("list-presets", help="list the preset names")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, presets.UnknownPreset) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "list-presets":
        for name in presets.list_presets():
            print(name)
        return 0

    if args.command == "preset":
        cfg = presets.build(args.name, scale=args.scale, seed=args.seed)
        if args.output:
            dump_scenario(cfg, args.output)
            print(f"wrote {args.output}")
        else:
            json.dump(to_json(cfg), sys.stdout, indent=2, sort_keys=True)
            print()
        return 0

    cfg = _load(args)

    if args.command == "run":
        metrics = run_engine(cfg)
        paths = write_outputs(metrics, args.out, fmt=args.format)
        totals = metrics.totals()
        print(f"{cfg.name}: {totals['sent_pkts']} packets, "
              f"{totals['meter_drops']} meter drops, "
              f"{totals['queue_drops']} queue drops, "
              f"{metrics.wall_seconds:.2f} s wall clock")
        for path in paths:
            print(f"  wrote {path}")
        return 0

    outputs = scenario_analytics(cfg)
    if args.command == "check":
        adm = outputs.admission
        if adm.admitted:
            print(f"ADMIT: committed {adm.total_cir_bps} bits/s on a "
                  f"{cfg.link.capacity_bps} bits/s link")
            return 0
        print(f"REJECT: committed rates exceed the link by "
              f"{adm.excess_bps} bits/s", file=sys.stderr)
        return 1

    # analyze
    json.dump(analytics_document(outputs), sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
