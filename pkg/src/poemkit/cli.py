"""Command-line interface: ``poemkit run | check-orders | cost | presets``."""
import argparse
import json
import os
import sys

from .errors import ConfigError, PoemError
from .study import (StageError, _write_json, cost_model, load_config, order_iteration,
                    preset_names, run_study, solve_study, summary_text,
                    _fmt_orders)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _on_off(value):
    if value is None:
        return None
    return value == "on"


def build_parser():
    parser = argparse.ArgumentParser(
        prog="poemkit",
        description="Grid-refinement discretization-error studies with preset orders.")
    sub = parser.add_subparsers(dest="command", required=True)

    def overrides(p):
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--midas", choices=("on", "off"), help="interpolate differences")
        p.add_argument("--beta", type=float, help="asymptotic-range threshold")
        p.add_argument("--levels", type=int,
                       help="ladder levels (global levels for two-tier studies)")

    p = sub.add_parser("run", help="full study: tables, report and order iteration")
    p.add_argument("config", help="YAML config path or bundled preset name")
    overrides(p)
    p = sub.add_parser("check-orders", help="order iteration only")
    p.add_argument("config")
    overrides(p)
    p = sub.add_parser("cost", help="work-unit comparison of two studies")
    p.add_argument("config_a")
    p.add_argument("config_b")
    p.add_argument("--out", help="also write cost.json into this directory")
    sub.add_parser("presets", help="list bundled preset configs")
    return parser


def _load(args, source):
    return load_config(source, out=getattr(args, "out", None),
                       midas=_on_off(getattr(args, "midas", None)),
                       beta=getattr(args, "beta", None), levels=getattr(args, "levels", None))


def cmd_run(args):
    for cfg in _load(args, args.config):
        result = run_study(cfg)
        sys.stdout.write(summary_text(result))
        print(f"wrote {len(result.files)} files to {cfg.output_dir}")
    return EXIT_OK


def cmd_check_orders(args):
    for cfg in _load(args, args.config):
        it = order_iteration(solve_study(cfg))
        if it is None:
            print(f"{cfg.title}: order check needs at least two windows")
            continue
        for orders, chk in it.trail:
            slopes = ", ".join(f"{v.observed:.4f}" for v in chk.verdicts)
            mu = "" if chk.mu is None else f", suggested mu = {chk.mu:g}"
            print(f"{cfg.title}: orders {_fmt_orders(orders)} -> slopes [{slopes}]{mu}")
        print(f"{cfg.title}: final orders {_fmt_orders(it.final)} ({it.status})")
        os.makedirs(cfg.output_dir, exist_ok=True)
        _write_json(os.path.join(cfg.output_dir, "orders_trail.json"), it.to_dict())
    return EXIT_OK


def cmd_cost(args):
    cfgs = []
    for source in (args.config_a, args.config_b):
        loaded = load_config(source)
        if len(loaded) != 1:
            raise ConfigError("cost comparison needs a config without a sweep", field="sweep")
        cfgs.append(loaded[0])
    rep = cost_model(*cfgs)
    sys.stdout.write(rep.text())
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "cost.json"), "w") as fh:
            json.dump(rep.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            print("\n".join(preset_names()))
            return EXIT_OK
        handler = {"run": cmd_run, "check-orders": cmd_check_orders, "cost": cmd_cost}
        return handler[args.command](args)
    except ConfigError as exc:
        print(f"poemkit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"poemkit: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PoemError as exc:
        print(f"poemkit: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
