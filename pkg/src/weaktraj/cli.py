"""Command-line interface.

One subcommand per output product plus the acceptance runner and a browser
for the bundled scenarios:

    weaktraj classical     --config CFG --out DIR     classical guides as CSV
    weaktraj propagate     --config CFG --out DIR     density snapshots as CSV
    weaktraj weak-traj     --config CFG --out DIR     weak-value samples as CSV
    weaktraj average-traj  --config CFG --out DIR     backward streamlines
    weaktraj pointer       --config CFG --out DIR     pointer readout as JSON
    weaktraj validate [--out DIR] [--criteria 1,2]    acceptance checks
    weaktraj scenario list                            bundled scenario names
    weaktraj scenario describe NAME                   bundled scenario YAML

CFG is either a YAML file path or the name of a bundled scenario. Product
subcommands accept --seed (overrides the config seed) and --threads (caps the
BLAS/FFT worker count). Exit codes: 0 success, 2 configuration error, 3
numerical failure, 4 acceptance-check failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import __version__, scenarios, validation
from .errors import ConfigError, NumericalError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4

_PRODUCT_DEFAULTS = {
    "classical": {},
    "propagate": {"points": 81, "half_width": 4.0},
    "weak-traj": {},
    "average-traj": {"branch": "I", "offset": 0.05, "step": 1e-3},
    "pointer": {"shots": scenarios.DEFAULT_SHOTS},
}


def _load_config(spec: str) -> scenarios.ScenarioConfig:
    if os.path.exists(spec):
        return scenarios.load_config(spec)
    if spec in scenarios.bundled_scenarios():
        return scenarios.parse_config(scenarios.bundled_config_text(spec), spec)
    raise ConfigError("config", f"no such file or bundled scenario: {spec!r}; "
                      f"bundled: {', '.join(scenarios.bundled_scenarios())}")


def _run_product(product: str, args) -> int:
    config = _load_config(args.config)
    opts = dict(_PRODUCT_DEFAULTS[product])
    for name, configured in config.outputs:
        if name == product:
            opts = configured
            break
    config = dataclasses.replace(config, outputs=((product, opts),))
    result = scenarios.run(config, args.out, seed=args.seed,
                           threads=args.threads)
    for name in result.products:
        print(os.path.join(str(args.out), name))
    return EXIT_OK


def _cmd_validate(args) -> int:
    ids = None
    if args.criteria:
        try:
            ids = sorted({int(tok) for tok in args.criteria.split(",")})
        except ValueError:
            raise ConfigError("criteria", f"expected comma-separated integers, "
                              f"got {args.criteria!r}")
        unknown = [i for i in ids if i not in validation.CHECKS]
        if unknown:
            raise ConfigError("criteria", f"unknown criteria {unknown}; "
                              f"known: {sorted(validation.CHECKS)}")
    results = validation.run_acceptance(ids)
    print(validation.format_report(results))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "acceptance_report.json")
        with open(path, "w") as fh:
            json.dump([r.to_dict() for r in results], fh, indent=2,
                      sort_keys=True, default=_json_default)
            fh.write("\n")
        print(path)
    if any(r.passed is False for r in results):
        return EXIT_ACCEPTANCE
    return EXIT_OK


def _json_default(obj):
    import numpy as np
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _cmd_scenario(args) -> int:
    if args.action == "list":
        for name in scenarios.bundled_scenarios():
            config = scenarios.parse_config(scenarios.bundled_config_text(name),
                                            name)
            summary = " ".join(config.description.split())
            print(f"{name}: {summary}")
        return EXIT_OK
    text = scenarios.bundled_config_text(args.name)
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weaktraj",
        description="Weak trajectories of Gaussian wavepacket superpositions "
                    "in a time-dependent linear oscillator.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for product in _PRODUCT_DEFAULTS:
        p = sub.add_parser(product, help=f"run a scenario's {product} product")
        p.add_argument("--config", required=True,
                       help="YAML file path or bundled scenario name")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--threads", type=int, default=None,
                       help="cap the BLAS/FFT worker count")
        p.set_defaults(handler=lambda args, product=product:
                       _run_product(product, args))

    v = sub.add_parser("validate", help="run the acceptance checks")
    v.add_argument("--out", default=None,
                   help="directory for acceptance_report.json")
    v.add_argument("--criteria", default=None,
                   help="comma-separated check ids (default: all)")
    v.set_defaults(handler=_cmd_validate)

    s = sub.add_parser("scenario", help="browse the bundled scenarios")
    s_sub = s.add_subparsers(dest="action", required=True)
    s_list = s_sub.add_parser("list", help="list bundled scenarios")
    s_list.set_defaults(handler=_cmd_scenario)
    s_desc = s_sub.add_parser("describe", help="print a bundled scenario's YAML")
    s_desc.add_argument("name", choices=scenarios.bundled_scenarios())
    s_desc.set_defaults(handler=_cmd_scenario)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
