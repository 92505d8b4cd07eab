"""
opmult experiment runner

Run a named experiment from one or more JSON configs and write its report as JSON or CSV.
Exit code 0 if every criterion passes, 1 if any criterion fails, 2 on config or output errors.
"""
import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from itertools import repeat
from typing import List, Optional

from pydantic.fields import FieldInfo

from opmult.config import ReportFormat, Settings, get_settings, setting
from opmult.experiments import ConfigError, ExperimentError, parse_config, registry, run, schema
from opmult.experiments.common import ExperimentConfig
from opmult.report import Report, ReportError, emit_report

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def load_configs(name: str, paths: Optional[List[str]]) -> List[ExperimentConfig]:
    if not paths:
        return [parse_config({"experiment": name})]
    configs = [parse_config(path) for path in paths]
    for path, config in zip(paths, configs):
        if config.experiment != name:
            raise ConfigError(f"{path} configures {config.experiment}, not {name}")
    return configs


def execute(configs: List[ExperimentConfig], seed: Optional[int], parallel: int) -> List[Report]:
    """Run configs in order, or fanned out over worker processes; reports keep the config order"""
    if parallel > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(run, configs, repeat(seed)))
    return [run(config, seed) for config in configs]


def run_experiment(args) -> int:
    try:
        configs = load_configs(args.action, args.config)
    except ConfigError as e:
        logging.error(str(e))
        return EXIT_CONFIG
    try:
        reports = execute(configs, args.seed, args.parallel)
    except ExperimentError as e:
        logging.error(str(e))
        return EXIT_FAIL
    try:
        if args.out or len({c.out for c in configs}) == 1:
            fmt = args.format or configs[0].format or setting(None, "report_format")
            emit_report(reports, fmt, args.out or configs[0].out)
        else:
            for config, report in zip(configs, reports):
                emit_report(report, args.format or config.format or setting(None, "report_format"), config.out)
    except ReportError as e:
        logging.error(str(e))
        return EXIT_CONFIG
    return EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL


def print_schema(_args) -> int:
    print(json.dumps(schema(), indent=2, sort_keys=True))
    return EXIT_PASS


def _isenum(fieldinfo: FieldInfo) -> bool:
    try:
        return issubclass(fieldinfo.annotation, Enum)  # type: ignore
    except TypeError:
        return False


def _env_value(value) -> str:
    return value.value if isinstance(value, Enum) else str(value)


def create_env(args) -> int:
    if os.path.exists(args.path):
        logging.error(f"File {args.path} already exists, quitting")
        return EXIT_CONFIG
    prefix = Settings.model_config["env_prefix"]
    with open(args.path, "w") as f:
        for fieldname, fieldinfo in Settings.model_fields.items():
            if fieldname == "env_file":
                continue
            if doc := fieldinfo.description:
                f.write(f"# {doc}\n")
            if _isenum(fieldinfo):
                f.write("# Valid options:\n")
                for option in fieldinfo.annotation:  # type: ignore
                    doc = (option.__doc__ or "").replace("\n", " ")
                    f.write(f"# - {option.name}: {doc}\n")
            f.write(f"#{prefix}{fieldname}={_env_value(fieldinfo.default)}\n\n")
    os.chmod(args.path, 0o600)
    print(f"*** Created {args.path} ***")
    return EXIT_PASS


def show_config(_args) -> int:
    prefix = Settings.model_config["env_prefix"].upper()
    for fieldname, value in get_settings().model_dump().items():
        print(f"{prefix}{fieldname.upper()}={_env_value(value)}")
    return EXIT_PASS


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__, prog="opmult",
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="Log debug messages")
    subparsers = parser.add_subparsers(dest="action", title="action", help="Experiment or action to perform:",
                                       required=True)
    for experiment in registry:
        p = subparsers.add_parser(experiment.name, help=experiment.doc)
        p.add_argument("-c", "--config", action="append", help="JSON config file (repeatable)")
        p.add_argument("-o", "--out", help="Report path (default: the config's out, or stdout)")
        p.add_argument("-f", "--format", choices=[f.value for f in ReportFormat], help="Report format")
        p.add_argument("-s", "--seed", type=int, help="Seed overriding the config and settings")
        p.add_argument("-j", "--parallel", type=int, default=1, help="Worker processes for independent configs")
        p.set_defaults(func=run_experiment)

    p = subparsers.add_parser("schema", help="Print the JSON schema of all experiment configs")
    p.set_defaults(func=print_schema)

    p = subparsers.add_parser("create-env", help="Write a .env template with the documented defaults")
    p.add_argument("-p", "--path", default=".env", help="Location of the file")
    p.set_defaults(func=create_env)

    p = subparsers.add_parser("show-config", help="Print the effective settings")
    p.set_defaults(func=show_config)

    args = parser.parse_args(argv)

    logging.basicConfig(
        format="[%(levelname)-7s:%(name)-15s] %(message)s", level=logging.DEBUG if args.verbose else logging.INFO
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
