"""
Command line entry point

    stentpred synth    --n 120 --seed 7 --out data/
    stentpred extract  --data data/ --mode segmental --out features/
    stentpred train    --data data/ --model-file model.npz --out run/
    stentpred predict  --model-file model.npz --pullback data/L0000
    stentpred evaluate --mode segmental --segment-length 31 --features cle \\
                       --model gpr --seed 7 --out report/
    stentpred evaluate --seeds 1,2,3,4,5 --out report/
    stentpred sweep    --data data/ --mode segmental --seeds 1,2,3 --out sweep/
    stentpred baseline --data data/ --out baseline/

Exit status is 0 on success, 1 on usage errors and 2 on data errors.
"""

import argparse
import dataclasses
import json
import logging
import os
import sys

from stentpred.baseline.fujino import score_table
from stentpred.data.dataset import load_records
from stentpred.data.pullback import load_pullback
from stentpred.data.synth import SynthConfig, generate_dataset, write_dataset
from stentpred.evaluate.report import (plot_sei_curve, write_report, write_seeds,
                                       write_sweep)
from stentpred.evaluate.runner import (ExperimentConfig, fit_pipeline,
                                       load_pipeline, predict_lesion,
                                       run_experiment, run_seeds, save_pipeline,
                                       sweep)
from stentpred.expansion import DEFAULT_THRESHOLD
from stentpred.features.assemble import assemble, extract_lesion
from stentpred.features.schema import MODES, FEATURE_GROUPS
from stentpred.learn.model import KINDS
from stentpred.util.console import setup_logging
from stentpred.util.misc import StentpredError, jsonable, write_to_file


__all__ = ["SEGMENT_LENGTHS", "RunConfig", "run", "main"]


logger = logging.getLogger(__name__)

SEGMENT_LENGTHS = (1, 3, 7, 15, 31, 63)
SUBCOMMANDS = ("synth", "extract", "train", "predict", "evaluate", "sweep",
               "baseline")
CONFIG_ECHO = "config_echo.json"


class UsageError(StentpredError):
    pass


@dataclasses.dataclass(frozen=True)
class RunConfig:
    subcommand: str
    data: str = None
    out: str = None
    mode: str = "segmental"
    segment_length: int = 31
    feature_group: str = "cle"
    model_kind: str = "gpr"
    include_phenotype: bool = False
    seed: int = 0
    seeds: tuple = None
    sweep_lengths: tuple = None
    sweep_groups: tuple = None
    sweep_kinds: tuple = None
    threshold: float = DEFAULT_THRESHOLD
    n: int = 120
    model_file: str = None
    pullback: str = None
    pixel_spacing: float = None
    image_size: int = None
    noise_fraction: float = None
    phenotype_effect: tuple = None
    verbose: bool = False

    def check(self):
        if self.segment_length not in SEGMENT_LENGTHS:
            raise UsageError("segment length must be one of {}".format(
                ", ".join(str(s) for s in SEGMENT_LENGTHS)))
        if not 0 < self.threshold < 100:
            raise UsageError("threshold must lie in (0, 100)")
        if self.n < 1:
            raise UsageError("--n must be positive")
        if self.seeds is not None and len(set(self.seeds)) != len(self.seeds):
            raise UsageError("--seeds must not repeat a seed")
        required = dict(synth=("out",), extract=("data", "out"),
                        train=("data", "model_file"),
                        predict=("model_file", "pullback"),
                        evaluate=("out",), sweep=("out",), baseline=("out",))
        for name in required[self.subcommand]:
            if getattr(self, name) is None:
                raise UsageError("{} needs --{}".format(
                    self.subcommand, name.replace("_", "-")))

    def to_dict(self):
        return dataclasses.asdict(self)

    def synth_config(self):
        changes = dict(n_lesions=self.n, seed=self.seed)
        if self.pixel_spacing is not None:
            changes["pixel_spacing_mm"] = self.pixel_spacing
        if self.image_size is not None:
            changes["image_size"] = self.image_size
        if self.noise_fraction is not None:
            changes["noise_fraction"] = self.noise_fraction
        if self.phenotype_effect is not None:
            changes["phenotype_effect"] = self.phenotype_effect
        return SynthConfig(**changes)

    def experiment_config(self):
        return ExperimentConfig(
            mode=self.mode,
            segment_length=self.segment_length,
            feature_group=self.feature_group,
            model_kind=self.model_kind,
            include_phenotype=self.include_phenotype,
            seed=self.seed,
            threshold=self.threshold)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError("{}: {}".format(self.prog, message))


def _effect(text):
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers")
    return values


def _seeds(text):
    try:
        values = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers")
    return values


def _choices(allowed):
    def check(text):
        values = tuple(text.split(","))
        unknown = [v for v in values if v not in allowed]
        if unknown:
            raise argparse.ArgumentTypeError("unknown {}; choose from {}".format(
                ", ".join(unknown), ", ".join(allowed)))
        return values
    return check


def _parser():
    parser = _Parser(prog="stentpred",
                     description="Stent under-expansion prediction from "
                                 "pre-stent IVOCT pullbacks")
    parser.add_argument("--verbose", action="store_true",
                        help="log debug messages")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)

    def add(name, summary):
        p = sub.add_parser(name, help=summary)
        p.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS)
        return p

    def data_flags(p, synthetic):
        p.add_argument("--data", help="dataset directory"
                       + (" (default: synthetic benchmark)" if synthetic else ""))
        if synthetic:
            synth_flags(p)

    def synth_flags(p):
        p.add_argument("--n", type=int, default=120, help="number of lesions")
        p.add_argument("--pixel-spacing", type=float, help="mm per pixel")
        p.add_argument("--image-size", type=int, help="frame size in pixels")
        p.add_argument("--noise-fraction", type=float,
                       help="area noise SD as a fraction of the reference area")
        p.add_argument("--phenotype-effect", type=_effect,
                       help="resistance multipliers for nodule,protrusion,sheet")

    def feature_flags(p):
        p.add_argument("--mode", choices=MODES, default="segmental")
        p.add_argument("--segment-length", type=int, default=31,
                       choices=SEGMENT_LENGTHS)
        p.add_argument("--include-phenotype", action="store_true")

    def model_flags(p):
        p.add_argument("--features", dest="feature_group", choices=FEATURE_GROUPS,
                       default="cle")
        p.add_argument("--model", dest="model_kind", choices=KINDS, default="gpr")
        p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)

    p = add("synth", "generate a synthetic dataset")
    synth_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = add("extract", "write the feature matrix as CSV")
    data_flags(p, False)
    feature_flags(p)
    p.add_argument("--out")

    p = add("train", "fit and save a prediction pipeline")
    data_flags(p, False)
    feature_flags(p)
    model_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model-file")
    p.add_argument("--out")

    p = add("predict", "predict the SEI curve of a pre-stent pullback")
    p.add_argument("--model-file")
    p.add_argument("--pullback", help="pre-stent pullback directory")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--out")

    p = add("evaluate", "run the cross-validated experiment")
    data_flags(p, True)
    feature_flags(p)
    model_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=_seeds,
                   help="comma-separated seeds; reports mean and SD across them")
    p.add_argument("--out")

    p = add("sweep", "compare analysis modes, feature groups and models")
    data_flags(p, True)
    feature_flags(p)
    model_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=_seeds)
    p.add_argument("--lengths", dest="sweep_lengths",
                   type=_choices([str(s) for s in SEGMENT_LENGTHS]),
                   help="segmental window lengths (default: 3,7,15,31,63)")
    p.add_argument("--groups", dest="sweep_groups", type=_choices(FEATURE_GROUPS),
                   help="feature groups of the group by model table")
    p.add_argument("--kinds", dest="sweep_kinds", type=_choices(KINDS),
                   help="model kinds of the group by model table")
    p.add_argument("--out")

    p = add("baseline", "tabulate the rule-based calcium score")
    data_flags(p, True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--out")
    return parser


def parse(argv):
    args = vars(_parser().parse_args(argv))
    if args.get("subcommand") is None:
        raise UsageError("stentpred: a subcommand is required ({})".format(
            ", ".join(SUBCOMMANDS)))
    fields = set(f.name for f in dataclasses.fields(RunConfig))
    config = RunConfig(**dict((k, v) for k, v in args.items() if k in fields))
    config.check()
    return config


def _echo(config, argv, out):
    """Write the block needed to re-run this invocation."""
    if out is None:
        return
    os.makedirs(out, exist_ok=True)
    echo = dict(config_echo=dict(argv=list(argv), run_config=config.to_dict()))
    write_to_file(os.path.join(out, CONFIG_ECHO),
                  json.dumps(jsonable(echo), sort_keys=True, indent=2) + "\n")


def _records(config):
    if config.data is not None:
        return load_records(config.data)
    logger.info("generating %d synthetic lesions, seed %d", config.n, config.seed)
    return [extract_lesion(lesion.pullback, lesion.targets, lesion.lesion_id)
            for lesion in generate_dataset(config.synth_config())]


def _synth(config):
    write_dataset(generate_dataset(config.synth_config()), config.out)


def _extract(config):
    records = load_records(config.data)
    X = assemble(config.mode, records, config.segment_length,
                 config.include_phenotype,
                 require_targets=all(r.targets is not None for r in records))
    os.makedirs(config.out, exist_ok=True)
    write_to_file(os.path.join(config.out, "features.csv"), X.to_csv())
    print("{} rows x {} columns".format(*X.values.shape))


def _train(config):
    records = load_records(config.data)
    experiment = config.experiment_config()
    experiment.check()
    X = assemble(config.mode, records, config.segment_length,
                 config.include_phenotype)
    pipeline = fit_pipeline(X, experiment, config.seed)
    pipeline.model.metadata["config_echo"] = config.to_dict()
    save_pipeline(pipeline, config.model_file)
    print("model={} columns={} training_rmse={:.4f}".format(
        pipeline.model.kind, len(pipeline.columns), pipeline.model.training_rmse))


def _predict(config):
    pipeline = load_pipeline(config.model_file)
    pipeline.threshold = config.threshold
    record = extract_lesion(load_pullback(config.pullback))
    expansion = predict_lesion(pipeline, record)
    if config.out is not None:
        expansion.write(os.path.join(config.out, "sei.csv"),
                        os.path.join(config.out, "summary.csv"))
        plot_sei_curve(expansion, os.path.join(config.out, "sei.svg"),
                       config.threshold, record.lesion_id)
    print("msei={:.2f} msei_frame={} label={}".format(
        expansion.msei, expansion.msei_frame, expansion.label))


def _evaluate(config):
    if config.seeds is not None:
        report = run_seeds(config.experiment_config(), _records(config),
                           config.seeds)
        write_seeds(report, config.out)
        summary = report["summary"]
        print("rmse={:.4f}+-{:.4f} r={:.4f}+-{:.4f} auc={:.4f}+-{:.4f}".format(
            *(summary["heldout_rmse_mm2"] + summary["heldout_pearson_r"]
              + summary["heldout_auc"])))
        return
    report = run_experiment(config.experiment_config(), _records(config))
    write_report(report, config.out)
    heldout = report["heldout"]
    print("rmse={:.4f} r={:.4f} auc={:.4f}".format(
        heldout["regression"]["rmse_mm2"], heldout["regression"]["pearson_r"],
        heldout["classification"]["auc"]))


def _sweep(config):
    limits = dict()
    if config.sweep_lengths is not None:
        limits["segment_lengths"] = [int(s) for s in config.sweep_lengths]
    if config.sweep_groups is not None:
        limits["groups"] = config.sweep_groups
    if config.sweep_kinds is not None:
        limits["kinds"] = config.sweep_kinds
    result = sweep(config.experiment_config(), _records(config), config.seeds,
                   **limits)
    write_sweep(result, config.out)
    for row in result["modes"]:
        print("{} {} auc={:.4f}".format(row["mode"], row["segment_length"] or "-",
                                        row["cv_auc"][0]))


def _baseline(config):
    table = score_table(_records(config), threshold=config.threshold)
    write_to_file(os.path.join(config.out, "fujino.csv"), table)
    sys.stdout.write(table)


_handlers = dict(synth=_synth, extract=_extract, train=_train, predict=_predict,
                 evaluate=_evaluate, sweep=_sweep, baseline=_baseline)


def run(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    try:
        config = parse(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    setup_logging(config.verbose)
    try:
        _echo(config, argv, config.out)
        _handlers[config.subcommand](config)
    except StentpredError as e:
        logger.error("%s", e)
        return 2
    except OSError as e:
        logger.error("%s", e)
        return 2
    return 0


def main():
    sys.exit(run())
