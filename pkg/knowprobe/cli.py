# -*- coding: utf-8 -*-
"""Command-line entry point: fixture, calibrate, classify, evaluate, report."""
import argparse
import json
import logging
import os
import sys
from timeit import default_timer as timer

from .calibration import format_ks, plot_ecdfs
from .config import load_config, parse_overrides
from .data import (SCHEMA, load_dataset, load_outcomes, load_thresholds, save_outcomes,
                   save_thresholds, select_split, write_jsonl)
from .errors import ConfigError, KnowProbeError
from .fixture import write_fixture
from .model_adapter import build_adapter
from .pipeline import DETECTORS, calibrate, classify_all, evaluate
from .tagging import build_tagger
from .toy import ToyWorld
from .utils import setup_logging

logger = logging.getLogger('knowprobe')


def load_args(argv=None):
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, default=None,
                        help='YAML configuration file')
    common.add_argument('--set', dest='overrides', action='append', default=[],
                        metavar='SECTION.KEY=VALUE', help='override one config key')
    common.add_argument('--outdir', type=str, default=None,
                        help='output directory (overrides output.dir)')
    common.add_argument('--log-level', type=str, default='INFO',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    common.add_argument('--quiet', action='store_true', help='hide progress bars')

    parser = argparse.ArgumentParser(
        prog='knowprobe',
        description='Hallucination reasoning: aligned, misaligned or fabricated',
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    subparsers = parser.add_subparsers(dest='command', required=True)

    p = subparsers.add_parser('fixture', parents=[common],
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                              help='write the synthetic toy dataset and its lexicon')
    p.add_argument('--seed', type=int, default=0, help='random seed of the fixture')
    p.add_argument('--n-per-class', type=int, default=240)
    p.add_argument('--validation-fraction', type=float, default=0.5)
    p.set_defaults(func=run_fixture)

    p = subparsers.add_parser('calibrate', parents=[common],
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                              help='calibrate tau and theta on labeled data')
    p.add_argument('--dataset', type=str, required=True)
    p.add_argument('--split', type=str, default='validation',
                   choices=['validation', 'test', 'all'])
    p.set_defaults(func=run_calibrate)

    p = subparsers.add_parser('classify', parents=[common],
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                              help='classify every example of a dataset')
    p.add_argument('--dataset', type=str, required=True)
    p.add_argument('--split', type=str, default='test',
                   choices=['validation', 'test', 'all'])
    p.add_argument('--thresholds', type=str, default=None,
                   help='thresholds file written by calibrate')
    p.add_argument('--detector', choices=DETECTORS, default='two-stage')
    p.set_defaults(func=run_classify)

    p = subparsers.add_parser('evaluate', parents=[common],
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                              help='confusion matrices and class-wise accuracy')
    p.add_argument('--dataset', type=str, required=True)
    p.add_argument('--split', type=str, default='test',
                   choices=['validation', 'test', 'all'])
    p.add_argument('--outcomes', type=str, default=None,
                   help='outcomes file (default: <outdir>/outcomes.jsonl)')
    p.set_defaults(func=run_evaluate)

    p = subparsers.add_parser('report', parents=[common],
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                              help='print an evaluation report')
    p.add_argument('--evaluation', type=str, default=None,
                   help='evaluation file (default: <outdir>/evaluation.json)')
    p.add_argument('--format', choices=['json', 'csv'], default='json')
    p.set_defaults(func=run_report)

    return parser.parse_args(argv)


def _config(args):
    overrides = parse_overrides(args.overrides)
    if args.outdir is not None:
        overrides['output.dir'] = args.outdir
    return load_config(args.config, overrides)


def _outdir(config):
    outdir = config.output.dir
    os.makedirs(outdir, exist_ok=True)
    return outdir


def _backend(config):
    adapter = build_adapter(config.model)
    tagger = build_tagger(config.tagger, world=getattr(adapter, 'world', None))
    return adapter, tagger


def run_fixture(args, config):
    outdir = _outdir(config)
    world = ToyWorld(seed=config.model.world_seed)
    dataset_path, lexicon_path = write_fixture(outdir, args.seed, args.n_per_class,
                                               args.validation_fraction, world)
    print(dataset_path)
    print(lexicon_path)


def run_calibrate(args, config):
    tic = timer()
    outdir = _outdir(config)
    examples = select_split(load_dataset(args.dataset), args.split)
    adapter, tagger = _backend(config)
    calibration = calibrate(examples, adapter, tagger, config.probe.to_probe_config(),
                            config.alignment.to_alignment_config(), progress=not args.quiet)

    fabricated, other = calibration.ecdfs()
    fabricated.to_frame().to_csv(os.path.join(outdir, 'ecdf_fabricated.csv'), index=False)
    other.to_frame().to_csv(os.path.join(outdir, 'ecdf_other.csv'), index=False)
    plot_ecdfs(fabricated, other, calibration.tau, os.path.join(outdir, 'ecdf.png'))
    write_jsonl(os.path.join(outdir, 'calibration_scores.jsonl'),
                {'schema': SCHEMA, 'kind': 'calibration_scores', 'config': config.to_dict()},
                calibration.records)
    save_thresholds(os.path.join(outdir, 'thresholds.json'), calibration.tau,
                    calibration.theta, calibration.theta_standalone,
                    calibration.result.to_dict(), config.to_dict(), total_time=timer() - tic)
    logger.info("KS statistic %s", format_ks(calibration.result))
    print(json.dumps(dict(calibration.result.to_dict(), theta=calibration.theta,
                          theta_standalone=calibration.theta_standalone), sort_keys=True))


def _thresholds(args, config):
    if args.thresholds is not None:
        payload = load_thresholds(args.thresholds)
        tau, theta = payload['tau'], payload['theta']
        standalone = payload.get('theta_standalone')
    else:
        tau, theta, standalone = config.thresholds.tau, config.thresholds.theta, None
    if args.detector == 'alignment-only':
        theta = theta if standalone is None else standalone
        if theta is None:
            raise ConfigError("no calibrated theta: run calibrate and pass --thresholds")
        return None, theta
    if tau is None or theta is None:
        raise ConfigError("no calibrated thresholds: run calibrate and pass --thresholds, "
                          "or set thresholds.tau and thresholds.theta")
    return tau, theta


def run_classify(args, config):
    tau, theta = _thresholds(args, config)
    outdir = _outdir(config)
    examples = select_split(load_dataset(args.dataset), args.split)
    adapter, tagger = _backend(config)
    outcomes = classify_all(examples, adapter, tau, config.alignment.to_alignment_config(theta),
                            tagger, config.probe.to_probe_config(), args.detector,
                            progress=not args.quiet)
    path = os.path.join(outdir, 'outcomes.jsonl')
    save_outcomes(path, outcomes, config.to_dict(),
                  {'tau': tau, 'theta': theta, 'detector': args.detector})
    logger.info("wrote %d outcomes to %s", len(outcomes), path)
    print(path)


def run_evaluate(args, config):
    tic = timer()
    outdir = _outdir(config)
    examples = select_split(load_dataset(args.dataset), args.split)
    path = args.outcomes or os.path.join(outdir, 'outcomes.jsonl')
    header, outcomes = load_outcomes(path)
    matrix = evaluate(examples, outcomes)
    matrix.percentages_frame().to_csv(os.path.join(outdir, 'confusion.csv'))
    matrix.counts_frame().to_csv(os.path.join(outdir, 'confusion_counts.csv'))
    matrix.binary_frame().to_csv(os.path.join(outdir, 'binary_confusion.csv'))
    matrix.summary_frame().to_csv(os.path.join(outdir, 'summary.csv'))
    report = dict(matrix.to_dict(), schema=SCHEMA, config=header.get('config'),
                  seeds=header.get('seeds'), thresholds=header.get('thresholds'),
                  total_time=timer() - tic)
    with open(os.path.join(outdir, 'evaluation.json'), 'w', encoding='utf-8') as handle:
        json.dump(report, handle, indent=2, sort_keys=True)
        handle.write('\n')
    print(matrix.summary_frame().round(2).to_string())


def run_report(args, config):
    path = args.evaluation or os.path.join(config.output.dir, 'evaluation.json')
    if not os.path.isfile(path):
        raise FileNotFoundError("no such evaluation file: {}".format(path))
    with open(path, encoding='utf-8') as handle:
        report = json.load(handle)
    if args.format == 'json':
        print(json.dumps(report, indent=2, sort_keys=True))
        return
    labels = report['labels']
    print('predicted,' + ','.join(labels))
    for label, row in zip(labels, report['column_percentages']):
        print(label + ',' + ','.join('{:.2f}'.format(v) for v in row))
    accuracy = report['class_accuracy']
    print('accuracy,' + ','.join('{:.2f}'.format(accuracy[label]) for label in labels)
          + ',{:.2f}'.format(report['overall_accuracy']))


def main(argv=None):
    try:
        args = load_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    setup_logging(args.log_level)
    start_time = timer()
    try:
        config = _config(args)
        args.func(args, config)
    except (KnowProbeError, FileNotFoundError) as e:
        print('knowprobe: error: {}'.format(e), file=sys.stderr)
        return 2
    total_time = timer() - start_time
    logger.info("%s finished in %.2fs", args.command, total_time)
    return 0


if __name__ == "__main__":
    sys.exit(main())
