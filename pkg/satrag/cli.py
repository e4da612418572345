# satrag
# See full license in LICENSE.txt.

"""
satrag command line

    satrag [--config configs/settings.yaml] [--verbose] [--seed N] <command> ...

Commands: ingest, build, query, eval, gen-qa. Exit codes: 0 success, 1 input or
configuration error, 2 provider error, 3 graph validation failure.
"""

import argparse
import logging
import os
import sys

import orca

from . import defaults  # noqa: F401 registers injectables and steps
from . import tracing
from .config import read_settings
from .errors import ConfigError, SatragError
from .providers import Query
from .retrieval import MODES

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = os.path.join('configs', 'settings.yaml')

STEPS = {
    'ingest': 'ingest_corpus',
    'build': 'build_sat_graph',
    'query': 'answer_query',
    'eval': 'evaluate_qa',
    'gen-qa': 'generate_qa',
}


def _retrieval_flags(parser):
    parser.add_argument('--top-k', type=int, help="evidence tuples (or chunks) to return")
    parser.add_argument('--threshold', type=float, help="similarity threshold for hints")
    parser.add_argument('--radius', type=int, help="neighbor expansion radius")
    parser.add_argument('--no-sne', action='store_true', help="disable neighbor expansion")
    parser.add_argument('--no-fusion', action='store_true', help="disable passage fusion")
    parser.add_argument('--mode', choices=MODES, help="retrieval mode")


def build_parser():
    parser = argparse.ArgumentParser(prog='satrag', description=__doc__.strip().split('\n')[0])
    parser.add_argument('--config', default=DEFAULT_CONFIG, help="settings file")
    parser.add_argument('--verbose', action='store_true', help="trace diagnostics")
    parser.add_argument('--seed', type=int, help="dataset generation seed")

    sub = parser.add_subparsers(dest='command')
    sub.required = True

    p = sub.add_parser('ingest', help="parse documents into the corpus store")
    p.add_argument('input_dir', nargs='?', help="directory of .md/.json documents")

    sub.add_parser('build', help="build and persist the graph")

    p = sub.add_parser('query', help="answer one question")
    p.add_argument('question')
    p.add_argument('--flag', type=int, choices=[0, 1], default=0,
                   help="1 when the question needs surrounding text")
    _retrieval_flags(p)

    p = sub.add_parser('eval', help="score a QA set")
    p.add_argument('qa_file')
    p.add_argument('--cutoffs', help="comma separated k cutoffs, e.g. 1,3,5,10")
    p.add_argument('--forced-k', type=int, help="evaluate the natural column at this k")
    p.add_argument('--ablation', action='store_true',
                   help="run full, no-sat, no-sne and no-fusion")
    _retrieval_flags(p)

    p = sub.add_parser('gen-qa', help="generate a synthetic QA set")
    p.add_argument('output_dir', nargs='?', help="where the QA files go")
    p.add_argument('--n-pairs', type=int)
    p.add_argument('--associations', help="comma separated association strategies")
    p.add_argument('--degree', type=int, help="cells per pair")
    p.add_argument('--window', type=int, help="passages per table for contextual items")
    p.add_argument('--paraphrase', action='store_true',
                   help="rewrite passages that quote gold values")
    p.add_argument('--enrich', action='store_true', help="ask for each document's entity")

    return parser


def _parse_cutoffs(text):
    try:
        return [int(k) for k in text.split(',') if k.strip()]
    except ValueError:
        raise ConfigError("cutoffs must be comma separated integers, not '%s'" % text)


def overrides_from_args(args):
    """settings overrides for every flag that was given"""
    overrides = {}
    if args.verbose:
        overrides['verbose'] = True

    retrieval = {}
    for flag, key in (('top_k', 'top_k'), ('threshold', 'similarity_threshold'),
                      ('radius', 'expansion_radius'), ('mode', 'mode')):
        if getattr(args, flag, None) is not None:
            retrieval[key] = getattr(args, flag)
    if getattr(args, 'no_sne', False):
        retrieval['enable_sne'] = False
    if getattr(args, 'no_fusion', False):
        retrieval['enable_fusion'] = False
    if retrieval:
        overrides['retrieval'] = retrieval

    evaluation = {}
    if getattr(args, 'cutoffs', None):
        cutoffs = _parse_cutoffs(args.cutoffs)
        evaluation.update(cutoffs_f0=cutoffs, cutoffs_f1=cutoffs)
    if getattr(args, 'forced_k', None) is not None:
        evaluation['forced_k'] = args.forced_k
    if evaluation:
        overrides['eval'] = evaluation

    generation = {}
    if args.seed is not None:
        generation['seed'] = args.seed
    for flag in ('n_pairs', 'degree', 'window'):
        if getattr(args, flag, None) is not None:
            generation[flag] = getattr(args, flag)
    if getattr(args, 'associations', None):
        generation['associations'] = [a.strip() for a in args.associations.split(',')]
    for flag in ('paraphrase', 'enrich'):
        if getattr(args, flag, False):
            generation[flag] = True
    if generation:
        overrides['dataset_gen'] = generation

    if getattr(args, 'input_dir', None):
        overrides['corpus_input_dir'] = args.input_dir

    return overrides


def run(args):
    orca.add_injectable('configs_dir', os.path.dirname(os.path.abspath(args.config)))
    orca.add_injectable('settings', read_settings(args.config))
    orca.add_injectable('overrides', overrides_from_args(args))
    orca.clear_cache()

    app_config = orca.get_injectable('app_config')
    if not os.path.isdir(app_config.output_dir):
        os.makedirs(app_config.output_dir)
    orca.add_injectable('output_dir', app_config.output_dir)
    orca.add_injectable('verbose', app_config.verbose)

    tracing.config_logger()
    if app_config.verbose:
        tracing.clear_traces(orca.get_injectable('output_dir'))
        logger.info("effective configuration:\n%s" % app_config.dump())

    if args.command == 'query':
        orca.add_injectable('question', Query(args.question, args.flag))
    elif args.command == 'eval':
        orca.add_injectable('qa_file', args.qa_file)
        orca.add_injectable('ablation_sweep', args.ablation)
    elif args.command == 'gen-qa':
        orca.add_injectable('qa_output_dir',
                            args.output_dir or orca.get_injectable('output_dir'))

    orca.run([STEPS[args.command]])


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        run(args)
    except SatragError as e:
        logger.error("%s: %s" % (type(e).__name__, e))
        sys.stderr.write("satrag %s: %s: %s\n" % (args.command, type(e).__name__, e))
        return e.exit_code
    except RuntimeError as e:
        sys.stderr.write("satrag %s: %s\n" % (args.command, e))
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
