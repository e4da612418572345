# satrag
# See full license in LICENSE.txt.

import logging

import orca

from ...evaluate import harness

logger = logging.getLogger(__name__)


@orca.injectable()
def qa_file():
    # set by the command line
    return None


@orca.injectable()
def ablation_sweep():
    return False


@orca.step()
def evaluate_qa(app_config, corpus, sat_graph, query_providers, retriever, qa_file,
                ablation_sweep, output_dir):
    """
    Score the configured retrieval (or every ablation) over a QA set and write
    one report per configuration
    """
    if not qa_file:
        raise RuntimeError("evaluate_qa: no qa file injected")

    qa_set = harness.read_qa_set(qa_file)
    logger.info("Running evaluate_qa with %d questions" % len(qa_set))

    evaluator = harness.Evaluator(corpus, query_providers, sat_graph, retriever,
                                  app_config.passages_per_fact, app_config.prompt_budget,
                                  app_config.claim_threshold)
    cutoffs = app_config.cutoffs(qa_set)
    cfg = app_config.retrieval

    if ablation_sweep:
        labels = [(label, cfg.replace(**change)) for label, change in harness.ABLATIONS.items()]
    else:
        labels = [('eval', cfg)]

    reports = []
    for label, c in labels:
        report = evaluator.run(qa_set, c, cutoffs, app_config.forced_k, label)
        harness.write_report(report, output_dir)
        print("\n%s\n" % harness.format_report(report))
        reports.append(report)

    orca.add_injectable('metric_reports', reports)
