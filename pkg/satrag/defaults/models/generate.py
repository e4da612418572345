# satrag
# See full license in LICENSE.txt.

import os
import logging

import orca
import yaml

from ...dataset_gen import generate as gen
from ...errors import ConfigError, InsufficientCandidates
from ...evaluate.harness import write_qa_set

logger = logging.getLogger(__name__)

QA_F0_FILE_NAME = 'qa_f0.jsonl'
QA_F1_FILE_NAME = 'qa_f1.jsonl'
REPORT_FILE_NAME = 'generation_report.yaml'


@orca.injectable()
def qa_output_dir(output_dir):
    return output_dir


@orca.step()
def generate_qa(app_config, corpus, providers, qa_output_dir):
    """
    Generate table-only and contextual QA files from the corpus

    Fails when no pair is accepted.
    """
    if providers.completer is None:
        raise ConfigError("generate_qa needs a completion provider")

    logger.info("Running generate_qa with %d cell groups" % len(corpus.cell_groups))

    items, report = gen.generate_qa(corpus, providers.completer, app_config.generation,
                                    providers.subject_extractor)

    if not os.path.isdir(qa_output_dir):
        os.makedirs(qa_output_dir)
    write_qa_set(os.path.join(qa_output_dir, QA_F0_FILE_NAME), [i for i in items if i.flag == 0])
    write_qa_set(os.path.join(qa_output_dir, QA_F1_FILE_NAME), [i for i in items if i.flag == 1])
    with open(os.path.join(qa_output_dir, REPORT_FILE_NAME), 'w') as f:
        yaml.safe_dump(report.to_dict(), f, default_flow_style=False)

    if report.paraphrased:
        corpus.save(app_config.corpus_store_dir)

    print("\naccepted %s, rejected %s\n%s\n" %
          (report.accepted, report.rejected, report.per_association.to_string()))
    orca.add_injectable('generation_report', report)

    if not report.accepted:
        logger.error("no pair was accepted: %s" % report.to_dict()['reasons'])
        raise InsufficientCandidates("no pair was accepted, see %s" % REPORT_FILE_NAME)
