# satrag
# See full license in LICENSE.txt.

import os
import logging

import orca

from ... import tracing
from ...corpus import Corpus
from ...errors import InputError, MalformedInput
from ...ingest import FILE_FORMATS, read_document

logger = logging.getLogger(__name__)


def input_files(input_dir):
    if not os.path.isdir(input_dir):
        logger.error("input directory not found: %s" % input_dir)
        raise MalformedInput("input directory not found", source=input_dir)
    return [os.path.join(input_dir, f) for f in sorted(os.listdir(input_dir))
            if os.path.splitext(f)[1].lower() in FILE_FORMATS]


@orca.step()
def ingest_corpus(app_config, input_dir):
    """
    Parse every document in the input directory and write the corpus store

    Documents that fail to parse are reported and skipped; the rest are still
    written, then the first failure is raised.
    """
    t0 = tracing.print_elapsed_time()

    files = input_files(input_dir)
    if not files:
        logger.error("no inputs in %s" % input_dir)
        raise MalformedInput("no inputs", source=input_dir)

    logger.info("Running ingest_corpus with %d files" % len(files))

    documents, failures = [], []
    for path in files:
        try:
            documents.append(read_document(path))
        except InputError as e:
            logger.error("%s" % e)
            failures.append(e)

    corpus = Corpus.from_documents(documents, app_config.snippet_budget)
    corpus.save(app_config.corpus_store_dir)

    summary = corpus.summary()
    print("\ningested %s documents (%s failed)\n%s\n" %
          (len(documents), len(failures), summary.to_string()))
    orca.add_injectable('ingest_summary', summary)

    tracing.print_elapsed_time("ingest_corpus", t0)

    if failures:
        raise failures[0]
