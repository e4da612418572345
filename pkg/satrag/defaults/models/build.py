# satrag
# See full license in LICENSE.txt.

import logging

import orca
import pandas as pd

from ... import tracing
from ...graph import sat
from ...graph.store import save_graph

logger = logging.getLogger(__name__)


@orca.step()
def build_sat_graph(app_config, corpus, providers):
    """
    Lift the corpus cell groups into a graph, validate it and persist it

    A graph that fails validation is not written.
    """
    t0 = tracing.print_elapsed_time()
    logger.info("Running build_sat_graph with %d cell groups" % len(corpus.cell_groups))

    g, rejected = sat.build_sat_graph(corpus.cell_groups, providers.subject_extractor)

    if rejected:
        tracing.print_counts('rejected cells by document', [c.split('/')[0] for c, _ in rejected])

    save_graph(g, app_config.index_path, corpus.corpus_hash())

    counts = pd.Series(g.counts())
    print("\ngraph %s\n%s\n" % (app_config.index_path, counts.to_string()))

    orca.add_injectable('graph_counts', counts)

    tracing.print_elapsed_time("build_sat_graph", t0)
    logger.info(tracing.memory_info())
