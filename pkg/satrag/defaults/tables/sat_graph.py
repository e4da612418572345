# satrag
# See full license in LICENSE.txt.

import logging

import orca

from ...graph.store import load_graph, read_header
from ...retrieval import Retriever

logger = logging.getLogger(__name__)


@orca.injectable(cache=True)
def sat_graph(app_config, corpus):
    header = read_header(app_config.index_path)
    if header.get('corpus_hash') != corpus.corpus_hash():
        logger.warning("graph %s was built from a different corpus" % app_config.index_path)
    return load_graph(app_config.index_path)


@orca.injectable(cache=True)
def query_providers(app_config, sat_graph):
    # subject labels of the graph are the analyzer's gazetteer
    return app_config.make_providers(gazetteer=sorted(set(
        n.label for n in sat_graph.subjects.values())))


@orca.injectable(cache=True)
def retriever(sat_graph, query_providers, corpus):
    return Retriever(sat_graph, query_providers, corpus)
