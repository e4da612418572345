# satrag
# See full license in LICENSE.txt.

import logging

import orca

from ...corpus import Corpus

logger = logging.getLogger(__name__)


@orca.injectable(cache=True)
def corpus(app_config):
    return Corpus.load(app_config.corpus_store_dir)


@orca.injectable(cache=True)
def providers(app_config):
    return app_config.make_providers()
