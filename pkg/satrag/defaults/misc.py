# satrag
# See full license in LICENSE.txt.

import os
import warnings
import logging

import orca
import pandas as pd

from ..config import AppConfig, SETTINGS_FILE_NAME, read_settings

warnings.filterwarnings('ignore', category=pd.io.pytables.PerformanceWarning)

logger = logging.getLogger(__name__)


@orca.injectable()
def configs_dir():
    if not os.path.exists('configs'):
        raise RuntimeError("configs_dir: directory does not exist")
    return 'configs'


@orca.injectable()
def settings(configs_dir):
    return read_settings(os.path.join(configs_dir, SETTINGS_FILE_NAME))


@orca.injectable()
def overrides():
    # replaced by the command line
    return {}


@orca.injectable(cache=True)
def app_config(settings, overrides):
    return AppConfig.from_settings(settings, overrides)


@orca.injectable()
def output_dir(app_config):
    if not os.path.exists(app_config.output_dir):
        os.makedirs(app_config.output_dir)
    return app_config.output_dir


@orca.injectable(cache=True)
def verbose(app_config):
    return app_config.verbose


@orca.injectable()
def input_dir(app_config):
    return app_config.corpus_input_dir
