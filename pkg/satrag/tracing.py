# satrag
# See full license in LICENSE.txt.

"""
Logging setup and per-query diagnostics

Retrieval, fusion and evaluation hand their per-query diagnostics to
trace_records. When the verbose injectable is set they go to the
satrag.trace logger and are appended to <output_dir>/<label>.csv;
otherwise they are dropped.
"""

import logging
import logging.config
import os
import sys
import time

import orca
import pandas as pd
import psutil
import yaml

SATRAG_LOGGER = 'satrag'
TRACE_LOGGER = 'satrag.trace'
TRACE_FILE_SUFFIX = '.csv'
LOGGING_CONF_FILE_NAME = 'logging.yaml'

logger = logging.getLogger(__name__)
trace_logger = logging.getLogger(TRACE_LOGGER)


def trace_enabled():
    try:
        return bool(orca.get_injectable('verbose'))
    except (KeyError, RuntimeError):
        # no pipeline configured
        return False


def extend_trace_label(trace_label, extension):
    """'retrieval' + 'forward' -> 'retrieval.forward'; no label stays no label"""
    return "%s.%s" % (trace_label, extension) if trace_label else trace_label


def print_elapsed_time(msg=None, t0=None):
    """
    Returns the current time; with msg, also logs the time since t0

    Usage: t0 = print_elapsed_time() ... print_elapsed_time("step", t0)
    """
    now = time.time()
    if msg:
        seconds = now - (t0 or now)
        logger.info("Time to execute %s : %s seconds (%s minutes)" %
                    (msg, round(seconds, 3), round(seconds / 60.0)))
    return now


def memory_info():
    rss = psutil.Process(os.getpid()).memory_info().rss
    return "memory_info: %s MB (%s GB)" % (rss // 2 ** 20, round(rss / 2.0 ** 30, 2))


def log_file_path(name):
    """
    Path of name inside the output_dir injectable

    logging.yaml refers to it to place the log files:

        filename: !!python/object/apply:satrag.tracing.log_file_path ['satrag.log']
    """
    return os.path.join(orca.get_injectable('output_dir'), name)


def clear_traces(output_dir):
    """remove the trace csv files of an earlier verbose run from output_dir"""
    for name in os.listdir(output_dir):
        path = os.path.join(output_dir, name)
        if not name.endswith(TRACE_FILE_SUFFIX) or not os.path.isfile(path):
            continue
        try:
            os.unlink(path)
        except OSError as e:
            logger.warning("could not delete %s: %s" % (path, e))


def _logging_config_file(custom_config_file, basic):
    if custom_config_file and os.path.isfile(custom_config_file):
        return custom_config_file
    if basic:
        return None
    path = os.path.join(orca.get_injectable('configs_dir'), LOGGING_CONF_FILE_NAME)
    return path if os.path.isfile(path) else None


def config_logger(custom_config_file=None, basic=False):
    """
    Configure logging from a yaml file with a top-level 'logging' key

    Parameters
    ----------
    custom_config_file : str, optional
        used when it exists; otherwise configs_dir/logging.yaml is looked up
    basic : bool
        skip the configs_dir lookup

    Without any file, logging.basicConfig at INFO to stdout is used.
    """
    config_file = _logging_config_file(custom_config_file, basic)

    if config_file:
        with open(config_file) as f:
            # python tags resolve levels and the log file paths
            config = yaml.load(f, Loader=yaml.UnsafeLoader)['logging']
        config.setdefault('version', 1)
        logging.config.dictConfig(config)
    else:
        logging.basicConfig(level=logging.INFO, stream=sys.stdout)

    satrag_logger = logging.getLogger(SATRAG_LOGGER)

    if custom_config_file and config_file != custom_config_file:
        satrag_logger.error("config_logger could not find conf file '%s'" % custom_config_file)

    if config_file:
        satrag_logger.info("Read logging configuration from: %s" % config_file)
    else:
        print("Configured logging using basicConfig")
        satrag_logger.info("Configured logging using basicConfig")


def print_counts(label, values):
    """print how often each value occurs, most frequent first"""
    print("\n%s:\n%s\n" % (label, pd.Series(list(values), dtype=object).value_counts()))


def write_trace_csv(df, label, index=True):
    """
    Append a DataFrame or Series to <output_dir>/<label>.csv

    The header is written only when the file is new.

    Returns
    -------
    str or None
        the file path, or None when df is not a pandas object
    """
    if isinstance(df, pd.Series):
        df = df.to_frame()
    if not isinstance(df, pd.DataFrame):
        logger.error("write_trace_csv '%s': unexpected type %s" % (label, type(df).__name__))
        return None

    path = log_file_path(label + TRACE_FILE_SUFFIX)
    exists = os.path.isfile(path)

    logger.debug("tracing %s rows to %s" % (len(df), path))
    df.to_csv(path, mode='a' if exists else 'w', index=index, header=not exists)
    return path


def trace_records(records, label):
    """
    Log per-query diagnostics and append them to the label's csv

    Parameters
    ----------
    records : list of dict
        one flat dict per query
    label : str
        trace label, also the csv file name
    """
    if not records or not trace_enabled():
        return

    for r in records:
        trace_logger.debug("%s %s" % (label, r))

    write_trace_csv(pd.DataFrame.from_records(records), label, index=False)
