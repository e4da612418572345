# satrag
# See full license in LICENSE.txt.

# runs the example end to end from inside the example directory:
#   cd example; python simulation.py

import orca

from satrag import defaults  # noqa: F401
from satrag import tracing
from satrag.providers import Query
from satrag.tracing import print_elapsed_time


def run_model(model_name):
    t0 = print_elapsed_time()
    orca.run([model_name])
    t0 = print_elapsed_time(model_name, t0)


tracing.config_logger()

t0 = print_elapsed_time()

run_model("ingest_corpus")
print(orca.get_injectable("ingest_summary"))

run_model("build_sat_graph")

orca.add_injectable("question", Query("What was the revenue of Northwind Traders in 2019?"))
run_model("answer_query")

orca.add_injectable("question", Query("Why did Northwind Traders revenue fall in 2020?", 1))
run_model("answer_query")

orca.add_injectable("qa_file", "qa.jsonl")
orca.add_injectable("ablation_sweep", True)
run_model("evaluate_qa")

t0 = print_elapsed_time("all models", t0)
