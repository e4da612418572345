# satrag
# See full license in LICENSE.txt.

from . import ingest
from . import build
from . import query
from . import evaluate
from . import generate
