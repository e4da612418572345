# satrag
# See full license in LICENSE.txt.

from . import corpus
from . import sat_graph
