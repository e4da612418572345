# satrag
# See full license in LICENSE.txt.

from . import misc
from . import tables
from . import models
