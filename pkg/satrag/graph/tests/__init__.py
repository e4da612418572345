# satrag
# See full license in LICENSE.txt.
