# -*- coding: utf-8 -*-
#
# satrag documentation build configuration file
#
# This file is execfile()d with the current directory set to its
# containing dir.

import sys
import os

import sphinx_rtd_theme

sys.path.insert(0, os.path.abspath('..'))

# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'numpydoc',
    'sphinx.ext.autosummary'
]

numpydoc_show_class_members = False

templates_path = ['_templates']

source_suffix = '.rst'

master_doc = 'index'

project = u'satrag'
copyright = u'contributing authors'

version = '0.1'
release = '0.1.0'

exclude_patterns = ['_build']

pygments_style = 'sphinx'

# -- Options for HTML output ----------------------------------------------

html_theme = "sphinx_rtd_theme"
html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]

html_static_path = ['_static']

htmlhelp_basename = 'satragdoc'

# -- Options for LaTeX output ---------------------------------------------

latex_elements = {
}

latex_documents = [
  ('index', 'satrag.tex', u'satrag Documentation',
   u'contributing authors', 'manual'),
]

# -- Options for manual page output ---------------------------------------

man_pages = [
    ('index', 'satrag', u'satrag Documentation',
     [u'contributing authors'], 1)
]
