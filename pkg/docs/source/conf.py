# -*- coding: utf-8 -*-
#
# voroperc documentation build configuration file.

import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join('..', '..')))

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.doctest', 'sphinx.ext.intersphinx',
              'sphinx.ext.coverage', 'sphinx.ext.viewcode', 'sphinx.ext.mathjax']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'voroperc'
copyright = u'2026, The voroperc developers'

version = '0.1'
release = '0.1.0'

exclude_patterns = []
pygments_style = 'sphinx'
autodoc_member_order = 'bysource'

html_theme = 'nature'
html_static_path = []
htmlhelp_basename = 'voropercdoc'

latex_documents = [
    ('index', 'voroperc.tex', u'voroperc Documentation', u'The voroperc developers', 'manual'),
]

man_pages = [
    ('index', 'voroperc', u'voroperc Documentation', [u'The voroperc developers'], 1)
]

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable', None),
    'scipy': ('https://docs.scipy.org/doc/scipy', None),
    'networkx': ('https://networkx.org/documentation/stable', None),
}
