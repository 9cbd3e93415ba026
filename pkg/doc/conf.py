import os
import sys
sys.path.insert(0, os.path.abspath('..'))

extensions = ['sphinx.ext.autodoc']
source_suffix = ['.rst', '.md']
source_parsers = {'.md': 'recommonmark.parser.CommonMarkParser'}

project = 'GASMAN'
copyright = '2026 GASMAN contributors'
version = release = '0.1.0'

html_theme_options = {
    'logo_name': True,
    'description': 'Graph-based authentication simulator for mobile ad-hoc networks'
}
html_sidebars = {'**': ['about.html', 'navigation.html', 'searchbox.html']}
html_show_sourcelink = False

autodoc_member_order = 'bysource'
