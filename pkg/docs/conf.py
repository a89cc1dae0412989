extensions = [
    'sphinx.ext.autodoc',
]
source_suffix = '.rst'
master_doc = 'index'

project = 'dqtraj'

autoclass_content = 'both'
html_theme = 'sphinx_rtd_theme'
