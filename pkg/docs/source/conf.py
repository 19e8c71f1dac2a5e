# Configuration file for the Sphinx documentation builder.
# https://www.sphinx-doc.org/en/master/usage/configuration.html

from pathlib import Path
import sys

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "src"))

project = "lpad"
copyright = "2025, minjae.kim"
author = "minjae.kim"

extensions = ["sphinx.ext.autodoc", "sphinx.ext.napoleon"]

autodoc_default_options = {
    "members": True,
    "show-inheritance": True,
}
autodoc_typehints = "description"
add_module_names = False

# Google-style docstrings only
napoleon_numpy_docstring = False

html_theme = "sphinx_rtd_theme"
