import os
import sys
from importlib import metadata as importlib_metadata
from pathlib import Path

project = "driftlab"
copyright = "2026, driftlab developers"

# -- General configuration ---------------------------------------------------
# https://www.sphinx-doc.org/en/master/usage/configuration.html#general-configuration

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
    "sphinx.ext.napoleon",
    "myst_parser",
    "sphinx_autodoc_typehints",
]

intersphinx_mapping = {
    "python": ("https://docs.python.org/3.12", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
    "networkx": ("https://networkx.org/documentation/stable/", None),
}

templates_path = ["_templates"]
exclude_patterns = ["_build", "Thumbs.db", ".*"]


# -- Options for HTML output -------------------------------------------------
# https://www.sphinx-doc.org/en/master/usage/configuration.html#options-for-html-output
html_baseurl = os.environ.get("READTHEDOCS_CANONICAL_URL", "")

html_theme = "sphinx_book_theme"


sys.path.append(Path(__file__).parent.parent.as_posix())


try:
    release = importlib_metadata.version("driftlab")
except importlib_metadata.PackageNotFoundError:
    print("Could not find package version, please install driftlab to build docs")
    release = "0.0.0"

version = release
