import os
import sys

# allow running the tests from a checkout without installing the package
_src = os.path.join(os.path.dirname(__file__), "..", "src")
if os.path.isdir(_src):
    sys.path.insert(0, os.path.abspath(_src))
