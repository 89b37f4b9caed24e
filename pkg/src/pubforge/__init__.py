"""Publication submission toolkit.

Covers the desk work between a finished manuscript and a published paper:
building the author list from the membership database, flattening LaTeX
projects for submission, running manuscript checks, reconciling journal
proofs against the canonical author list, and tracking the approval
workflow.
"""

__version__ = "0.1.0"
