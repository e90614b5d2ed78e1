"""gaplab: a metric-TSP integrality-gap laboratory.

Pipeline: subtour LP -> node split -> max-entropy tree sampling ->
O-join matching, with a near-min-cut atlas (atoms, polygons) and the
slack-vector audit machinery on top.
"""

__version__ = "0.1.0"
